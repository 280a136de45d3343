#include "asyncfl/cli.hpp"

int main(int argc, char** argv) { return asyncfl::cli::main(argc, argv); }
