#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "asyncfl/harness.hpp"

namespace asyncfl::cli {

/// Exit codes shared by every command.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kUsageError = 2;

/// Environment variable consulted when --out is omitted.
inline constexpr const char* kOutDirEnv = "ASYNCFL_OUT_DIR";

/// Runs the config's strategies; writes metrics.csv and manifest.yaml into out_dir.
int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
            std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err);

/// Runs the four baselines (or the `strategies` subset) on one task and
/// schedule; writes metrics.csv, manifest.yaml and summary.txt.
int cmd_compare(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                const std::vector<std::string>& strategies, std::optional<std::uint64_t> seed, std::ostream& out,
                std::ostream& err);

/// Prints the final-slot table and the best strategy per client.
int cmd_report(const std::filesystem::path& csv_path, std::ostream& out, std::ostream& err);

/// Final-slot accuracy per strategy and client, as a text table.
std::string final_slot_table(const std::vector<SlotMetrics>& metrics);

int main(int argc, char** argv);

}  // namespace asyncfl::cli
