#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "asyncfl/cli.hpp"
#include "helpers.hpp"

namespace asyncfl {
namespace {

using testing::kTinyYaml;
using testing::read_file;
using testing::scratch_dir;
using testing::write_file;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::filesystem::path& config, const std::filesystem::path& out_dir) {
  std::ostringstream out, err;
  const int code = cli::cmd_run(config, out_dir, std::nullopt, out, err);
  return {code, out.str(), err.str()};
}

Result compare(const std::filesystem::path& config, const std::filesystem::path& out_dir,
               std::vector<std::string> strategies = {}, std::optional<std::uint64_t> seed = std::nullopt) {
  std::ostringstream out, err;
  const int code = cli::cmd_compare(config, out_dir, strategies, seed, out, err);
  return {code, out.str(), err.str()};
}

Result report(const std::filesystem::path& csv) {
  std::ostringstream out, err;
  const int code = cli::cmd_report(csv, out, err);
  return {code, out.str(), err.str()};
}

TEST(Cli, RunWritesMetricsAndManifest) {
  const auto dir = scratch_dir();
  write_file(dir / "exp.yaml", kTinyYaml);
  const auto r = run(dir / "exp.yaml", dir / "out");
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const std::string csv = read_file(dir / "out" / "metrics.csv");
  EXPECT_EQ(csv.rfind("strategy,slot,client_id,acc_mean,acc_std\n", 0), 0u);
  // 4 strategies x 4 slots x 2 clients, plus the header.
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 33);
  EXPECT_NE(read_file(dir / "out" / "manifest.yaml").find("master_seed: 11"), std::string::npos);
}

TEST(Cli, MissingConfigIsUsageError) {
  const auto dir = scratch_dir();
  const auto r = run(dir / "nope.yaml", dir / "out");
  EXPECT_EQ(r.code, cli::kUsageError);
  EXPECT_NE(r.err.find((dir / "nope.yaml").string()), std::string::npos) << r.err;
}

TEST(Cli, InvalidConfigIsUsageError) {
  const auto dir = scratch_dir();
  write_file(dir / "exp.yaml", "seed: 1\ntask: {kind: split_class, classes: 3}\n");
  const auto r = run(dir / "exp.yaml", dir / "out");
  EXPECT_EQ(r.code, cli::kUsageError);
  EXPECT_NE(r.err.find("task.classes"), std::string::npos) << r.err;
}

TEST(Cli, RuntimeFailureIsExitOne) {
  const auto dir = scratch_dir();
  write_file(dir / "exp.yaml", "task: {kind: iid, classes: 2, csv: " + (dir / "absent.csv").string() + "}\n");
  const auto r = run(dir / "exp.yaml", dir / "out");
  EXPECT_EQ(r.code, cli::kRuntimeError);
  EXPECT_NE(r.err.find("absent.csv"), std::string::npos) << r.err;
}

TEST(Cli, CompareIsByteIdenticalAcrossReruns) {
  const auto dir = scratch_dir();
  write_file(dir / "exp.yaml", kTinyYaml);
  ASSERT_EQ(compare(dir / "exp.yaml", dir / "a").code, cli::kOk);
  ASSERT_EQ(compare(dir / "exp.yaml", dir / "b").code, cli::kOk);
  EXPECT_EQ(read_file(dir / "a" / "metrics.csv"), read_file(dir / "b" / "metrics.csv"));
  EXPECT_FALSE(read_file(dir / "a" / "summary.txt").empty());

  ASSERT_EQ(compare(dir / "exp.yaml", dir / "c", {}, 12).code, cli::kOk);
  EXPECT_NE(read_file(dir / "a" / "metrics.csv"), read_file(dir / "c" / "metrics.csv"));
}

TEST(Cli, CompareStrategyFilter) {
  const auto dir = scratch_dir();
  write_file(dir / "exp.yaml", kTinyYaml);
  const auto r = compare(dir / "exp.yaml", dir / "out", {"ideal", "standalone"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto rows = load_metrics(dir / "out" / "metrics.csv");
  EXPECT_EQ(rows.size(), 16u);
  for (const auto& m : rows) EXPECT_TRUE(m.strategy == "ideal" || m.strategy == "standalone");
  EXPECT_EQ(compare(dir / "exp.yaml", dir / "out", {"ideal", "fedprox"}).code, cli::kUsageError);
}

TEST(Cli, ReportIgnoresRowOrder) {
  const auto dir = scratch_dir();
  write_file(dir / "exp.yaml", kTinyYaml);
  ASSERT_EQ(compare(dir / "exp.yaml", dir / "out").code, cli::kOk);
  const std::string csv = read_file(dir / "out" / "metrics.csv");
  std::istringstream in(csv);
  std::string header, line;
  std::getline(in, header);
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  std::reverse(lines.begin(), lines.end());
  std::string shuffled = header + "\n";
  for (const auto& l : lines) shuffled += l + "\n";
  write_file(dir / "shuffled.csv", shuffled);

  const auto a = report(dir / "out" / "metrics.csv");
  const auto b = report(dir / "shuffled.csv");
  ASSERT_EQ(a.code, cli::kOk);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("best strategy per client"), std::string::npos);
  EXPECT_NE(a.out.find("client 1:"), std::string::npos);
}

TEST(Cli, ReportEdgeCases) {
  const auto dir = scratch_dir();
  write_file(dir / "empty.csv", "strategy,slot,client_id,acc_mean,acc_std\n");
  const auto empty = report(dir / "empty.csv");
  EXPECT_EQ(empty.code, cli::kOk);
  EXPECT_NE(empty.out.find("no data"), std::string::npos);

  write_file(dir / "bad.csv", "strategy,slot,client_id,acc_mean,acc_std\nideal,x,0,0.5,0\n");
  const auto bad = report(dir / "bad.csv");
  EXPECT_EQ(bad.code, cli::kUsageError);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos);

  EXPECT_EQ(report(dir / "missing.csv").code, cli::kUsageError);
}

TEST(Cli, MainParsesArguments) {
  const auto dir = scratch_dir();
  write_file(dir / "exp.yaml", kTinyYaml);
  const std::string cfg = (dir / "exp.yaml").string();
  const std::string out = (dir / "out").string();
  auto call = [](std::vector<std::string> args) {
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::main(static_cast<int>(argv.size()), argv.data());
  };
  EXPECT_EQ(call({"asyncfl", "run", cfg, "--out", out, "--seed", "4"}), cli::kOk);
  EXPECT_EQ(call({"asyncfl", "report", out + "/metrics.csv"}), cli::kOk);
  EXPECT_EQ(call({"asyncfl", "compare", cfg, "--out", out, "--strategies", "proxy,ideal"}), cli::kOk);
  EXPECT_EQ(call({"asyncfl"}), cli::kUsageError);
  EXPECT_EQ(call({"asyncfl", "run"}), cli::kUsageError);
  EXPECT_EQ(call({"asyncfl", "frobnicate"}), cli::kUsageError);
  EXPECT_EQ(call({"asyncfl", "run", cfg, "--seed", "-3", "--out", out}), cli::kUsageError);
}

}  // namespace
}  // namespace asyncfl
