#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "asyncfl/harness.hpp"

namespace asyncfl::testing {

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = std::filesystem::temp_directory_path() /
             (std::string("asyncfl_") + info->test_suite_name() + "_" + info->name());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Small split-class experiment, a fraction of a second per strategy.
inline ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.seed = Seed{11};
  c.n_seeds = 2;
  c.task.kind = TaskKind::split_class;
  c.task.classes = 4;
  c.task.per_class = 40;
  c.task.spread = 0.3;
  c.hidden = {8};
  c.hp.tau = c.hp.tau_prime = 2;
  c.hp.batch_size = 8;
  c.rounds_per_slot = 2;
  c.total_slots = 4;
  c.coreset_fraction = 0.2;
  c.schedule.kind = ScheduleConfig::Kind::drop_after;
  c.schedule.client = 0;
  c.schedule.after_slot = 2;
  return c;
}

inline const char* kTinyYaml = R"(seed: 11
n_seeds: 2
task: {kind: split_class, classes: 4, per_class: 40, dim: 2, spread: 0.3}
model: {hidden: [8]}
training: {tau: 2, batch_size: 8, rounds_per_slot: 2, total_slots: 4}
coreset: {fraction: 0.2}
schedule: {kind: drop_after, client: 0, after_slot: 2}
)";

}  // namespace asyncfl::testing
