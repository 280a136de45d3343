#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "asyncfl/coreset.hpp"
#include "asyncfl/data.hpp"
#include "asyncfl/nn.hpp"
#include "asyncfl/protocol.hpp"

namespace asyncfl {

/// The four baselines compared by the harness.
enum class RunStrategy { standalone, ideal, fedavg_dropout, proxy };

const char* to_string(RunStrategy s);
std::optional<RunStrategy> parse_run_strategy(std::string_view name);
/// All four, in CSV sort order.
std::vector<RunStrategy> all_run_strategies();

struct TaskConfig {
  TaskKind kind = TaskKind::rotated;
  int classes = 4;
  int per_class = 250;
  int dim = 2;
  double spread = 0.3;
  double angle = 90.0;
  int clients = 2;
  double test_fraction = 0.2;
  /// When set, the base dataset is read from this CSV instead of generated.
  std::string csv;

  friend bool operator==(const TaskConfig&, const TaskConfig&) = default;
};

struct ScheduleConfig {
  enum class Kind { always, drop_after, explicit_slots };
  Kind kind = Kind::always;
  int client = 0;
  /// 1-based: the client takes part in slots 1..after_slot.
  int after_slot = 0;
  /// 1-based connected slots per client (explicit_slots only).
  std::vector<std::vector<int>> connected;

  AvailabilitySchedule build(int n_clients, int total_slots) const;

  friend bool operator==(const ScheduleConfig&, const ScheduleConfig&) = default;
};

struct ExperimentConfig {
  Seed seed{0};
  int n_seeds = 5;
  bool parallel = false;
  TaskConfig task;
  std::vector<int> hidden{32};
  Activation activation = Activation::relu;
  HyperParams hp;
  int rounds_per_slot = 10;
  int total_slots = 12;
  double coreset_fraction = 0.05;
  CoresetMethod coreset_method = CoresetMethod::stratified;
  ScheduleConfig schedule;
  std::vector<RunStrategy> strategies = all_run_strategies();

  void validate() const;
  ModelSpec model_spec(int input_dim, int class_count) const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// accuracy[slot][client]; slot 0 is the state after the first slot.
using AccuracyTable = std::vector<std::vector<double>>;

struct SlotMetrics {
  std::string strategy;
  int slot = 0;  // 1-based
  int client_id = 0;
  double acc_mean = 0.0;
  double acc_std = 0.0;

  friend bool operator==(const SlotMetrics&, const SlotMetrics&) = default;
};

SplitTask build_task(const ExperimentConfig& config);

/// Seed of replicate `index` under the config's master seed.
Seed replicate_seed(const ExperimentConfig& config, int index);

/// Each client trains alone for rounds_per_slot * total_slots rounds of tau
/// steps, using the same initial params and per-round seeds as the
/// collaborative runs; it is scored on its own test set after every slot.
AccuracyTable run_standalone(const ExperimentConfig& config, const SplitTask& task, Seed seed);
AccuracyTable run_standalone(const ExperimentConfig& config, Seed seed);

struct CollaborativeRun {
  AccuracyTable accuracy;
  ServerState server;
};

/// ideal: fedavg under full connectivity; fedavg_dropout: subset aggregation
/// under the configured schedule; proxy: coreset proxies under the schedule.
/// The global params are scored on every client's test set after each slot.
CollaborativeRun run_collaborative(const ExperimentConfig& config, const SplitTask& task, RunStrategy strategy, Seed seed);
CollaborativeRun run_collaborative(const ExperimentConfig& config, RunStrategy strategy, Seed seed);

/// Mean and sample standard deviation (n-1; 0 for one run) per slot and client.
std::vector<SlotMetrics> summarize(RunStrategy strategy, const std::vector<AccuracyTable>& runs);

/// Runs every configured strategy over n_seeds replicates and summarizes.
std::vector<SlotMetrics> run_experiment(const ExperimentConfig& config, const std::vector<RunStrategy>& strategies);

inline constexpr const char* kMetricsHeader = "strategy,slot,client_id,acc_mean,acc_std";

/// Header plus one row per metric, sorted by (strategy, slot, client_id), 6 decimals.
void export_metrics(std::vector<SlotMetrics> metrics, const std::filesystem::path& path);
std::string format_metrics(std::vector<SlotMetrics> metrics);

/// Parses a metrics CSV; IoError names the offending line.
std::vector<SlotMetrics> load_metrics(const std::filesystem::path& path);

struct Checkpoint {
  ServerState server;
  /// Seed that, together with server.round_cursor, positions every random stream.
  Seed run_seed{};

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

void export_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace asyncfl
