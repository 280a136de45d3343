#include "asyncfl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <tuple>

#include "asyncfl/error.hpp"

namespace asyncfl {

const char* to_string(RunStrategy s) {
  switch (s) {
    case RunStrategy::standalone: return "standalone";
    case RunStrategy::ideal: return "ideal";
    case RunStrategy::fedavg_dropout: return "fedavg_dropout";
    case RunStrategy::proxy: return "proxy";
  }
  return "?";
}

std::optional<RunStrategy> parse_run_strategy(std::string_view name) {
  for (auto s : all_run_strategies())
    if (name == to_string(s)) return s;
  return std::nullopt;
}

std::vector<RunStrategy> all_run_strategies() {
  return {RunStrategy::fedavg_dropout, RunStrategy::ideal, RunStrategy::proxy, RunStrategy::standalone};
}

AvailabilitySchedule ScheduleConfig::build(int n_clients, int total_slots) const {
  switch (kind) {
    case Kind::always: return AvailabilitySchedule::always(n_clients, total_slots);
    case Kind::drop_after:
      return AvailabilitySchedule::drop_after(n_clients, total_slots, client, after_slot - 1);
    case Kind::explicit_slots: {
      if (static_cast<int>(connected.size()) != n_clients)
        throw InvalidArgument("explicit schedule lists " + std::to_string(connected.size()) + " clients, task has " +
                              std::to_string(n_clients));
      AvailabilitySchedule s(n_clients, total_slots);
      for (int c = 0; c < n_clients; ++c)
        for (int slot : connected[static_cast<std::size_t>(c)]) s.set_connected(c, slot - 1);
      return s;
    }
  }
  throw InvalidArgument("unknown schedule kind");
}

void ExperimentConfig::validate() const {
  hp.validate();
  if (!(hp.eta > 0.0)) throw InvalidArgument("eta must be positive");
  if (n_seeds < 1) throw InvalidArgument("n_seeds must be >= 1");
  if (total_slots < 1) throw InvalidArgument("total_slots must be >= 1");
  if (rounds_per_slot < 1) throw InvalidArgument("rounds_per_slot must be >= 1");
  for (int h : hidden)
    if (h < 1) throw InvalidArgument("hidden layer sizes must be >= 1");
  CoresetPolicy{coreset_fraction, coreset_method, {}}.validate();
  if (strategies.empty()) throw InvalidArgument("at least one strategy is required");
}

ModelSpec ExperimentConfig::model_spec(int input_dim, int class_count) const {
  ModelSpec spec;
  spec.layer_sizes.push_back(input_dim);
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
  spec.layer_sizes.push_back(class_count);
  spec.activation = activation;
  spec.validate();
  return spec;
}

SplitTask build_task(const ExperimentConfig& config) {
  const TaskConfig& t = config.task;
  const Seed task_seed = derive(config.seed, "task");
  Dataset base = t.csv.empty() ? gen_blobs(t.classes, t.per_class, t.dim, t.spread, derive(task_seed, "base"))
                               : load_csv(t.csv, t.classes);
  switch (t.kind) {
    case TaskKind::rotated: return make_rotated_task(base, t.angle, t.test_fraction, task_seed);
    case TaskKind::split_class: return make_split_class_task(base, t.test_fraction, task_seed);
    case TaskKind::iid: return make_iid_task(base, t.clients, t.test_fraction, task_seed);
  }
  throw InvalidArgument("unknown task kind");
}

Seed replicate_seed(const ExperimentConfig& config, int index) {
  return derive(config.seed, "replicate", static_cast<std::uint64_t>(index));
}

namespace {

ModelSpec spec_for(const ExperimentConfig& config, const SplitTask& task) {
  if (task.clients.empty()) throw InvalidArgument("task has no clients");
  return config.model_spec(static_cast<int>(task.clients.front().train.dim()), task.class_count);
}

Params initial_params(const ExperimentConfig& config, const SplitTask& task, Seed seed) {
  return init_params(spec_for(config, task), derive(seed, "model"));
}

std::vector<ClientState> make_clients(const ExperimentConfig& config, const SplitTask& task, const Params& initial, Seed seed) {
  std::vector<ClientState> clients;
  for (int i = 0; i < task.n_clients(); ++i) {
    const auto& data = task.clients[static_cast<std::size_t>(i)];
    clients.push_back(ClientState{
        .id = i,
        .train = data.train,
        .test = data.test,
        .coreset_policy = {config.coreset_fraction, config.coreset_method, derive(seed, "coreset", static_cast<std::uint64_t>(i))},
        .local_params = initial,
    });
  }
  return clients;
}

}  // namespace

AccuracyTable run_standalone(const ExperimentConfig& config, const SplitTask& task, Seed seed) {
  config.validate();
  const Params initial = initial_params(config, task, seed);
  const int n = task.n_clients();
  std::vector<Params> params(static_cast<std::size_t>(n), initial);
  AccuracyTable table;
  std::uint64_t round = 0;
  for (int slot = 0; slot < config.total_slots; ++slot) {
    for (int r = 0; r < config.rounds_per_slot; ++r, ++round)
      for (int i = 0; i < n; ++i) {
        auto& p = params[static_cast<std::size_t>(i)];
        p = sgd_steps(std::move(p), task.clients[static_cast<std::size_t>(i)].train, config.hp, config.hp.tau,
                      round_seed(seed, round, i));
      }
    std::vector<double> row;
    for (int i = 0; i < n; ++i)
      row.push_back(evaluate(params[static_cast<std::size_t>(i)], task.clients[static_cast<std::size_t>(i)].test));
    table.push_back(std::move(row));
  }
  return table;
}

AccuracyTable run_standalone(const ExperimentConfig& config, Seed seed) {
  return run_standalone(config, build_task(config), seed);
}

CollaborativeRun run_collaborative(const ExperimentConfig& config, const SplitTask& task, RunStrategy strategy, Seed seed) {
  config.validate();
  const int n = task.n_clients();
  Strategy protocol_strategy = Strategy::fedavg;
  AvailabilitySchedule schedule = AvailabilitySchedule::always(n, config.total_slots);
  switch (strategy) {
    case RunStrategy::ideal: break;
    case RunStrategy::fedavg_dropout:
      protocol_strategy = Strategy::subset;
      schedule = config.schedule.build(n, config.total_slots);
      break;
    case RunStrategy::proxy:
      protocol_strategy = Strategy::proxy;
      schedule = config.schedule.build(n, config.total_slots);
      break;
    case RunStrategy::standalone: throw InvalidArgument("run_collaborative: standalone is not a collaborative strategy");
  }

  const Params initial = initial_params(config, task, seed);
  std::vector<ClientState> clients = make_clients(config, task, initial, seed);
  ServerState server = make_server(initial, config.hp, protocol_strategy, n, config.rounds_per_slot);
  AccuracyTable table;
  for (int slot = 0; slot < config.total_slots; ++slot) {
    server = run_slot(std::move(server), clients, schedule, slot, seed, {.parallel = config.parallel});
    std::vector<double> row;
    for (const auto& c : clients) row.push_back(evaluate(server.global_params, c.test));
    table.push_back(std::move(row));
  }
  return {std::move(table), std::move(server)};
}

CollaborativeRun run_collaborative(const ExperimentConfig& config, RunStrategy strategy, Seed seed) {
  return run_collaborative(config, build_task(config), strategy, seed);
}

std::vector<SlotMetrics> summarize(RunStrategy strategy, const std::vector<AccuracyTable>& runs) {
  if (runs.empty()) throw InvalidArgument("summarize: no runs");
  const std::size_t slots = runs.front().size();
  const std::size_t clients = slots ? runs.front().front().size() : 0;
  for (const auto& run : runs) {
    if (run.size() != slots) throw InvalidArgument("summarize: runs have different slot counts");
    for (const auto& row : run)
      if (row.size() != clients) throw InvalidArgument("summarize: runs have different client counts");
  }

  std::vector<SlotMetrics> out;
  std::vector<double> values(runs.size());
  for (std::size_t t = 0; t < slots; ++t) {
    for (std::size_t c = 0; c < clients; ++c) {
      for (std::size_t r = 0; r < runs.size(); ++r) values[r] = runs[r][t][c];
      // Sorted so the result does not depend on replicate order.
      std::sort(values.begin(), values.end());
      double sum = 0.0;
      for (double v : values) sum += v;
      const double mean = sum / static_cast<double>(values.size());
      double sq = 0.0;
      for (double v : values) sq += (v - mean) * (v - mean);
      const double sd = values.size() > 1 ? std::sqrt(sq / static_cast<double>(values.size() - 1)) : 0.0;
      out.push_back({to_string(strategy), static_cast<int>(t) + 1, static_cast<int>(c), mean, sd});
    }
  }
  return out;
}

std::vector<SlotMetrics> run_experiment(const ExperimentConfig& config, const std::vector<RunStrategy>& strategies) {
  config.validate();
  const SplitTask task = build_task(config);
  std::vector<SlotMetrics> all;
  for (RunStrategy strategy : strategies) {
    auto one = [&](int replicate) {
      const Seed seed = replicate_seed(config, replicate);
      return strategy == RunStrategy::standalone ? run_standalone(config, task, seed)
                                                 : run_collaborative(config, task, strategy, seed).accuracy;
    };
    std::vector<AccuracyTable> runs;
    if (config.parallel) {
      std::vector<std::future<AccuracyTable>> pending;
      for (int s = 0; s < config.n_seeds; ++s) pending.push_back(std::async(std::launch::async, one, s));
      for (auto& f : pending) runs.push_back(f.get());
    } else {
      for (int s = 0; s < config.n_seeds; ++s) runs.push_back(one(s));
    }
    auto metrics = summarize(strategy, runs);
    all.insert(all.end(), metrics.begin(), metrics.end());
  }
  return all;
}

std::string format_metrics(std::vector<SlotMetrics> metrics) {
  std::sort(metrics.begin(), metrics.end(), [](const SlotMetrics& a, const SlotMetrics& b) {
    return std::tie(a.strategy, a.slot, a.client_id) < std::tie(b.strategy, b.slot, b.client_id);
  });
  std::string out = kMetricsHeader;
  out += '\n';
  char buf[128];
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof buf, ",%d,%d,%.6f,%.6f\n", m.slot, m.client_id, m.acc_mean, m.acc_std);
    out += m.strategy;
    out += buf;
  }
  return out;
}

void export_metrics(std::vector<SlotMetrics> metrics, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write metrics to " + path.string());
  out << format_metrics(std::move(metrics));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<SlotMetrics> load_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw IoError(path.string() + ": line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader) throw IoError(path.string() + ": line 1: header must be '" + std::string(kMetricsHeader) + "'");

  std::vector<SlotMetrics> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fail = [&](const std::string& what) {
      return IoError(path.string() + ": line " + std::to_string(line_no) + ": " + what);
    };
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 5) throw fail("expected 5 fields, found " + std::to_string(fields.size()));
    SlotMetrics m;
    m.strategy = fields[0];
    if (!parse_run_strategy(m.strategy)) throw fail("unknown strategy '" + m.strategy + "'");
    try {
      std::size_t used = 0;
      m.slot = std::stoi(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("slot");
      m.client_id = std::stoi(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("client_id");
      m.acc_mean = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("acc_mean");
      m.acc_std = std::stod(fields[4], &used);
      if (used != fields[4].size()) throw std::invalid_argument("acc_std");
    } catch (const std::exception&) {
      throw fail("malformed numeric field");
    }
    if (m.slot < 1 || m.client_id < 0) throw fail("slot must be >= 1 and client_id >= 0");
    if (!(m.acc_mean >= 0.0 && m.acc_mean <= 1.0) || !(m.acc_std >= 0.0)) throw fail("accuracy values out of range");
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace asyncfl
