#include "asyncfl/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "asyncfl/config.hpp"
#include "asyncfl/error.hpp"

namespace asyncfl::cli {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

std::string manifest(const ExperimentConfig& config, const std::filesystem::path& config_path) {
  std::string text = "# resolved experiment config\n";
  text += "# source: " + config_path.filename().string() + "\n";
  text += "master_seed: " + std::to_string(config.seed.value) + "\n";
  text += "config:\n";
  std::istringstream body(config_to_yaml(config));
  for (std::string line; std::getline(body, line);) text += "  " + line + "\n";
  return text;
}

// Shared body of run and compare.
int execute(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
            std::optional<std::vector<RunStrategy>> strategies, std::optional<std::uint64_t> seed, bool with_table,
            std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
    if (seed) config.seed = Seed{*seed};
    if (strategies) config.strategies = *strategies;
    config.validate();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const InvalidArgument& e) {
    err << "error: " << config_path.string() << ": " << e.what() << '\n';
    return kUsageError;
  }

  try {
    std::filesystem::create_directories(out_dir);
    const auto metrics = run_experiment(config, config.strategies);
    export_metrics(metrics, out_dir / "metrics.csv");
    write_text(out_dir / "manifest.yaml", manifest(config, config_path));
    if (with_table) {
      const std::string table = final_slot_table(metrics);
      write_text(out_dir / "summary.txt", table);
      out << table;
    }
    out << "wrote " << (out_dir / "metrics.csv").string() << '\n';
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

std::optional<std::uint64_t> as_seed(const std::optional<std::string>& text) {
  if (!text) return std::nullopt;
  return std::stoull(*text);
}

}  // namespace

std::string final_slot_table(const std::vector<SlotMetrics>& metrics) {
  std::map<std::string, int> last_slot;
  std::set<int> clients;
  for (const auto& m : metrics) {
    last_slot[m.strategy] = std::max(last_slot[m.strategy], m.slot);
    clients.insert(m.client_id);
  }
  std::map<std::pair<std::string, int>, const SlotMetrics*> final_rows;
  for (const auto& m : metrics)
    if (m.slot == last_slot[m.strategy]) final_rows[{m.strategy, m.client_id}] = &m;

  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-16s%6s", "strategy", "slot");
  os << buf;
  for (int c : clients) {
    std::snprintf(buf, sizeof buf, "  %19s", ("client " + std::to_string(c)).c_str());
    os << buf;
  }
  os << '\n';
  for (const auto& [strategy, slot] : last_slot) {
    std::snprintf(buf, sizeof buf, "%-16s%6d", strategy.c_str(), slot);
    os << buf;
    for (int c : clients) {
      const auto it = final_rows.find({strategy, c});
      if (it == final_rows.end())
        std::snprintf(buf, sizeof buf, "  %19s", "-");
      else
        std::snprintf(buf, sizeof buf, "  %10.4f +- %6.4f", it->second->acc_mean, it->second->acc_std);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
            std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
  return execute(config_path, out_dir, std::nullopt, seed, false, out, err);
}

int cmd_compare(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                const std::vector<std::string>& strategies, std::optional<std::uint64_t> seed, std::ostream& out,
                std::ostream& err) {
  std::vector<RunStrategy> chosen;
  if (strategies.empty()) {
    chosen = all_run_strategies();
  } else {
    for (const auto& name : strategies) {
      const auto s = parse_run_strategy(name);
      if (!s) {
        err << "error: unknown strategy '" << name << "' (expected standalone, ideal, fedavg_dropout, proxy)\n";
        return kUsageError;
      }
      if (std::find(chosen.begin(), chosen.end(), *s) == chosen.end()) chosen.push_back(*s);
    }
  }
  return execute(config_path, out_dir, chosen, seed, true, out, err);
}

int cmd_report(const std::filesystem::path& csv_path, std::ostream& out, std::ostream& err) {
  std::vector<SlotMetrics> metrics;
  try {
    metrics = load_metrics(csv_path);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  if (metrics.empty()) {
    out << "no data in " << csv_path.string() << '\n';
    return kOk;
  }
  std::sort(metrics.begin(), metrics.end(), [](const SlotMetrics& a, const SlotMetrics& b) {
    return std::tie(a.strategy, a.slot, a.client_id) < std::tie(b.strategy, b.slot, b.client_id);
  });
  out << "final-slot accuracy (mean +- std)\n" << final_slot_table(metrics) << '\n';

  std::map<std::string, int> last_slot;
  for (const auto& m : metrics) last_slot[m.strategy] = std::max(last_slot[m.strategy], m.slot);
  std::map<int, const SlotMetrics*> best;
  for (const auto& m : metrics) {
    if (m.slot != last_slot[m.strategy]) continue;
    auto& b = best[m.client_id];
    if (!b || m.acc_mean > b->acc_mean) b = &m;
  }
  out << "best strategy per client\n";
  char buf[96];
  for (const auto& [client, m] : best) {
    std::snprintf(buf, sizeof buf, "  client %d: %s (%.4f)\n", client, m->strategy.c_str(), m->acc_mean);
    out << buf;
  }
  return kOk;
}

int main(int argc, char** argv) {
  CLI::App app{"Slot-based federated learning simulator with coreset proxies for disconnected clients"};
  app.require_subcommand(1);

  const char* env_out = std::getenv(kOutDirEnv);
  const std::string out_help = std::string("Output directory (default: $") + kOutDirEnv + ")";

  std::string config_path, out_dir = env_out ? env_out : "", csv_path, strategies_text;
  std::optional<std::string> seed_text;

  auto* run = app.add_subcommand("run", "Run the strategies listed in a config file");
  run->add_option("config", config_path, "Experiment config (YAML)")->required();
  run->add_option("--out", out_dir, out_help);
  run->add_option("--seed", seed_text, "Override the config's master seed")->check(CLI::NonNegativeNumber);

  auto* compare = app.add_subcommand("compare", "Run standalone, ideal, fedavg_dropout and proxy side by side");
  compare->add_option("config", config_path, "Experiment config (YAML)")->required();
  compare->add_option("--out", out_dir, out_help);
  compare->add_option("--strategies", strategies_text, "Comma-separated subset, e.g. ideal,standalone");
  compare->add_option("--seed", seed_text, "Override the config's master seed")->check(CLI::NonNegativeNumber);

  auto* report = app.add_subcommand("report", "Summarise a metrics CSV");
  report->add_option("csv", csv_path, "metrics.csv written by run or compare")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  if (run->parsed() || compare->parsed()) {
    if (out_dir.empty()) {
      std::cerr << "error: no output directory; pass --out or set " << kOutDirEnv << '\n';
      return kUsageError;
    }
    if (run->parsed()) return cmd_run(config_path, out_dir, as_seed(seed_text), std::cout, std::cerr);
    std::vector<std::string> names;
    std::stringstream ss(strategies_text);
    for (std::string s; std::getline(ss, s, ',');)
      if (!s.empty()) names.push_back(s);
    return cmd_compare(config_path, out_dir, names, as_seed(seed_text), std::cout, std::cerr);
  }
  return cmd_report(csv_path, std::cout, std::cerr);
}

}  // namespace asyncfl::cli
