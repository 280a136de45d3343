#include "asyncfl/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace asyncfl {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& path, const std::string& what) const {
    std::string where = source_;
    if (node.IsDefined() && node.Mark().line >= 0) where += ":" + std::to_string(node.Mark().line + 1);
    throw ConfigError(where + ": " + path + ": " + what);
  }

  void require_map(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) const {
    if (!node.IsMap()) fail(node, path.empty() ? "<root>" : path, "expected a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.contains(key)) fail(kv.first, join(path, key), "unknown field");
    }
  }

  template <typename T>
  void read(const YAML::Node& parent, const std::string& path, const std::string& key, T& value) const {
    const YAML::Node node = parent[key];
    if (!node.IsDefined()) return;
    try {
      value = node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, join(path, key), "wrong type");
    }
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::string source_;
};

template <typename Enum>
Enum pick(const Reader& r, const YAML::Node& node, const std::string& path,
          std::initializer_list<std::pair<const char*, Enum>> options) {
  std::string text;
  try {
    text = node.as<std::string>();
  } catch (const YAML::Exception&) {
    r.fail(node, path, "expected a string");
  }
  std::string names;
  for (const auto& [name, value] : options) {
    if (text == name) return value;
    names += names.empty() ? name : std::string(", ") + name;
  }
  r.fail(node, path, "'" + text + "' is not one of: " + names);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": syntax error: " + e.msg);
  }
  Reader r(source);
  ExperimentConfig c;
  if (root.IsNull()) return c;
  r.require_map(root, "", {"seed", "n_seeds", "parallel", "task", "model", "training", "coreset", "schedule", "strategies"});

  r.read(root, "", "seed", c.seed.value);
  r.read(root, "", "n_seeds", c.n_seeds);
  r.read(root, "", "parallel", c.parallel);
  if (c.n_seeds < 1) r.fail(root["n_seeds"], "n_seeds", "must be >= 1");

  if (const YAML::Node task = root["task"]; task.IsDefined()) {
    r.require_map(task, "task", {"kind", "classes", "per_class", "dim", "spread", "angle", "clients", "test_fraction", "csv"});
    auto& t = c.task;
    if (task["kind"].IsDefined())
      t.kind = pick<TaskKind>(r, task["kind"], "task.kind",
                              {{"rotated", TaskKind::rotated}, {"split_class", TaskKind::split_class}, {"iid", TaskKind::iid}});
    r.read(task, "task", "classes", t.classes);
    r.read(task, "task", "per_class", t.per_class);
    r.read(task, "task", "dim", t.dim);
    r.read(task, "task", "spread", t.spread);
    r.read(task, "task", "angle", t.angle);
    r.read(task, "task", "clients", t.clients);
    r.read(task, "task", "test_fraction", t.test_fraction);
    r.read(task, "task", "csv", t.csv);
    if (t.classes < 2) r.fail(task["classes"], "task.classes", "must be >= 2");
    if (t.per_class < 2) r.fail(task["per_class"], "task.per_class", "must be >= 2");
    if (t.dim < 2) r.fail(task["dim"], "task.dim", "must be >= 2");
    if (!(t.spread > 0)) r.fail(task["spread"], "task.spread", "must be positive");
    if (t.clients < 2) r.fail(task["clients"], "task.clients", "must be >= 2");
    if (!(t.test_fraction > 0 && t.test_fraction < 1)) r.fail(task["test_fraction"], "task.test_fraction", "must lie in (0, 1)");
    if (t.kind == TaskKind::split_class && t.classes % 2 != 0)
      r.fail(task["classes"], "task.classes", "split_class needs an even class count");
  }

  if (const YAML::Node model = root["model"]; model.IsDefined()) {
    r.require_map(model, "model", {"hidden", "activation"});
    r.read(model, "model", "hidden", c.hidden);
    for (int h : c.hidden)
      if (h < 1) r.fail(model["hidden"], "model.hidden", "layer sizes must be >= 1");
    if (model["activation"].IsDefined())
      c.activation = pick<Activation>(r, model["activation"], "model.activation",
                                      {{"relu", Activation::relu}, {"tanh", Activation::tanh}});
  }

  if (const YAML::Node tr = root["training"]; tr.IsDefined()) {
    r.require_map(tr, "training", {"eta", "tau", "tau_prime", "batch_size", "rounds_per_slot", "total_slots"});
    r.read(tr, "training", "eta", c.hp.eta);
    r.read(tr, "training", "tau", c.hp.tau);
    c.hp.tau_prime = c.hp.tau;
    r.read(tr, "training", "tau_prime", c.hp.tau_prime);
    r.read(tr, "training", "batch_size", c.hp.batch_size);
    r.read(tr, "training", "rounds_per_slot", c.rounds_per_slot);
    r.read(tr, "training", "total_slots", c.total_slots);
    if (!(c.hp.eta > 0)) r.fail(tr["eta"], "training.eta", "must be positive");
    for (const char* key : {"tau", "tau_prime", "batch_size", "rounds_per_slot", "total_slots"})
      if (tr[key].IsDefined() && tr[key].as<long long>() < 1) r.fail(tr[key], std::string("training.") + key, "must be >= 1");
  }

  if (const YAML::Node cs = root["coreset"]; cs.IsDefined()) {
    r.require_map(cs, "coreset", {"fraction", "method"});
    r.read(cs, "coreset", "fraction", c.coreset_fraction);
    if (!(c.coreset_fraction > 0 && c.coreset_fraction <= 1)) r.fail(cs["fraction"], "coreset.fraction", "must lie in (0, 1]");
    if (cs["method"].IsDefined())
      c.coreset_method = pick<CoresetMethod>(r, cs["method"], "coreset.method",
                                             {{"uniform", CoresetMethod::uniform}, {"stratified", CoresetMethod::stratified}});
  }

  if (const YAML::Node sc = root["schedule"]; sc.IsDefined()) {
    r.require_map(sc, "schedule", {"kind", "client", "after_slot", "connected"});
    auto& s = c.schedule;
    if (sc["kind"].IsDefined())
      s.kind = pick<ScheduleConfig::Kind>(r, sc["kind"], "schedule.kind",
                                          {{"always", ScheduleConfig::Kind::always},
                                           {"drop_after", ScheduleConfig::Kind::drop_after},
                                           {"explicit", ScheduleConfig::Kind::explicit_slots}});
    r.read(sc, "schedule", "client", s.client);
    r.read(sc, "schedule", "after_slot", s.after_slot);
    r.read(sc, "schedule", "connected", s.connected);
    const int n_clients = c.task.kind == TaskKind::iid ? c.task.clients : 2;
    if (s.kind == ScheduleConfig::Kind::drop_after) {
      if (s.client < 0 || s.client >= n_clients) r.fail(sc["client"], "schedule.client", "no such client");
      if (s.after_slot < 0 || s.after_slot > c.total_slots)
        r.fail(sc["after_slot"], "schedule.after_slot", "must lie in [0, total_slots]");
    }
    if (s.kind == ScheduleConfig::Kind::explicit_slots) {
      if (static_cast<int>(s.connected.size()) != n_clients)
        r.fail(sc["connected"], "schedule.connected", "needs one slot list per client");
      for (const auto& slots : s.connected)
        for (int t : slots)
          if (t < 1 || t > c.total_slots) r.fail(sc["connected"], "schedule.connected", "slot numbers must lie in [1, total_slots]");
    }
  }

  if (const YAML::Node st = root["strategies"]; st.IsDefined()) {
    if (!st.IsSequence() || st.size() == 0) r.fail(st, "strategies", "expected a non-empty list");
    c.strategies.clear();
    for (std::size_t i = 0; i < st.size(); ++i) {
      const std::string path = "strategies[" + std::to_string(i) + "]";
      c.strategies.push_back(pick<RunStrategy>(r, st[i], path,
                                               {{"standalone", RunStrategy::standalone},
                                                {"ideal", RunStrategy::ideal},
                                                {"fedavg_dropout", RunStrategy::fedavg_dropout},
                                                {"proxy", RunStrategy::proxy}}));
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string config_to_yaml(const ExperimentConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << c.seed.value;
  out << YAML::Key << "n_seeds" << YAML::Value << c.n_seeds;
  out << YAML::Key << "parallel" << YAML::Value << c.parallel;

  out << YAML::Key << "task" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << to_string(c.task.kind);
  out << YAML::Key << "classes" << YAML::Value << c.task.classes;
  out << YAML::Key << "per_class" << YAML::Value << c.task.per_class;
  out << YAML::Key << "dim" << YAML::Value << c.task.dim;
  out << YAML::Key << "spread" << YAML::Value << c.task.spread;
  out << YAML::Key << "angle" << YAML::Value << c.task.angle;
  out << YAML::Key << "clients" << YAML::Value << c.task.clients;
  out << YAML::Key << "test_fraction" << YAML::Value << c.task.test_fraction;
  if (!c.task.csv.empty()) out << YAML::Key << "csv" << YAML::Value << c.task.csv;
  out << YAML::EndMap;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "hidden" << YAML::Value << YAML::Flow << c.hidden;
  out << YAML::Key << "activation" << YAML::Value << to_string(c.activation);
  out << YAML::EndMap;

  out << YAML::Key << "training" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "eta" << YAML::Value << c.hp.eta;
  out << YAML::Key << "tau" << YAML::Value << c.hp.tau;
  out << YAML::Key << "tau_prime" << YAML::Value << c.hp.tau_prime;
  out << YAML::Key << "batch_size" << YAML::Value << c.hp.batch_size;
  out << YAML::Key << "rounds_per_slot" << YAML::Value << c.rounds_per_slot;
  out << YAML::Key << "total_slots" << YAML::Value << c.total_slots;
  out << YAML::EndMap;

  out << YAML::Key << "coreset" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "fraction" << YAML::Value << c.coreset_fraction;
  out << YAML::Key << "method" << YAML::Value << to_string(c.coreset_method);
  out << YAML::EndMap;

  out << YAML::Key << "schedule" << YAML::Value << YAML::BeginMap;
  switch (c.schedule.kind) {
    case ScheduleConfig::Kind::always: out << YAML::Key << "kind" << YAML::Value << "always"; break;
    case ScheduleConfig::Kind::drop_after:
      out << YAML::Key << "kind" << YAML::Value << "drop_after";
      out << YAML::Key << "client" << YAML::Value << c.schedule.client;
      out << YAML::Key << "after_slot" << YAML::Value << c.schedule.after_slot;
      break;
    case ScheduleConfig::Kind::explicit_slots:
      out << YAML::Key << "kind" << YAML::Value << "explicit";
      out << YAML::Key << "connected" << YAML::Value << YAML::BeginSeq;
      for (const auto& slots : c.schedule.connected) out << YAML::Flow << slots;
      out << YAML::EndSeq;
      break;
  }
  out << YAML::EndMap;

  out << YAML::Key << "strategies" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto s : c.strategies) out << to_string(s);
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace asyncfl
