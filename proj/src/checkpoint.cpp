// Checkpoint file: YAML document. Every real number is written as a C99
// hexadecimal float string ("%a") so a reload reproduces it bit for bit.
//
//   format: asyncfl-checkpoint
//   version: 1
//   run_seed: <uint64>
//   round_cursor: <uint64>
//   strategy: fedavg | subset | proxy
//   n_clients, rounds_per_slot: <int>
//   hp: {eta: <hex>, tau, tau_prime, batch_size}
//   model: {layer_sizes: [...], activation: relu | tanh}
//   global_params: [<hex>, ...]
//   last_params: {<client id>: [<hex>, ...]}
//   coresets: {<client id>: {data_size, class_count, name, rows: [[<hex>..., label], ...]}}

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "asyncfl/error.hpp"
#include "asyncfl/harness.hpp"

namespace asyncfl {

namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double unhex(const YAML::Node& node) {
  const std::string text = node.as<std::string>();
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) throw IoError("checkpoint: bad real '" + text + "'");
  return v;
}

void emit_vector(YAML::Emitter& out, const Params::Vector& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << hex(v(i));
  out << YAML::EndSeq;
}

Params read_params(const ModelSpec& spec, const YAML::Node& node) {
  Params::Vector v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) v(static_cast<Eigen::Index>(i)) = unhex(node[i]);
  return Params(spec, std::move(v));
}

Strategy parse_strategy(const std::string& s) {
  for (auto k : {Strategy::fedavg, Strategy::subset, Strategy::proxy})
    if (s == to_string(k)) return k;
  throw IoError("checkpoint: unknown strategy '" + s + "'");
}

}  // namespace

void export_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const ServerState& s = checkpoint.server;
  const ModelSpec& spec = s.global_params.spec();
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "format" << YAML::Value << "asyncfl-checkpoint";
  out << YAML::Key << "version" << YAML::Value << 1;
  out << YAML::Key << "run_seed" << YAML::Value << checkpoint.run_seed.value;
  out << YAML::Key << "round_cursor" << YAML::Value << s.round_cursor;
  out << YAML::Key << "strategy" << YAML::Value << to_string(s.strategy);
  out << YAML::Key << "n_clients" << YAML::Value << s.n_clients;
  out << YAML::Key << "rounds_per_slot" << YAML::Value << s.rounds_per_slot;
  out << YAML::Key << "hp" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "eta" << YAML::Value << hex(s.hp.eta);
  out << YAML::Key << "tau" << YAML::Value << s.hp.tau;
  out << YAML::Key << "tau_prime" << YAML::Value << s.hp.tau_prime;
  out << YAML::Key << "batch_size" << YAML::Value << s.hp.batch_size;
  out << YAML::EndMap;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "layer_sizes" << YAML::Value << YAML::Flow << spec.layer_sizes;
  out << YAML::Key << "activation" << YAML::Value << to_string(spec.activation);
  out << YAML::EndMap;
  out << YAML::Key << "global_params" << YAML::Value;
  emit_vector(out, s.global_params.flat());
  out << YAML::Key << "last_params" << YAML::Value << YAML::BeginMap;
  for (const auto& [id, p] : s.last_params) {
    out << YAML::Key << id << YAML::Value;
    emit_vector(out, p.flat());
  }
  out << YAML::EndMap;
  out << YAML::Key << "coresets" << YAML::Value << YAML::BeginMap;
  for (const auto& [id, c] : s.coresets) {
    out << YAML::Key << id << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "data_size" << YAML::Value << s.data_sizes.at(id);
    out << YAML::Key << "class_count" << YAML::Value << c.class_count;
    out << YAML::Key << "name" << YAML::Value << c.name;
    out << YAML::Key << "rows" << YAML::Value << YAML::BeginSeq;
    for (Eigen::Index r = 0; r < c.size(); ++r) {
      out << YAML::Flow << YAML::BeginSeq;
      for (Eigen::Index j = 0; j < c.dim(); ++j) out << hex(c.features(r, j));
      out << c.labels[static_cast<std::size_t>(r)];
      out << YAML::EndSeq;
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  out << YAML::EndMap;

  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write checkpoint " + path.string());
  file << out.c_str() << '\n';
  if (!file) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw IoError("cannot read checkpoint " + path.string() + ": " + e.what());
  }
  try {
    if (root["format"].as<std::string>() != "asyncfl-checkpoint" || root["version"].as<int>() != 1)
      throw IoError("checkpoint " + path.string() + ": unsupported format or version");

    ModelSpec spec;
    spec.layer_sizes = root["model"]["layer_sizes"].as<std::vector<int>>();
    const auto act = root["model"]["activation"].as<std::string>();
    if (act != "relu" && act != "tanh") throw IoError("checkpoint: unknown activation '" + act + "'");
    spec.activation = act == "relu" ? Activation::relu : Activation::tanh;

    HyperParams hp;
    hp.eta = unhex(root["hp"]["eta"]);
    hp.tau = root["hp"]["tau"].as<int>();
    hp.tau_prime = root["hp"]["tau_prime"].as<int>();
    hp.batch_size = root["hp"]["batch_size"].as<int>();

    ServerState s = make_server(read_params(spec, root["global_params"]), hp,
                                parse_strategy(root["strategy"].as<std::string>()), root["n_clients"].as<int>(),
                                root["rounds_per_slot"].as<int>());
    s.round_cursor = root["round_cursor"].as<std::uint64_t>();
    for (const auto& kv : root["last_params"]) s.last_params.emplace(kv.first.as<int>(), read_params(spec, kv.second));
    for (const auto& kv : root["coresets"]) {
      const int id = kv.first.as<int>();
      const YAML::Node& node = kv.second;
      Dataset c;
      c.class_count = node["class_count"].as<int>();
      c.name = node["name"].as<std::string>();
      const YAML::Node& rows = node["rows"];
      const std::size_t dim = rows.size() ? rows[0].size() - 1 : 0;
      c.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != dim + 1) throw IoError("checkpoint: ragged coreset rows for client " + std::to_string(id));
        for (std::size_t j = 0; j < dim; ++j)
          c.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = unhex(rows[r][j]);
        c.labels.push_back(rows[r][dim].as<int>());
      }
      c.validate();
      s.coresets.emplace(id, std::move(c));
      s.data_sizes.emplace(id, node["data_size"].as<std::size_t>());
    }
    s.validate();
    return {std::move(s), Seed{root["run_seed"].as<std::uint64_t>()}};
  } catch (const YAML::Exception& e) {
    throw IoError("checkpoint " + path.string() + " is malformed: " + e.what());
  } catch (const InvalidArgument& e) {
    throw IoError("checkpoint " + path.string() + " is inconsistent: " + e.what());
  }
}

}  // namespace asyncfl
