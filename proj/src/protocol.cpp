#include "asyncfl/protocol.hpp"

#include <algorithm>
#include <future>

#include "asyncfl/error.hpp"

namespace asyncfl {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::fedavg: return "fedavg";
    case Strategy::subset: return "subset";
    case Strategy::proxy: return "proxy";
  }
  return "?";
}

void ServerState::validate() const {
  hp.validate();
  if (n_clients < 1) throw InvalidArgument("server needs at least one client");
  if (rounds_per_slot < 1) throw InvalidArgument("rounds_per_slot must be >= 1");
  for (const auto& [id, coreset] : coresets) {
    if (id < 0 || id >= n_clients) throw InvalidArgument("coreset registered for unknown client " + std::to_string(id));
    if (!data_sizes.contains(id)) throw InvalidArgument("coreset for client " + std::to_string(id) + " has no data size");
  }
  for (const auto& [id, params] : last_params)
    if (params.spec() != global_params.spec())
      throw InvalidArgument("last_params for client " + std::to_string(id) + " has an incompatible spec");
}

ServerState make_server(Params initial, const HyperParams& hp, Strategy strategy, int n_clients, int rounds_per_slot) {
  ServerState server{.global_params = std::move(initial),
                     .coresets = {},
                     .data_sizes = {},
                     .last_params = {},
                     .hp = hp,
                     .strategy = strategy,
                     .n_clients = n_clients,
                     .rounds_per_slot = rounds_per_slot,
                     .round_cursor = 0};
  server.validate();
  return server;
}

AvailabilitySchedule::AvailabilitySchedule(int n_clients, int total_slots)
    : total_slots_(total_slots), slots_(static_cast<std::size_t>(std::max(n_clients, 0))) {
  if (n_clients < 1 || total_slots < 1) throw InvalidArgument("schedule needs >= 1 client and >= 1 slot");
}

AvailabilitySchedule AvailabilitySchedule::always(int n_clients, int total_slots) {
  AvailabilitySchedule s(n_clients, total_slots);
  for (int c = 0; c < n_clients; ++c)
    for (int t = 0; t < total_slots; ++t) s.set_connected(c, t);
  return s;
}

AvailabilitySchedule AvailabilitySchedule::drop_after(int n_clients, int total_slots, int client, int last_connected_slot) {
  AvailabilitySchedule s = always(n_clients, total_slots);
  if (client < 0 || client >= n_clients) throw InvalidArgument("drop_after: unknown client");
  for (int t = last_connected_slot + 1; t < total_slots; ++t) s.set_connected(client, t, false);
  return s;
}

void AvailabilitySchedule::set_connected(int client, int slot, bool connected) {
  if (client < 0 || client >= n_clients()) throw InvalidArgument("schedule: client index out of range");
  if (slot < 0 || slot >= total_slots_) throw InvalidArgument("schedule: slot index out of range");
  if (connected)
    slots_[static_cast<std::size_t>(client)].insert(slot);
  else
    slots_[static_cast<std::size_t>(client)].erase(slot);
}

bool AvailabilitySchedule::connected(int client, int slot) const {
  return slots_.at(static_cast<std::size_t>(client)).contains(slot);
}

std::vector<int> AvailabilitySchedule::connected_clients(int slot) const {
  std::vector<int> out;
  for (int c = 0; c < n_clients(); ++c)
    if (connected(c, slot)) out.push_back(c);
  return out;
}

std::optional<int> AvailabilitySchedule::first_connected_slot(int client) const {
  const auto& s = slots_.at(static_cast<std::size_t>(client));
  if (s.empty()) return std::nullopt;
  return *s.begin();
}

RoundUpdate client_round(ClientState& client, const Params& global, const HyperParams& hp, Seed seed) {
  if (client.local_params.spec() != global.spec())
    throw InvalidArgument("client " + std::to_string(client.id) + ": model spec differs from the global model");
  client.local_params = global;
  client.local_params = sgd_steps(std::move(client.local_params), client.train, hp, hp.tau, seed);
  return {client.id, client.local_params, static_cast<double>(client.weight()), UpdateOrigin::client};
}

RoundUpdate proxy_round(const ServerState& server, int client_id, Seed seed) {
  const auto it = server.coresets.find(client_id);
  if (it == server.coresets.end())
    throw InvalidArgument("proxy_round: client " + std::to_string(client_id) + " has not deposited a coreset");
  const Dataset& coreset = it->second;
  HyperParams hp = server.hp;
  hp.batch_size = static_cast<int>(std::min<Eigen::Index>(hp.batch_size, coreset.size()));
  Params proxy = sgd_steps(server.global_params, coreset, hp, hp.tau_prime, seed);
  return {client_id, std::move(proxy), static_cast<double>(server.data_sizes.at(client_id)), UpdateOrigin::proxy};
}

Params aggregate(std::vector<RoundUpdate> updates) {
  if (updates.empty()) throw InvalidArgument("aggregate: no updates");
  std::sort(updates.begin(), updates.end(),
            [](const RoundUpdate& a, const RoundUpdate& b) { return a.client_id < b.client_id; });

  const ModelSpec& spec = updates.front().params.spec();
  double total = 0.0;
  for (const auto& u : updates) {
    if (u.params.spec() != spec) throw InvalidArgument("aggregate: updates have incompatible model specs");
    if (!(u.weight > 0.0)) throw InvalidArgument("aggregate: update weights must be positive");
    total += u.weight;
  }

  Params::Vector sum = Params::Vector::Zero(spec.param_count());
  Params::Vector lo = updates.front().params.flat();
  Params::Vector hi = lo;
  for (const auto& u : updates) {
    sum += (u.weight / total) * u.params.flat();
    lo = lo.cwiseMin(u.params.flat());
    hi = hi.cwiseMax(u.params.flat());
  }
  // Rounding can leave a coordinate an ulp outside the hull of the inputs.
  return Params(spec, sum.cwiseMax(lo).cwiseMin(hi));
}

Seed round_seed(Seed run_seed, std::uint64_t round_index, int client_id) {
  return derive(derive(run_seed, "round", round_index), "client", static_cast<std::uint64_t>(client_id));
}

ServerState run_slot(ServerState server, std::vector<ClientState>& clients, const AvailabilitySchedule& schedule,
                     int slot, Seed run_seed, SlotOptions options) {
  server.validate();
  if (static_cast<int>(clients.size()) != server.n_clients || schedule.n_clients() != server.n_clients)
    throw InvalidArgument("run_slot: client count disagrees with server state or schedule");
  if (slot < 0 || slot >= schedule.total_slots()) throw InvalidArgument("run_slot: slot outside the schedule");
  for (int i = 0; i < server.n_clients; ++i)
    if (clients[static_cast<std::size_t>(i)].id != i) throw InvalidArgument("run_slot: clients must be ordered by id");

  const std::vector<int> connected = schedule.connected_clients(slot);
  std::vector<bool> is_connected(static_cast<std::size_t>(server.n_clients), false);
  for (int c : connected) is_connected[static_cast<std::size_t>(c)] = true;

  for (int r = 0; r < server.rounds_per_slot; ++r) {
    for (int c : connected) {
      if (server.coresets.contains(c)) continue;
      const ClientState& client = clients[static_cast<std::size_t>(c)];
      server.coresets.emplace(c, build_coreset(client.train, client.coreset_policy));
      server.data_sizes.emplace(c, client.weight());
    }

    // Who contributes this round, and whether through its own training.
    std::vector<std::pair<int, UpdateOrigin>> plan;
    for (int i = 0; i < server.n_clients; ++i) {
      const bool here = is_connected[static_cast<std::size_t>(i)];
      switch (server.strategy) {
        case Strategy::fedavg: plan.emplace_back(i, UpdateOrigin::client); break;
        case Strategy::subset:
          if (here) plan.emplace_back(i, UpdateOrigin::client);
          break;
        case Strategy::proxy:
          if (here)
            plan.emplace_back(i, UpdateOrigin::client);
          else if (server.coresets.contains(i))
            plan.emplace_back(i, UpdateOrigin::proxy);
          break;
      }
    }

    const std::uint64_t round_index = server.round_cursor;
    auto work = [&](std::pair<int, UpdateOrigin> item) {
      const Seed seed = round_seed(run_seed, round_index, item.first);
      if (item.second == UpdateOrigin::client)
        return client_round(clients[static_cast<std::size_t>(item.first)], server.global_params, server.hp, seed);
      return proxy_round(server, item.first, seed);
    };

    std::vector<RoundUpdate> updates;
    updates.reserve(plan.size());
    if (options.parallel && plan.size() > 1) {
      std::vector<std::future<RoundUpdate>> pending;
      for (const auto& item : plan) pending.push_back(std::async(std::launch::async, work, item));
      for (auto& f : pending) updates.push_back(f.get());
    } else {
      for (const auto& item : plan) updates.push_back(work(item));
    }

    if (!updates.empty()) {
      for (const auto& u : updates) server.last_params.insert_or_assign(u.client_id, u.params);
      server.global_params = aggregate(std::move(updates));
    }
    for (int c = 0; c < server.n_clients; ++c)
      if (is_connected[static_cast<std::size_t>(c)] || server.strategy == Strategy::fedavg)
        clients[static_cast<std::size_t>(c)].local_params = server.global_params;
    ++server.round_cursor;
  }
  return server;
}

}  // namespace asyncfl
