#pragma once

// Server and client state machines for slot-based federated training.
//
// One slot is `rounds_per_slot` rounds. A round: clients connecting for the
// first time deposit a coreset; the server gathers one update per
// participating client; the updates are averaged with weights |D_i|; the new
// global parameters go back to the connected clients.
//
// Strategies differ only in which updates enter the average:
//   fedavg - every client, ignoring the schedule
//   subset - connected clients only
//   proxy  - connected clients, plus a server-trained proxy update on the
//            stored coreset for every disconnected client that has one

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "asyncfl/coreset.hpp"
#include "asyncfl/dataset.hpp"
#include "asyncfl/nn.hpp"
#include "asyncfl/rng.hpp"

namespace asyncfl {

using Params = ModelParams<double>;

enum class Strategy { fedavg, subset, proxy };

const char* to_string(Strategy s);

struct ClientState {
  int id = 0;
  Dataset train;
  Dataset test;
  CoresetPolicy coreset_policy;
  Params local_params;

  std::size_t weight() const { return static_cast<std::size_t>(train.size()); }
};

struct ServerState {
  Params global_params;
  std::map<int, Dataset> coresets;
  /// |D_i| reported alongside each coreset deposit.
  std::map<int, std::size_t> data_sizes;
  std::map<int, Params> last_params;
  HyperParams hp;
  Strategy strategy = Strategy::fedavg;
  int n_clients = 0;
  int rounds_per_slot = 10;
  /// Rounds completed so far; per-round seeds are derived from it.
  std::uint64_t round_cursor = 0;

  void validate() const;

  friend bool operator==(const ServerState&, const ServerState&) = default;
};

ServerState make_server(Params initial, const HyperParams& hp, Strategy strategy, int n_clients, int rounds_per_slot);

/// Which clients are connected in which slot (0-based slot indices).
class AvailabilitySchedule {
 public:
  AvailabilitySchedule(int n_clients, int total_slots);

  static AvailabilitySchedule always(int n_clients, int total_slots);
  /// `client` is connected for slots [0, last_connected_slot] and gone afterwards.
  static AvailabilitySchedule drop_after(int n_clients, int total_slots, int client, int last_connected_slot);

  void set_connected(int client, int slot, bool connected = true);
  bool connected(int client, int slot) const;
  /// K_t for the given slot, ascending.
  std::vector<int> connected_clients(int slot) const;
  std::optional<int> first_connected_slot(int client) const;

  int n_clients() const { return static_cast<int>(slots_.size()); }
  int total_slots() const { return total_slots_; }

 private:
  int total_slots_;
  std::vector<std::set<int>> slots_;
};

enum class UpdateOrigin { client, proxy };

struct RoundUpdate {
  int client_id = 0;
  Params params;
  double weight = 0.0;
  UpdateOrigin origin = UpdateOrigin::client;
};

/// Local params <- global, then hp.tau SGD steps on the client's training data.
RoundUpdate client_round(ClientState& client, const Params& global, const HyperParams& hp, Seed seed);

/// hp.tau_prime SGD steps on the stored coreset, starting from the current
/// global params, with batch size min(hp.batch_size, |C_i|). The update
/// carries weight |D_i|, not |C_i|.
RoundUpdate proxy_round(const ServerState& server, int client_id, Seed seed);

/// Weighted mean of the updates' params, summed in ascending client-id order.
Params aggregate(std::vector<RoundUpdate> updates);

/// Seed that both client_round and proxy_round use for `client_id` in round
/// `round_index`, so a proxy with a full coreset replays the client exactly.
Seed round_seed(Seed run_seed, std::uint64_t round_index, int client_id);

struct SlotOptions {
  /// Train the round's clients on worker threads. Results are bitwise
  /// identical to sequential execution.
  bool parallel = false;
};

/// Runs server.rounds_per_slot rounds of the given slot and returns the new
/// server state. Clients connected in the slot get the new global params.
ServerState run_slot(ServerState server, std::vector<ClientState>& clients, const AvailabilitySchedule& schedule,
                     int slot, Seed run_seed, SlotOptions options = {});

}  // namespace asyncfl
