#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "asyncfl/dataset.hpp"
#include "asyncfl/rng.hpp"

namespace asyncfl {

enum class TaskKind { rotated, split_class, iid };

const char* to_string(TaskKind kind);

struct ClientData {
  Dataset train;
  Dataset test;
};

/// Per-client train/test pairs that all share feature dim and class_count.
struct SplitTask {
  std::vector<ClientData> clients;
  int class_count = 0;
  TaskKind kind = TaskKind::iid;

  int n_clients() const { return static_cast<int>(clients.size()); }
};

/// Gaussian clusters with isotropic standard deviation `spread`, per_class
/// samples per class, rows grouped by class.
///
/// Centroids sit on the unit circle in every coordinate plane (0,1), (2,3), ...:
/// class k in plane p is at angle 2*pi*k/C + p*pi/C. A trailing odd coordinate
/// holds a ramp from -1 to 1 across classes.
Dataset gen_blobs(int class_count, int per_class, int dim, double spread, Seed seed);

/// Rotates coordinate pairs (0,1), (2,3), ... by `angle_degrees`; a trailing
/// odd coordinate is left unchanged. Multiples of 90 degrees are exact.
Dataset rotate(const Dataset& data, double angle_degrees);

/// Two clients: the base data and the same samples rotated. Both use one
/// train/test split of the base rows.
SplitTask make_rotated_task(const Dataset& base, double angle_degrees, double test_fraction, Seed seed);

/// Two clients: classes [0, C/2) and [C/2, C). The output layer keeps all C classes.
SplitTask make_split_class_task(const Dataset& base, double test_fraction, Seed seed);

/// Uniform random partition into n_clients shards of equal size (+-1).
SplitTask make_iid_task(const Dataset& base, int n_clients, double test_fraction, Seed seed);

/// Rows of `d` reals followed by one integer label, comma-separated, no header.
Dataset load_csv(const std::filesystem::path& path, int class_count);

void save_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace asyncfl
