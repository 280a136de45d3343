#include "asyncfl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string_view>

#include "asyncfl/error.hpp"

namespace asyncfl {

const char* to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::rotated: return "rotated";
    case TaskKind::split_class: return "split_class";
    case TaskKind::iid: return "iid";
  }
  return "?";
}

namespace {

struct TrainTestIndices {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
};

void check_fraction(double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw InvalidArgument("test_fraction must lie strictly between 0 and 1");
}

TrainTestIndices split_indices(std::vector<Eigen::Index> rows, double test_fraction, Seed seed) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n < 2) throw InvalidArgument("need at least 2 samples to form a train/test split");
  CounterRng rng(seed);
  shuffle(rows.begin(), rows.end(), rng);
  auto n_test = static_cast<Eigen::Index>(std::llround(test_fraction * static_cast<double>(n)));
  n_test = std::clamp<Eigen::Index>(n_test, 1, n - 1);
  TrainTestIndices out;
  out.test.assign(rows.begin(), rows.begin() + n_test);
  out.train.assign(rows.begin() + n_test, rows.end());
  std::sort(out.test.begin(), out.test.end());
  std::sort(out.train.begin(), out.train.end());
  return out;
}

std::vector<Eigen::Index> all_rows(Eigen::Index n) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  return rows;
}

// cos/sin of an angle in degrees; exact for multiples of 90.
std::pair<double, double> cos_sin_degrees(double degrees) {
  const double turns = degrees / 90.0;
  if (turns == std::floor(turns) && std::isfinite(turns)) {
    switch (((static_cast<long long>(turns) % 4) + 4) % 4) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }
  const double rad = degrees * std::numbers::pi / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Dataset gen_blobs(int class_count, int per_class, int dim, double spread, Seed seed) {
  if (class_count < 2 || per_class < 2 || dim < 2)
    throw InvalidArgument("gen_blobs: need class_count >= 2, per_class >= 2, dim >= 2");
  if (!(spread > 0.0)) throw InvalidArgument("gen_blobs: spread must be positive");

  Eigen::MatrixXd centroids(class_count, dim);
  for (int k = 0; k < class_count; ++k) {
    for (int p = 0; 2 * p + 1 < dim; ++p) {
      const double angle = 2.0 * std::numbers::pi * k / class_count + p * std::numbers::pi / class_count;
      centroids(k, 2 * p) = std::cos(angle);
      centroids(k, 2 * p + 1) = std::sin(angle);
    }
    if (dim % 2 == 1) centroids(k, dim - 1) = 2.0 * k / (class_count - 1) - 1.0;
  }

  Dataset out;
  out.class_count = class_count;
  out.name = "blobs";
  out.features.resize(Eigen::Index{class_count} * per_class, dim);
  out.labels.reserve(static_cast<std::size_t>(class_count) * per_class);
  CounterRng rng(derive(seed, "blobs"));
  Eigen::Index row = 0;
  for (int k = 0; k < class_count; ++k) {
    for (int s = 0; s < per_class; ++s, ++row) {
      for (int j = 0; j < dim; ++j) out.features(row, j) = centroids(k, j) + spread * rng.normal();
      out.labels.push_back(k);
    }
  }
  return out;
}

Dataset rotate(const Dataset& data, double angle_degrees) {
  const auto [c, s] = cos_sin_degrees(angle_degrees);
  Dataset out = data;
  for (Eigen::Index j = 0; j + 1 < data.dim(); j += 2) {
    const auto x = data.features.col(j);
    const auto y = data.features.col(j + 1);
    out.features.col(j) = c * x - s * y;
    out.features.col(j + 1) = s * x + c * y;
  }
  return out;
}

SplitTask make_rotated_task(const Dataset& base, double angle_degrees, double test_fraction, Seed seed) {
  base.validate();
  if (base.dim() < 2) throw InvalidArgument("make_rotated_task: base needs dim >= 2");
  check_fraction(test_fraction);
  const auto split = split_indices(all_rows(base.size()), test_fraction, derive(seed, "split"));

  SplitTask task;
  task.kind = TaskKind::rotated;
  task.class_count = base.class_count;
  ClientData upright{base.subset(split.train, base.name + "/0/train"), base.subset(split.test, base.name + "/0/test")};
  ClientData turned{rotate(upright.train, angle_degrees), rotate(upright.test, angle_degrees)};
  turned.train.name = base.name + "/1/train";
  turned.test.name = base.name + "/1/test";
  task.clients.push_back(std::move(upright));
  task.clients.push_back(std::move(turned));
  return task;
}

SplitTask make_split_class_task(const Dataset& base, double test_fraction, Seed seed) {
  base.validate();
  if (base.class_count < 4 || base.class_count % 2 != 0)
    throw InvalidArgument("make_split_class_task: class_count must be even and >= 4");
  check_fraction(test_fraction);
  const auto split = split_indices(all_rows(base.size()), test_fraction, derive(seed, "split"));
  const int half = base.class_count / 2;

  auto pick = [&](const std::vector<Eigen::Index>& rows, bool lower) {
    std::vector<Eigen::Index> out;
    for (auto r : rows)
      if ((base.labels[static_cast<std::size_t>(r)] < half) == lower) out.push_back(r);
    return out;
  };

  SplitTask task;
  task.kind = TaskKind::split_class;
  task.class_count = base.class_count;
  for (int c = 0; c < 2; ++c) {
    const bool lower = c == 0;
    const auto train = pick(split.train, lower);
    const auto test = pick(split.test, lower);
    if (train.empty() || test.empty())
      throw InvalidArgument("make_split_class_task: a client ended up with an empty train or test set");
    const std::string prefix = base.name + "/" + std::to_string(c);
    task.clients.push_back({base.subset(train, prefix + "/train"), base.subset(test, prefix + "/test")});
  }
  return task;
}

SplitTask make_iid_task(const Dataset& base, int n_clients, double test_fraction, Seed seed) {
  base.validate();
  if (n_clients < 2) throw InvalidArgument("make_iid_task: need at least 2 clients");
  check_fraction(test_fraction);
  if (base.size() < n_clients) throw InvalidArgument("make_iid_task: fewer samples than clients");

  auto rows = all_rows(base.size());
  CounterRng rng(derive(seed, "partition"));
  shuffle(rows.begin(), rows.end(), rng);

  SplitTask task;
  task.kind = TaskKind::iid;
  task.class_count = base.class_count;
  const auto n = base.size();
  for (int c = 0; c < n_clients; ++c) {
    const auto begin = n * c / n_clients;
    const auto end = n * (c + 1) / n_clients;
    std::vector<Eigen::Index> shard(rows.begin() + begin, rows.begin() + end);
    const auto split = split_indices(std::move(shard), test_fraction, derive(seed, "split", static_cast<std::uint64_t>(c)));
    const std::string prefix = base.name + "/" + std::to_string(c);
    task.clients.push_back({base.subset(split.train, prefix + "/train"), base.subset(split.test, prefix + "/test")});
  }
  return task;
}

Dataset load_csv(const std::filesystem::path& path, int class_count) {
  if (class_count < 1) throw InvalidArgument("load_csv: class_count must be >= 1");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::vector<double> values;
  std::vector<int> labels;
  Eigen::Index dim = -1;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    auto fail = [&](const std::string& what) -> IoError {
      return IoError(path.string() + ": line " + std::to_string(line_no) + ": " + what);
    };

    row.clear();
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = text.find(',', start);
      const std::string_view field = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      row.push_back(0.0);
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), row.back());
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
        throw fail("non-numeric field '" + std::string(field) + "'");
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (row.size() < 2) throw fail("expected at least one feature and a label");
    const double label = row.back();
    if (label != std::floor(label) || label < 0) throw fail("label must be a non-negative integer");
    if (label >= class_count)
      throw fail("label " + std::to_string(static_cast<long long>(label)) + " >= class_count " + std::to_string(class_count));
    const auto d = static_cast<Eigen::Index>(row.size() - 1);
    if (dim < 0) dim = d;
    if (d != dim) throw fail("expected " + std::to_string(dim) + " features, found " + std::to_string(d));
    values.insert(values.end(), row.begin(), row.end() - 1);
    labels.push_back(static_cast<int>(label));
  }
  if (labels.empty()) throw IoError(path.string() + ": empty dataset");

  Dataset out;
  out.class_count = class_count;
  out.name = path.stem().string();
  out.labels = std::move(labels);
  out.features = Eigen::Map<const RowMatrix<double>>(values.data(), static_cast<Eigen::Index>(out.labels.size()), dim);
  return out;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[64];
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,", data.features(i, j));
      out << buf;
    }
    out << data.labels[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace asyncfl
