#include "asyncfl/coreset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "asyncfl/error.hpp"

namespace asyncfl {

const char* to_string(CoresetMethod m) { return m == CoresetMethod::uniform ? "uniform" : "stratified"; }

void CoresetPolicy::validate() const {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("coreset fraction must lie in (0, 1]");
}

namespace {

// k distinct entries of `pool`, chosen by a partial Fisher-Yates pass.
std::vector<Eigen::Index> sample_without_replacement(std::vector<Eigen::Index> pool, std::size_t k, CounterRng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

Dataset build_coreset(const Dataset& data, const CoresetPolicy& policy) {
  policy.validate();
  if (data.empty()) throw InvalidArgument("build_coreset: empty dataset");
  data.validate();

  const auto n = static_cast<std::size_t>(data.size());
  const auto target = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(policy.fraction * static_cast<double>(n))), 1, n);

  std::vector<Eigen::Index> chosen;
  if (policy.method == CoresetMethod::uniform) {
    std::vector<Eigen::Index> pool(n);
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    CounterRng rng(derive(policy.seed, "coreset/uniform"));
    chosen = sample_without_replacement(std::move(pool), target, rng);
  } else {
    std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(data.class_count));
    for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(data.labels[i])].push_back(static_cast<Eigen::Index>(i));

    const std::size_t classes = by_class.size();
    std::vector<std::size_t> quota(classes, 0);
    std::vector<double> remainder(classes, 0.0);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double exact = static_cast<double>(target) * static_cast<double>(by_class[c].size()) / static_cast<double>(n);
      quota[c] = static_cast<std::size_t>(std::floor(exact));
      remainder[c] = exact - static_cast<double>(quota[c]);
      assigned += quota[c];
    }
    std::vector<std::size_t> order(classes);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
      return by_class[a].size() > by_class[b].size();
    });
    for (std::size_t i = 0; assigned < target && i < classes; ++i) {
      if (quota[order[i]] < by_class[order[i]].size()) {
        ++quota[order[i]];
        ++assigned;
      }
    }
    for (std::size_t c = 0; c < classes; ++c) {
      if (by_class[c].empty()) continue;
      quota[c] = std::clamp<std::size_t>(quota[c], 1, by_class[c].size());
      CounterRng rng(derive(policy.seed, "coreset/stratified", c));
      auto picked = sample_without_replacement(by_class[c], quota[c], rng);
      chosen.insert(chosen.end(), picked.begin(), picked.end());
    }
  }

  std::sort(chosen.begin(), chosen.end());
  Dataset out = data.subset(chosen, data.name + "/coreset");
  return out;
}

}  // namespace asyncfl
