#pragma once

#include "asyncfl/dataset.hpp"
#include "asyncfl/rng.hpp"

namespace asyncfl {

enum class CoresetMethod { uniform, stratified };

const char* to_string(CoresetMethod m);

struct CoresetPolicy {
  double fraction = 0.05;
  CoresetMethod method = CoresetMethod::stratified;
  Seed seed{};

  void validate() const;
};

/// Row subset of `data` summarising it for server-side proxy training.
///
/// Target size is round(fraction * n), at least 1. Stratified sampling gives
/// each class floor(target * n_c / n) rows, hands the remaining rows to the
/// classes with the largest fractional share (larger classes first on ties),
/// and keeps at least one row of every class present. Selected rows keep
/// their original relative order, so fraction 1.0 returns `data` unchanged.
Dataset build_coreset(const Dataset& data, const CoresetPolicy& policy);

}  // namespace asyncfl
