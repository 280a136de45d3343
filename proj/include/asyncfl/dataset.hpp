#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "asyncfl/error.hpp"

namespace asyncfl {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Labeled feature vectors, one sample per row.
template <typename Scalar>
struct BasicDataset {
  RowMatrix<Scalar> features;
  std::vector<int> labels;
  int class_count = 0;
  std::string name;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  bool empty() const { return features.rows() == 0; }

  /// Throws InvalidArgument unless rows/labels agree and every label is in range.
  void validate() const {
    if (static_cast<std::size_t>(features.rows()) != labels.size())
      throw InvalidArgument("dataset '" + name + "': feature rows and label count differ");
    if (class_count < 1) throw InvalidArgument("dataset '" + name + "': class_count must be >= 1");
    for (int y : labels)
      if (y < 0 || y >= class_count)
        throw InvalidArgument("dataset '" + name + "': label " + std::to_string(y) +
                              " outside [0, " + std::to_string(class_count) + ")");
  }

  /// Rows at `indices`, in the given order.
  BasicDataset subset(const std::vector<Eigen::Index>& indices, std::string subset_name) const {
    BasicDataset out;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), dim());
    out.labels.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
      out.features.row(static_cast<Eigen::Index>(r)) = features.row(indices[r]);
      out.labels.push_back(labels[static_cast<std::size_t>(indices[r])]);
    }
    out.class_count = class_count;
    out.name = std::move(subset_name);
    return out;
  }

  friend bool operator==(const BasicDataset& a, const BasicDataset& b) {
    return a.class_count == b.class_count && a.labels == b.labels &&
           a.features.rows() == b.features.rows() && a.features.cols() == b.features.cols() &&
           a.features == b.features;
  }
};

using Dataset = BasicDataset<double>;

/// Row-concatenation of datasets sharing dim and class_count.
template <typename Scalar>
BasicDataset<Scalar> concat(const std::vector<const BasicDataset<Scalar>*>& parts, std::string name) {
  BasicDataset<Scalar> out;
  out.name = std::move(name);
  if (parts.empty()) return out;
  Eigen::Index rows = 0;
  for (const auto* p : parts) {
    if (p->dim() != parts.front()->dim() || p->class_count != parts.front()->class_count)
      throw InvalidArgument("concat: datasets disagree on dim or class_count");
    rows += p->size();
  }
  out.class_count = parts.front()->class_count;
  out.features.resize(rows, parts.front()->dim());
  Eigen::Index at = 0;
  for (const auto* p : parts) {
    out.features.middleRows(at, p->size()) = p->features;
    out.labels.insert(out.labels.end(), p->labels.begin(), p->labels.end());
    at += p->size();
  }
  return out;
}

}  // namespace asyncfl
