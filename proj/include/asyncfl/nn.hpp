#pragma once

// Feed-forward classifier: dense hidden layers (relu or tanh), softmax output,
// mean cross-entropy loss, exact backprop and plain mini-batch SGD.
//
// Everything is templated on the scalar type; the rest of the library uses
// the double instantiation.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "asyncfl/dataset.hpp"
#include "asyncfl/error.hpp"
#include "asyncfl/rng.hpp"

namespace asyncfl {

enum class Activation { relu, tanh };

inline const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

/// Layer widths from input to output; the last entry is the class count.
struct ModelSpec {
  std::vector<int> layer_sizes;
  Activation activation = Activation::relu;

  void validate() const {
    if (layer_sizes.size() < 2)
      throw InvalidArgument("model spec needs at least an input and an output layer");
    for (int n : layer_sizes)
      if (n < 1) throw InvalidArgument("model spec layer sizes must be >= 1");
  }

  int input_dim() const { return layer_sizes.front(); }
  int class_count() const { return layer_sizes.back(); }
  int layer_count() const { return static_cast<int>(layer_sizes.size()) - 1; }

  Eigen::Index param_count() const {
    Eigen::Index total = 0;
    for (int l = 0; l < layer_count(); ++l)
      total += Eigen::Index{layer_sizes[l + 1]} * layer_sizes[l] + layer_sizes[l + 1];
    return total;
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Model parameters as one flat vector. Layer l occupies a contiguous block:
/// its [n_out x n_in] weight matrix in column-major order, then its n_out biases.
template <typename Scalar>
class ModelParams {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  explicit ModelParams(ModelSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    flat_ = Vector::Zero(spec_.param_count());
  }

  ModelParams(ModelSpec spec, Vector flat) : spec_(std::move(spec)), flat_(std::move(flat)) {
    spec_.validate();
    if (flat_.size() != spec_.param_count())
      throw InvalidArgument("flat parameter length " + std::to_string(flat_.size()) +
                            " does not match spec (" + std::to_string(spec_.param_count()) + ")");
  }

  const ModelSpec& spec() const { return spec_; }
  const Vector& flat() const { return flat_; }
  Vector& flat() { return flat_; }

  Eigen::Map<const Matrix> weights(int layer) const {
    return {flat_.data() + offset(layer), rows(layer), cols(layer)};
  }
  Eigen::Map<Matrix> weights(int layer) { return {flat_.data() + offset(layer), rows(layer), cols(layer)}; }

  Eigen::Map<const Vector> bias(int layer) const {
    return {flat_.data() + offset(layer) + rows(layer) * cols(layer), rows(layer)};
  }
  Eigen::Map<Vector> bias(int layer) {
    return {flat_.data() + offset(layer) + rows(layer) * cols(layer), rows(layer)};
  }

  bool all_finite() const { return flat_.allFinite(); }

  /// Exact (bitwise for non-NaN values) equality of spec and every coordinate.
  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.spec_ == b.spec_ && a.flat_.size() == b.flat_.size() && a.flat_ == b.flat_;
  }

 private:
  Eigen::Index rows(int layer) const { return spec_.layer_sizes[layer + 1]; }
  Eigen::Index cols(int layer) const { return spec_.layer_sizes[layer]; }
  Eigen::Index offset(int layer) const {
    Eigen::Index at = 0;
    for (int l = 0; l < layer; ++l) at += rows(l) * cols(l) + rows(l);
    return at;
  }

  ModelSpec spec_;
  Vector flat_;
};

template <typename Scalar>
struct Batch {
  RowMatrix<Scalar> features;
  std::vector<int> labels;

  Eigen::Index size() const { return features.rows(); }

  void validate(const ModelSpec& spec) const {
    if (features.rows() < 1) throw InvalidArgument("batch must hold at least one sample");
    if (static_cast<std::size_t>(features.rows()) != labels.size())
      throw InvalidArgument("batch feature rows and label count differ");
    if (features.cols() != spec.input_dim())
      throw InvalidArgument("batch feature dim " + std::to_string(features.cols()) +
                            " does not match model input dim " + std::to_string(spec.input_dim()));
    for (int y : labels)
      if (y < 0 || y >= spec.class_count())
        throw InvalidArgument("label " + std::to_string(y) + " out of range for " +
                              std::to_string(spec.class_count()) + " classes");
  }
};

template <typename Scalar>
Batch<Scalar> as_batch(const BasicDataset<Scalar>& data) {
  return {data.features, data.labels};
}

struct HyperParams {
  double eta = 0.1;
  int tau = 10;
  int tau_prime = 10;
  int batch_size = 32;

  // eta == 0 is accepted (parameters stay put); experiment configs insist on eta > 0.
  void validate() const {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidArgument("learning rate eta must be finite and >= 0");
    if (tau < 1 || tau_prime < 1 || batch_size < 1)
      throw InvalidArgument("hyperparameters tau, tau_prime, batch_size must all be positive");
  }

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

/// Weights uniform on +-sqrt(6 / (n_in + n_out)) per layer, biases zero.
template <typename Scalar = double>
ModelParams<Scalar> init_params(const ModelSpec& spec, Seed seed) {
  ModelParams<Scalar> params(spec);
  CounterRng rng(derive(seed, "init"));
  for (int l = 0; l < spec.layer_count(); ++l) {
    const double limit = std::sqrt(6.0 / (spec.layer_sizes[l] + spec.layer_sizes[l + 1]));
    auto w = params.weights(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = static_cast<Scalar>(rng.uniform(-limit, limit));
  }
  return params;
}

namespace detail {

template <typename Scalar>
using ColMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Pre-activations z[l] and activations a[l] (a[0] is the input), one row per sample.
template <typename Scalar>
struct ForwardPass {
  std::vector<ColMatrix<Scalar>> z;
  std::vector<ColMatrix<Scalar>> a;
};

template <typename Scalar, typename Derived>
ForwardPass<Scalar> forward(const ModelParams<Scalar>& params, const Eigen::MatrixBase<Derived>& x) {
  const ModelSpec& spec = params.spec();
  const int layers = spec.layer_count();
  ForwardPass<Scalar> pass;
  pass.a.reserve(layers + 1);
  pass.z.reserve(layers);
  pass.a.emplace_back(x);
  for (int l = 0; l < layers; ++l) {
    ColMatrix<Scalar> z = pass.a.back() * params.weights(l).transpose();
    z.rowwise() += params.bias(l).transpose();
    pass.z.push_back(std::move(z));
    if (l + 1 < layers) {
      if (spec.activation == Activation::relu)
        pass.a.emplace_back(pass.z.back().cwiseMax(Scalar(0)));
      else
        pass.a.emplace_back(pass.z.back().array().tanh().matrix());
    }
  }
  return pass;
}

// Row-wise softmax with max subtraction; also returns the per-row log-sum-exp.
template <typename Scalar>
ColMatrix<Scalar> softmax_rows(const ColMatrix<Scalar>& logits, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* lse) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> row_max = logits.rowwise().maxCoeff();
  ColMatrix<Scalar> e = (logits.colwise() - row_max).array().exp().matrix();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sums = e.rowwise().sum();
  if (lse) *lse = sums.array().log().matrix();  // relative to row_max
  return e.array().colwise() / sums.array();
}

}  // namespace detail

/// Class probabilities, one row per input row.
template <typename Scalar, typename Derived>
detail::ColMatrix<Scalar> predict_proba(const ModelParams<Scalar>& params, const Eigen::MatrixBase<Derived>& x) {
  if (x.cols() != params.spec().input_dim())
    throw InvalidArgument("feature dim does not match model input dim");
  auto pass = detail::forward(params, x);
  return detail::softmax_rows<Scalar>(pass.z.back(), nullptr);
}

template <typename Scalar>
struct LossAndGradient {
  Scalar loss;
  ModelParams<Scalar> grad;
};

/// Mean softmax cross-entropy over the batch and its exact gradient.
template <typename Scalar>
LossAndGradient<Scalar> loss_and_grad(const ModelParams<Scalar>& params, const Batch<Scalar>& batch) {
  const ModelSpec& spec = params.spec();
  batch.validate(spec);
  const int layers = spec.layer_count();
  const Eigen::Index n = batch.size();

  auto pass = detail::forward(params, batch.features);
  const detail::ColMatrix<Scalar>& logits = pass.z.back();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> lse;
  detail::ColMatrix<Scalar> delta = detail::softmax_rows<Scalar>(logits, &lse);

  Scalar loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = batch.labels[static_cast<std::size_t>(i)];
    // lse is taken relative to the row max, so this term is >= 0 exactly.
    loss += lse(i) + (logits.row(i).maxCoeff() - logits(i, y));
    delta(i, y) -= Scalar(1);
  }
  loss /= static_cast<Scalar>(n);
  delta /= static_cast<Scalar>(n);

  ModelParams<Scalar> grad(spec);
  for (int l = layers - 1; l >= 0; --l) {
    grad.weights(l).noalias() = delta.transpose() * pass.a[l];
    grad.bias(l) = delta.colwise().sum().transpose();
    if (l == 0) break;
    detail::ColMatrix<Scalar> back = delta * params.weights(l);
    if (spec.activation == Activation::relu)
      back.array() *= (pass.z[l - 1].array() > Scalar(0)).template cast<Scalar>();
    else
      back.array() *= Scalar(1) - pass.a[l].array().square();
    delta = std::move(back);
  }
  return {loss, std::move(grad)};
}

/// theta <- theta - eta * gradient_at(step), n_steps times. `gradient_at` is
/// evaluated after the previous update has been applied in place.
template <typename Derived, typename GradientFn>
void descend(Eigen::MatrixBase<Derived>& theta, typename Derived::Scalar eta, int n_steps, GradientFn&& gradient_at) {
  for (int step = 0; step < n_steps; ++step) theta.derived() -= eta * gradient_at(step);
}

/// Mini-batch SGD. Each step draws hp.batch_size row indices uniformly with
/// replacement from one counter-based stream seeded by `seed`.
template <typename Scalar>
ModelParams<Scalar> sgd_steps(ModelParams<Scalar> params, const BasicDataset<Scalar>& data, const HyperParams& hp,
                              int n_steps, Seed seed) {
  hp.validate();
  if (data.empty()) throw InvalidArgument("sgd_steps: empty dataset");
  if (n_steps < 1) throw InvalidArgument("sgd_steps: n_steps must be >= 1");

  CounterRng rng(seed);
  const auto n = static_cast<std::uint64_t>(data.size());
  Batch<Scalar> batch;
  batch.features.resize(hp.batch_size, data.dim());
  batch.labels.resize(static_cast<std::size_t>(hp.batch_size));

  descend(params.flat(), static_cast<Scalar>(hp.eta), n_steps, [&](int) {
    for (int r = 0; r < hp.batch_size; ++r) {
      const auto idx = static_cast<Eigen::Index>(rng.below(n));
      batch.features.row(r) = data.features.row(idx);
      batch.labels[static_cast<std::size_t>(r)] = data.labels[static_cast<std::size_t>(idx)];
    }
    return loss_and_grad(params, batch).grad.flat();
  });

  if (!params.all_finite()) throw NumericError("sgd_steps: parameters became non-finite (learning rate too high?)");
  return params;
}

/// Index of the largest entry; ties go to the lowest index.
template <typename Derived>
Eigen::Index argmax_lowest(const Eigen::MatrixBase<Derived>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j)
    if (row(j) > row(best)) best = j;
  return best;
}

/// Fraction of samples whose most probable class equals the label.
template <typename Scalar>
double evaluate(const ModelParams<Scalar>& params, const BasicDataset<Scalar>& test) {
  if (test.empty()) throw InvalidArgument("evaluate: empty test set");
  const auto probs = predict_proba(params, test.features);
  std::int64_t correct = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    if (argmax_lowest(probs.row(i)) == test.labels[static_cast<std::size_t>(i)]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace asyncfl
