#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "asyncfl/data.hpp"
#include "asyncfl/nn.hpp"

namespace asyncfl {
namespace {

using P = ModelParams<double>;

ModelSpec spec_of(std::vector<int> sizes, Activation act = Activation::relu) { return {std::move(sizes), act}; }

Batch<double> random_batch(const ModelSpec& spec, int n, Seed seed) {
  CounterRng rng(seed);
  Batch<double> b;
  b.features.resize(n, spec.input_dim());
  for (Eigen::Index i = 0; i < b.features.size(); ++i) b.features.data()[i] = rng.normal();
  for (int i = 0; i < n; ++i) b.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.class_count()))));
  return b;
}

// Hand-picked [2,3,2] network; expected values come from an independent numpy implementation.
P fixed_net(Activation act) {
  P::Vector flat(17);
  flat << 0.5, 0.1, -0.4, -0.25, 0.3, 0.2, 0.05, -0.1, 0.0, 0.3, -0.5, -0.2, 0.4, 0.6, 0.1, 0.01, -0.02;
  return P(spec_of({2, 3, 2}, act), flat);
}

Batch<double> fixed_batch() {
  Batch<double> b;
  b.features.resize(2, 2);
  b.features << 1.0, 2.0, -1.5, 0.5;
  b.labels = {1, 0};
  return b;
}

TEST(Model, FlatLayout) {
  const auto spec = spec_of({2, 3, 2});
  EXPECT_EQ(spec.param_count(), 17);
  const P p = fixed_net(Activation::relu);
  EXPECT_EQ(p.weights(0).rows(), 3);
  EXPECT_EQ(p.weights(0).cols(), 2);
  EXPECT_DOUBLE_EQ(p.weights(0)(0, 1), -0.25);
  EXPECT_DOUBLE_EQ(p.bias(0)(1), -0.1);
  EXPECT_DOUBLE_EQ(p.weights(1)(1, 2), 0.1);
  EXPECT_DOUBLE_EQ(p.bias(1)(1), -0.02);
  EXPECT_THROW(P(spec, P::Vector::Zero(16)), InvalidArgument);
}

TEST(Model, InitIsDeterministicWithZeroBiases) {
  const auto spec = spec_of({4, 16, 3});
  const P a = init_params(spec, Seed{1});
  EXPECT_EQ(a, init_params(spec, Seed{1}));
  EXPECT_FALSE(a == init_params(spec, Seed{2}));
  for (int l = 0; l < spec.layer_count(); ++l) EXPECT_TRUE(a.bias(l).isZero());
  const double limit = std::sqrt(6.0 / 20.0);
  EXPECT_LE(a.weights(0).cwiseAbs().maxCoeff(), limit);
}

TEST(Model, ForwardMatchesReference) {
  const auto probs = predict_proba(fixed_net(Activation::relu), fixed_batch().features);
  EXPECT_NEAR(probs(0, 0), 0.42800386706848137, 1e-14);
  EXPECT_NEAR(probs(1, 1), 0.4061268970658573, 1e-14);
  EXPECT_NEAR(probs.row(0).sum(), 1.0, 1e-15);
}

TEST(Model, LossAndGradientMatchReference) {
  struct Case {
    Activation act;
    double loss;
    std::vector<double> grad;
  };
  const Case cases[] = {
      {Activation::relu, 0.5398563310501814,
       {0.17120154682739253, -0.12840116012054442, 0.15229758639969646, 0.34240309365478505, -0.25680232024108884,
        -0.05076586213323215, 0.17120154682739253, -0.12840116012054442, -0.1015317242664643, 0.010700096676712035,
        -0.010700096676712035, 0.1284011601205444, -0.1284011601205444, -0.14214441397305005, 0.14214441397305008,
        0.01093848500131206, -0.010938485001312032}},
      {Activation::tanh, 0.6730179054974685,
       {0.3488139490883966, -0.3328124695825879, 0.23725390185139517, 0.29082555501676094, -0.10686692561279647,
        0.17598752977406457, 0.058240846831230694, 0.06630039724054021, 0.024025134759448175, 0.19307303154474995,
        -0.19307303154474995, 0.14420217312616107, -0.14420217312616107, -0.16242074453034167, 0.16242074453034167,
        -0.05011159481062094, 0.05011159481062094}},
  };
  for (const auto& c : cases) {
    const auto lg = loss_and_grad(fixed_net(c.act), fixed_batch());
    EXPECT_NEAR(lg.loss, c.loss, 1e-14) << to_string(c.act);
    for (std::size_t i = 0; i < c.grad.size(); ++i)
      EXPECT_NEAR(lg.grad.flat()(static_cast<Eigen::Index>(i)), c.grad[i], 1e-14) << to_string(c.act) << " coord " << i;
  }
}

TEST(Model, ZeroParamsGiveLogClassCount) {
  for (int classes : {2, 3, 7}) {
    const auto spec = spec_of({3, 5, classes});
    const auto lg = loss_and_grad(P(spec), random_batch(spec, 9, Seed{1}));
    EXPECT_NEAR(lg.loss, std::log(static_cast<double>(classes)), 1e-15);
  }
}

TEST(Model, DuplicatedBatchKeepsLossAndGradient) {
  const auto spec = spec_of({3, 6, 4});
  const P p = init_params(spec, Seed{4});
  const auto b = random_batch(spec, 5, Seed{5});
  Batch<double> twice;
  twice.features.resize(10, 3);
  twice.features << b.features, b.features;
  twice.labels = b.labels;
  twice.labels.insert(twice.labels.end(), b.labels.begin(), b.labels.end());
  const auto one = loss_and_grad(p, b);
  const auto two = loss_and_grad(p, twice);
  EXPECT_NEAR(one.loss, two.loss, 1e-14);
  EXPECT_LT((one.grad.flat() - two.grad.flat()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Model, GradientMatchesFiniteDifferences) {
  for (Activation act : {Activation::relu, Activation::tanh}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto spec = spec_of({3, 7, 5, 4}, act);
      P p = init_params(spec, Seed{100 + s});
      p.bias(0).setConstant(0.05);
      const auto b = random_batch(spec, 6, Seed{200 + s});
      const auto g = loss_and_grad(p, b).grad.flat();
      const double h = 1e-5;
      for (Eigen::Index i = 0; i < p.flat().size(); ++i) {
        P plus = p, minus = p;
        plus.flat()(i) += h;
        minus.flat()(i) -= h;
        const double fd = (loss_and_grad(plus, b).loss - loss_and_grad(minus, b).loss) / (2 * h);
        const double rel = std::abs(fd - g(i)) / std::max({std::abs(fd), std::abs(g(i)), 1e-6});
        EXPECT_LT(rel, 1e-4) << to_string(act) << " seed " << s << " coord " << i;
      }
    }
  }
}

TEST(Model, SoftmaxRowsAreDistributions) {
  const auto spec = spec_of({2, 4, 5});
  P p = init_params(spec, Seed{8});
  p.flat() *= 40.0;  // large logits exercise the max shift
  const auto b = random_batch(spec, 20, Seed{9});
  const auto probs = predict_proba(p, b.features);
  EXPECT_TRUE(probs.allFinite());
  EXPECT_LT((probs.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  const auto lg = loss_and_grad(p, b);
  EXPECT_TRUE(std::isfinite(lg.loss));
  EXPECT_GE(lg.loss, 0.0);
}

TEST(Descend, FixedPointAndSimpleStep) {
  Eigen::VectorXd theta(3);
  theta << 1.0, -2.0, 0.5;
  const Eigen::VectorXd start = theta;
  descend(theta, 0.3, 5, [](int) { return Eigen::VectorXd::Zero(3); });
  EXPECT_EQ(theta, start);

  Eigen::VectorXd x(1);
  x << 1.0;
  descend(x, 0.1, 1, [&](int) { return Eigen::VectorXd(x); });  // d/dx of x^2/2
  EXPECT_DOUBLE_EQ(x(0), 0.9);
}

TEST(Sgd, DeterministicAndReducesLoss) {
  int decreased = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Dataset data = gen_blobs(3, 50, 2, 0.3, Seed{s});
    const auto spec = spec_of({2, 16, 3});
    const P start = init_params(spec, Seed{s + 1000});
    const HyperParams hp{.eta = 0.1, .tau = 20, .tau_prime = 20, .batch_size = 16};
    const P end = sgd_steps(start, data, hp, hp.tau, Seed{s + 2000});
    EXPECT_EQ(end, sgd_steps(start, data, hp, hp.tau, Seed{s + 2000}));
    if (loss_and_grad(end, as_batch(data)).loss < loss_and_grad(start, as_batch(data)).loss) ++decreased;
  }
  EXPECT_EQ(decreased, 20);
}

TEST(Sgd, RejectsBadInputs) {
  const Dataset data = gen_blobs(2, 10, 2, 0.3, Seed{1});
  const P p(spec_of({2, 3, 2}));
  EXPECT_THROW(sgd_steps(p, data, HyperParams{.eta = -0.1}, 1, Seed{}), InvalidArgument);
  EXPECT_EQ(sgd_steps(p, data, HyperParams{.eta = 0.0}, 3, Seed{}), p);
  EXPECT_THROW(sgd_steps(p, Dataset{}, HyperParams{}, 1, Seed{}), InvalidArgument);
  EXPECT_THROW(sgd_steps(init_params(p.spec(), Seed{2}), data, HyperParams{.eta = 1e300}, 5, Seed{}), NumericError);
}

TEST(Evaluate, KnownAccuracies) {
  Dataset d;
  d.class_count = 2;
  d.features.resize(4, 2);
  d.features << 1, 0, 2, 0, -1, 0, -3, 0;
  d.labels = {1, 1, 0, 0};
  const auto spec = spec_of({2, 2});
  // All-zero logits: ties go to class 0, so half the rows are right.
  EXPECT_DOUBLE_EQ(evaluate(P(spec), d), 0.5);
  P perfect(spec);
  perfect.weights(0)(1, 0) = 1.0;
  perfect.weights(0)(0, 0) = -1.0;
  EXPECT_DOUBLE_EQ(evaluate(perfect, d), 1.0);

  std::vector<Eigen::Index> order{3, 0, 2, 1};
  EXPECT_DOUBLE_EQ(evaluate(perfect, d.subset(order, "shuffled")), 1.0);
  EXPECT_THROW(evaluate(perfect, Dataset{}), InvalidArgument);
}

TEST(Evaluate, RandomModelsNearChance) {
  const Dataset d = gen_blobs(3, 100, 2, 0.3, Seed{77});
  double sum = 0;
  for (std::uint64_t s = 0; s < 30; ++s) sum += evaluate(init_params(spec_of({2, 3}), Seed{s}), d);
  EXPECT_NEAR(sum / 30, 1.0 / 3.0, 0.1);
}

}  // namespace
}  // namespace asyncfl
