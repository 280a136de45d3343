#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "asyncfl/data.hpp"
#include "asyncfl/nn.hpp"
#include "helpers.hpp"

namespace asyncfl {
namespace {

using asyncfl::testing::scratch_dir;
using asyncfl::testing::write_file;

std::set<std::vector<double>> row_set(const Dataset& d) {
  std::set<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    std::vector<double> r(d.features.row(i).data(), d.features.row(i).data() + d.dim());
    r.push_back(d.labels[static_cast<std::size_t>(i)]);
    rows.insert(r);
  }
  return rows;
}

TEST(Blobs, ShapeAndDeterminism) {
  const Dataset a = gen_blobs(3, 20, 5, 0.2, Seed{1});
  EXPECT_EQ(a.size(), 60);
  EXPECT_EQ(a.dim(), 5);
  EXPECT_EQ(a.class_count, 3);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(std::count(a.labels.begin(), a.labels.end(), k), 20);
  EXPECT_EQ(a, gen_blobs(3, 20, 5, 0.2, Seed{1}));
  EXPECT_FALSE(a == gen_blobs(3, 20, 5, 0.2, Seed{2}));
  EXPECT_THROW(gen_blobs(1, 20, 2, 0.2, Seed{}), InvalidArgument);
  EXPECT_THROW(gen_blobs(2, 20, 2, 0.0, Seed{}), InvalidArgument);
}

TEST(Blobs, TightClustersAreSeparable) {
  const Dataset d = gen_blobs(3, 100, 2, 0.05, Seed{3});
  // Nearest class mean classifier.
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(3, 2);
  for (Eigen::Index i = 0; i < d.size(); ++i) means.row(d.labels[static_cast<std::size_t>(i)]) += d.features.row(i) / 100.0;
  int correct = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    Eigen::Index best;
    (means.rowwise() - d.features.row(i)).rowwise().squaredNorm().minCoeff(&best);
    correct += best == d.labels[static_cast<std::size_t>(i)];
  }
  EXPECT_GE(correct / 300.0, 0.95);
}

TEST(Rotate, ZeroAndComposition) {
  const Dataset d = gen_blobs(2, 30, 4, 0.3, Seed{5});
  EXPECT_EQ(rotate(d, 0.0), d);
  EXPECT_EQ(rotate(rotate(d, 90.0), 90.0), rotate(d, 180.0));
  const Dataset r = rotate(rotate(d, 30.0), 60.0);
  EXPECT_LT((r.features - rotate(d, 90.0).features).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Rotate, QuarterTurnMovesMeans) {
  const Dataset d = gen_blobs(2, 50, 3, 0.3, Seed{6});
  const Dataset r = rotate(d, 90.0);
  // (x, y, z) -> (-y, x, z): the odd trailing coordinate is untouched.
  const Eigen::RowVectorXd m = d.features.colwise().mean();
  const Eigen::RowVectorXd mr = r.features.colwise().mean();
  EXPECT_NEAR(mr(0), -m(1), 1e-9);
  EXPECT_NEAR(mr(1), m(0), 1e-9);
  EXPECT_EQ(mr(2), m(2));
  EXPECT_EQ(r.labels, d.labels);
}

TEST(RotatedTask, SharedSplitOneClientTurned) {
  const Dataset base = gen_blobs(2, 625, 2, 0.5, Seed{7});
  const SplitTask t = make_rotated_task(base, 90.0, 0.2, Seed{8});
  ASSERT_EQ(t.n_clients(), 2);
  EXPECT_EQ(t.clients[0].train.size(), 1000);
  EXPECT_EQ(t.clients[0].test.size(), 250);
  EXPECT_EQ(t.clients[1].train, rotate(t.clients[0].train, 90.0));
  EXPECT_EQ(t.clients[1].test, rotate(t.clients[0].test, 90.0));
  EXPECT_EQ(t.kind, TaskKind::rotated);
}

TEST(SplitClassTask, DisjointClassHalves) {
  const Dataset base = gen_blobs(4, 125, 2, 0.3, Seed{9});
  const SplitTask t = make_split_class_task(base, 0.2, Seed{10});
  ASSERT_EQ(t.n_clients(), 2);
  EXPECT_EQ(t.clients[0].train.size() + t.clients[0].test.size(), 250);
  EXPECT_EQ(t.clients[1].train.size() + t.clients[1].test.size(), 250);
  for (int y : t.clients[0].train.labels) EXPECT_LT(y, 2);
  for (int y : t.clients[1].test.labels) EXPECT_GE(y, 2);

  // Union of the client train sets is exactly the shared train split.
  const SplitTask rotated = make_rotated_task(base, 0.0, 0.2, Seed{10});
  auto both = row_set(t.clients[0].train);
  const auto other = row_set(t.clients[1].train);
  both.insert(other.begin(), other.end());
  EXPECT_EQ(both, row_set(rotated.clients[0].train));

  EXPECT_THROW(make_split_class_task(gen_blobs(3, 10, 2, 0.3, Seed{}), 0.2, Seed{}), InvalidArgument);
}

TEST(SplitClassTask, ModelNeverPredictsUnseenClasses) {
  const Dataset base = gen_blobs(4, 125, 2, 0.3, Seed{11});
  const SplitTask t = make_split_class_task(base, 0.2, Seed{12});
  const ModelSpec spec{{2, 16, 4}, Activation::relu};
  const auto p = sgd_steps(init_params(spec, Seed{13}), t.clients[0].train, HyperParams{}, 300, Seed{14});
  EXPECT_LE(evaluate(p, t.clients[1].test), 0.05);
  EXPECT_GE(evaluate(p, t.clients[0].test), 0.9);
}

TEST(IidTask, ShardsPartitionTheBase) {
  const Dataset base = gen_blobs(4, 300, 2, 0.3, Seed{15});
  const SplitTask t = make_iid_task(base, 3, 0.25, Seed{16});
  ASSERT_EQ(t.n_clients(), 3);
  std::set<std::vector<double>> all;
  std::size_t total = 0;
  for (const auto& c : t.clients) {
    EXPECT_EQ(c.train.size() + c.test.size(), 400);
    EXPECT_EQ(c.test.size(), 100);
    for (const auto* part : {&c.train, &c.test}) {
      const auto rows = row_set(*part);
      total += rows.size();
      all.insert(rows.begin(), rows.end());
    }
    // Each class share of 400 rows: mean 100, sd ~8.7.
    std::map<int, int> hist;
    for (int y : c.train.labels) ++hist[y];
    for (int y : c.test.labels) ++hist[y];
    for (auto [y, n] : hist) EXPECT_NEAR(n, 100, 3 * std::sqrt(400 * 0.25 * 0.75)) << "class " << y;
  }
  EXPECT_EQ(total, 1200u);
  EXPECT_EQ(all, row_set(base));
}

TEST(Csv, RoundTrip) {
  const auto dir = scratch_dir();
  const Dataset d = gen_blobs(3, 5, 3, 0.4, Seed{17});
  save_csv(d, dir / "d.csv");
  EXPECT_EQ(load_csv(dir / "d.csv", 3), d);
}

TEST(Csv, ErrorsNameFileAndLine) {
  const auto dir = scratch_dir();
  auto message = [&](const std::string& text, int classes = 3) -> std::string {
    write_file(dir / "bad.csv", text);
    try {
      load_csv(dir / "bad.csv", classes);
    } catch (const IoError& e) {
      return e.what();
    }
    return "no error";
  };
  EXPECT_NE(message("1.0,2.0,0\n1.0,abc,1\n").find("bad.csv: line 2: non-numeric field 'abc'"), std::string::npos);
  EXPECT_NE(message("").find("empty dataset"), std::string::npos);
  EXPECT_NE(message("1.0,2.0,5\n").find("line 1: label 5 >= class_count 3"), std::string::npos);
  EXPECT_NE(message("1.0,2.0,0.5\n").find("non-negative integer"), std::string::npos);
  EXPECT_NE(message("1,2,0\n\n1,1\n").find("line 3: expected 2 features, found 1"), std::string::npos);
  EXPECT_THROW(load_csv(dir / "missing.csv", 3), IoError);
}

}  // namespace
}  // namespace asyncfl
