#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "dcrec/tape.hpp"
#include "oracles.hpp"

namespace dcrec {
namespace {

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Central-difference gradient of a scalar-valued tape program with respect to
// each input matrix.
std::vector<Matrix> numeric_grads(const Builder& build, const std::vector<Matrix>& inputs,
                                  double h = 1e-6) {
  auto eval = [&](const std::vector<Matrix>& xs) {
    Tape t;
    std::vector<Var> vs;
    for (std::size_t k = 0; k < xs.size(); ++k) vs.push_back(t.leaf(xs[k], "x" + std::to_string(k)));
    return t.scalar(build(t, vs));
  };
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Matrix g(inputs[k].rows(), inputs[k].cols());
    for (Eigen::Index e = 0; e < inputs[k].size(); ++e) {
      auto plus = inputs, minus = inputs;
      plus[k].data()[e] += h;
      minus[k].data()[e] -= h;
      g.data()[e] = (eval(plus) - eval(minus)) / (2 * h);
    }
    out.push_back(g);
  }
  return out;
}

void expect_matches_numeric(const Builder& build, const std::vector<Matrix>& inputs,
                            double tol = 1e-6) {
  Tape t;
  std::vector<Var> vs;
  for (std::size_t k = 0; k < inputs.size(); ++k) vs.push_back(t.leaf(inputs[k], "x"));
  const Var root = build(t, vs);
  t.backward(root);
  const auto numeric = numeric_grads(build, inputs);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Matrix a = t.grad(vs[k]);
    ASSERT_EQ(a.rows(), numeric[k].rows());
    const double scale = std::max(1.0, numeric[k].cwiseAbs().maxCoeff());
    EXPECT_LE((a - numeric[k]).cwiseAbs().maxCoeff(), tol * scale) << "input " << k;
  }
}

// Reduces any matrix to a scalar with a fixed, non-symmetric weighting so
// that every entry's gradient is distinct.
Var probe(Tape& t, Var x) {
  const Matrix& v = t.value(x);
  Matrix w(v.rows(), v.cols());
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = 0.3 + 0.17 * static_cast<double>(k % 7);
  const Var weights = t.constant(w.transpose(), "probe");
  Var prod = ops::matmul(t, x, weights);  // rows x rows
  return ops::squared_norm(t, prod);
}

TEST(Tape, HalfSquaredNormGradientIsInput) {
  std::mt19937_64 rng(1);
  const Matrix p = oracle::random_matrix(4, 3, rng);
  Tape t;
  const Var x = t.leaf(p, "P");
  const Var loss = ops::scale(t, ops::squared_norm(t, x), 0.5);
  t.backward(loss);
  EXPECT_TRUE(t.grad(x) == p);
}

TEST(Tape, BprHandGradient) {
  Matrix u(1, 2), v(2, 2);
  u << 0.5, -1.0;
  v << 1.0, 2.0, -0.5, 0.25;
  Tape t;
  const Var users = t.leaf(u, "U");
  const Var items = t.leaf(v, "V");
  const Var loss = ops::bpr(t, users, items, {{0, 0, 1}}, 1.0);
  t.backward(loss);
  const double delta = u.row(0).dot(v.row(0)) - u.row(0).dot(v.row(1));
  const double s = 1.0 / (1.0 + std::exp(delta));  // sigmoid(-delta)
  const RowVector gu = -s * (v.row(0) - v.row(1));
  EXPECT_NEAR(t.scalar(loss), std::log1p(std::exp(-delta)), 1e-15);
  EXPECT_LE((t.grad(users).row(0) - gu).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((t.grad(items).row(0) - (-s * u.row(0))).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((t.grad(items).row(1) - (s * u.row(0))).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TapeOps, EachOperationMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  const Matrix a = oracle::random_matrix(4, 3, rng);
  const Matrix b = oracle::random_matrix(3, 3, rng);
  const Matrix c = oracle::random_matrix(4, 3, rng);
  const Matrix bias = oracle::random_matrix(1, 3, rng);

  expect_matches_numeric([](Tape& t, const auto& v) { return probe(t, ops::matmul(t, v[0], v[1])); }, {a, b});
  expect_matches_numeric([](Tape& t, const auto& v) { return probe(t, ops::add(t, v[0], v[1])); }, {a, c});
  expect_matches_numeric([](Tape& t, const auto& v) { return probe(t, ops::add_row(t, v[0], v[1])); }, {a, bias});
  expect_matches_numeric([](Tape& t, const auto& v) { return probe(t, ops::relu(t, v[0])); }, {a});
  expect_matches_numeric([](Tape& t, const auto& v) { return probe(t, ops::scale(t, v[0], -1.7)); }, {a});
  expect_matches_numeric([](Tape& t, const auto& v) {
    const Var xs[] = {v[0], v[1], v[0]};
    return probe(t, ops::mean(t, xs));
  }, {a, c});
  expect_matches_numeric([](Tape& t, const auto& v) { return probe(t, ops::concat_rows(t, v[0], v[1])); }, {a, c});
  expect_matches_numeric([](Tape& t, const auto& v) { return probe(t, ops::slice_rows(t, v[0], 1, 2)); }, {a});
  expect_matches_numeric([](Tape& t, const auto& v) { return probe(t, ops::gather_rows(t, v[0], {3, 0, 3})); }, {a});
  expect_matches_numeric([](Tape& t, const auto& v) { return ops::contrastive(t, v[0], v[1], 0.3); }, {a, c});
  expect_matches_numeric([](Tape& t, const auto& v) { return ops::squared_norm_rows(t, v[0], {0, 2}); }, {a});
  expect_matches_numeric([](Tape& t, const auto& v) {
    const Var terms[] = {ops::squared_norm(t, v[0]), ops::squared_norm(t, v[1])};
    const double w[] = {0.25, 3.0};
    return ops::weighted_sum(t, terms, w);
  }, {a, c});
  expect_matches_numeric([](Tape& t, const auto& v) {
    return ops::bpr(t, v[0], v[1], {{0, 1, 2}, {3, 0, 1}, {0, 2, 1}}, 0.5);
  }, {a, c});

  const auto adj = build_social_adjacency(oracle::random_social(4, 0.5, rng), 4, true);
  expect_matches_numeric([&adj](Tape& t, const auto& v) { return probe(t, ops::propagate(t, adj, v[0])); }, {a});
  const auto rect = SparseAdjacency::from_triplets(2, 4, {{{0, 1}, 0.5}, {{1, 3}, 2.0}, {{1, 0}, 1.0}});
  expect_matches_numeric([&rect](Tape& t, const auto& v) { return probe(t, ops::propagate(t, rect, v[0])); }, {a});
}

TEST(Tape, UnreachedAndConstantNodesHaveZeroGradient) {
  Tape t;
  const Var x = t.leaf(Matrix::Ones(2, 2), "x");
  const Var y = t.leaf(Matrix::Ones(2, 2), "y");
  const Var k = t.constant(Matrix::Ones(2, 2));
  const Var loss = ops::squared_norm(t, ops::add(t, x, k));
  t.backward(loss);
  EXPECT_TRUE(t.grad(y).isZero(0.0));
  EXPECT_FALSE(t.requires_grad(k));
  EXPECT_TRUE(t.grad(k).isZero(0.0));
  EXPECT_TRUE(t.grad(x).isApprox(Matrix::Constant(2, 2, 4.0)));
}

TEST(Tape, WeightedSumSkipsZeroWeights) {
  Tape t;
  const Var a = t.leaf(Matrix::Constant(1, 1, 2.0), "a");
  const Var bad = t.leaf(Matrix::Constant(1, 1, std::numeric_limits<double>::max()), "b");
  const Var sq = ops::squared_norm(t, a);
  const Var terms[] = {sq, bad};
  const double w[] = {1.0, 0.0};
  const Var out = ops::weighted_sum(t, terms, w);
  EXPECT_EQ(t.scalar(out), 4.0);
}

TEST(Tape, NonFiniteValueNamesOperation) {
  Tape t;
  const Var x = t.leaf(Matrix::Constant(2, 2, 1e200), "x");
  try {
    ops::matmul(t, x, x);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos) << e.what();
  }
}

TEST(Tape, ShapeErrors) {
  Tape t;
  const Var a = t.leaf(Matrix::Ones(2, 3), "a");
  const Var b = t.leaf(Matrix::Ones(2, 3), "b");
  EXPECT_THROW(ops::matmul(t, a, b), ShapeError);
  EXPECT_THROW(ops::slice_rows(t, a, 1, 2), ShapeError);
  EXPECT_THROW(ops::gather_rows(t, a, {2}), ShapeError);
}

TEST(Tape, ContrastiveRadialDerivativeIsZero) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix z1 = oracle::random_matrix(5, 4, rng);
    const Matrix z2 = oracle::random_matrix(5, 4, rng);
    Tape t;
    const Var a = t.leaf(z1, "z1");
    const Var b = t.leaf(z2, "z2");
    t.backward(ops::contrastive(t, a, b, 0.2));
    const Matrix g1 = t.grad(a), g2 = t.grad(b);
    for (Index j = 0; j < 5; ++j) {
      EXPECT_NEAR(g1.row(j).dot(z1.row(j)), 0.0, 1e-12);
      EXPECT_NEAR(g2.row(j).dot(z2.row(j)), 0.0, 1e-12);
    }
  }
}

TEST(Tape, ReplayIsBitIdentical) {
  std::mt19937_64 rng(4);
  const Matrix z1 = oracle::random_matrix(6, 4, rng), z2 = oracle::random_matrix(6, 4, rng);
  auto run = [&] {
    Tape t;
    const Var a = t.leaf(z1, "a");
    const Var b = t.leaf(z2, "b");
    const Var l = ops::add(t, ops::contrastive(t, a, b, 0.2), ops::squared_norm(t, ops::relu(t, a)));
    t.backward(l);
    return std::make_tuple(t.scalar(l), t.grad(a), t.grad(b));
  };
  const auto x = run();
  const auto y = run();
  EXPECT_EQ(std::get<0>(x), std::get<0>(y));
  EXPECT_TRUE(std::get<1>(x) == std::get<1>(y));
  EXPECT_TRUE(std::get<2>(x) == std::get<2>(y));
}

}  // namespace
}  // namespace dcrec
