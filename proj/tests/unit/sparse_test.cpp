#include <gtest/gtest.h>

#include <random>

#include "dcrec/sparse.hpp"
#include "oracles.hpp"

namespace dcrec {
namespace {

void expect_csr_invariants(const SparseAdjacency& a) {
  EXPECT_NO_THROW(a.validate());
  const auto& offsets = a.row_offsets();
  ASSERT_EQ(offsets.size(), static_cast<std::size_t>(a.rows()) + 1);
  for (Index r = 0; r < a.rows(); ++r) {
    EXPECT_LE(offsets[r], offsets[r + 1]);
    for (auto k = offsets[r]; k < offsets[r + 1]; ++k) {
      EXPECT_GE(a.col_indices()[k], 0);
      EXPECT_LT(a.col_indices()[k], a.cols());
      if (k > offsets[r]) EXPECT_LT(a.col_indices()[k - 1], a.col_indices()[k]);
      EXPECT_TRUE(std::isfinite(a.values()[k]));
      EXPECT_GT(a.values()[k], 0.0);
    }
  }
}

TEST(InteractionAdjacency, SingleEdgeHasUnitWeight) {
  const auto a = build_interaction_adjacency({{0, 0}}, 1, 1);
  EXPECT_EQ(a.rows(), 2);
  EXPECT_EQ(a.nnz(), 2u);
  EXPECT_DOUBLE_EQ(a.at(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(a.at(1, 0), 1.0);
}

TEST(InteractionAdjacency, HubUserWithFourLeafItems) {
  const auto a = build_interaction_adjacency({{0, 0}, {0, 1}, {0, 2}, {0, 3}}, 1, 4);
  for (Index i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(a.at(0, 1 + i), 0.5);
    EXPECT_DOUBLE_EQ(a.at(1 + i, 0), 0.5);
  }
}

TEST(InteractionAdjacency, EmptyTrainSetGivesZeroMessages) {
  const auto a = build_interaction_adjacency(std::vector<Edge>{}, 3, 2);
  EXPECT_EQ(a.rows(), 5);
  EXPECT_EQ(a.nnz(), 0u);
  const Matrix x = Matrix::Ones(5, 3);
  EXPECT_TRUE(a.multiply(x).isZero(0.0));
}

TEST(InteractionAdjacency, RejectsOutOfRangeIndices) {
  EXPECT_THROW(build_interaction_adjacency({{0, 2}}, 1, 2), ShapeError);
  EXPECT_THROW(build_interaction_adjacency({{-1, 0}}, 1, 2), ShapeError);
}

TEST(SocialAdjacency, IsolatedUserWithSelfLoop) {
  const auto a = build_social_adjacency(std::vector<Edge>{}, 1, true);
  EXPECT_EQ(a.nnz(), 1u);
  EXPECT_DOUBLE_EQ(a.at(0, 0), 1.0);
}

TEST(SocialAdjacency, PairWithSelfLoops) {
  const auto a = build_social_adjacency({{0, 1}}, 2, true);
  EXPECT_DOUBLE_EQ(a.at(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(a.at(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(a.at(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(a.at(1, 1), 0.5);
}

TEST(SocialAdjacency, PairWithoutSelfLoops) {
  const auto a = build_social_adjacency({{0, 1}}, 2, false);
  EXPECT_EQ(a.nnz(), 2u);
  EXPECT_DOUBLE_EQ(a.at(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(a.at(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(a.at(0, 0), 0.0);
}

TEST(SocialAdjacency, MatchesDenseNormalizationOnRandomGraphs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 20);
    const double p = (rng() % 100) / 100.0;
    const auto edges = oracle::random_social(n, p, rng);
    for (bool loops : {true, false}) {
      const auto sparse = build_social_adjacency(edges, n, loops);
      expect_csr_invariants(sparse);
      EXPECT_TRUE(sparse.is_structurally_symmetric());
      const Matrix dense = oracle::dense_social(n, edges, loops);
      EXPECT_LE((sparse.to_dense() - dense).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(InteractionAdjacency, MatchesDenseNormalizationOnRandomGraphs) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 60; ++trial) {
    const Index m = 1 + static_cast<Index>(rng() % 10);
    const Index n = 1 + static_cast<Index>(rng() % 10);
    const auto edges = oracle::random_bipartite(m, n, (rng() % 100) / 100.0, rng);
    const auto sparse = build_interaction_adjacency(edges, m, n);
    expect_csr_invariants(sparse);
    EXPECT_TRUE(sparse.is_structurally_symmetric());
    EXPECT_LE((sparse.to_dense() - oracle::dense_bipartite(m, n, edges)).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(SparseAdjacency, MultiplyMatchesDense) {
  std::mt19937_64 rng(13);
  const auto a = build_social_adjacency(oracle::random_social(15, 0.3, rng), 15, true);
  const Matrix x = oracle::random_matrix(15, 4, rng);
  EXPECT_LE((a.multiply(x) - a.to_dense() * x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((a.multiply_transpose(x) - a.to_dense().transpose() * x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SparseAdjacency, FromTripletsRejectsDuplicates) {
  EXPECT_THROW(SparseAdjacency::from_triplets(2, 2, {{{0, 1}, 1.0}, {{0, 1}, 2.0}}), ShapeError);
  const auto a = SparseAdjacency::from_triplets(2, 2, {{{1, 0}, 2.0}, {{0, 1}, 1.0}});
  EXPECT_DOUBLE_EQ(a.at(1, 0), 2.0);
  EXPECT_DOUBLE_EQ(a.at(0, 1), 1.0);
}

TEST(SparseAdjacency, ConstructorRejectsBrokenInvariants) {
  EXPECT_THROW(SparseAdjacency(1, 2, {0, 2}, {1, 0}, {1.0, 1.0}), ShapeError);  // unsorted
  EXPECT_THROW(SparseAdjacency(1, 2, {0, 1}, {0}, {-1.0}), ShapeError);          // negative
  EXPECT_THROW(SparseAdjacency(1, 2, {0, 1}, {2}, {1.0}), ShapeError);           // column range
}

TEST(EdgeSet, NormalizeCanonicalizesSocialEdges) {
  EdgeSet s = EdgeSet::social(3, {{2, 1}, {1, 2}, {0, 0}, {0, 2}});
  EXPECT_EQ(s.edges, (std::vector<Edge>{{0, 2}, {1, 2}}));
  EXPECT_TRUE(s.contains({2, 1}));
  EXPECT_FALSE(s.contains({0, 1}));
}

}  // namespace
}  // namespace dcrec
