#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "dcrec/augment.hpp"
#include "dcrec/log.hpp"
#include "oracles.hpp"

namespace dcrec {
namespace {

bool is_subset(const EdgeSet& small, const EdgeSet& big) {
  return std::includes(big.edges.begin(), big.edges.end(), small.edges.begin(), small.edges.end());
}

EdgeSet random_social_set(std::mt19937_64& rng, Index max_nodes = 30) {
  const Index n = 2 + static_cast<Index>(rng() % (max_nodes - 1));
  return EdgeSet::social(n, oracle::random_social(n, (rng() % 100) / 100.0, rng));
}

EdgeSet random_bipartite_set(std::mt19937_64& rng) {
  const Index m = 1 + static_cast<Index>(rng() % 15);
  const Index n = 1 + static_cast<Index>(rng() % 15);
  return EdgeSet::bipartite(m, n, oracle::random_bipartite(m, n, (rng() % 100) / 100.0, rng));
}

EdgeSet ring(Index n) {
  std::vector<Edge> edges;
  for (Index k = 0; k < n; ++k) edges.push_back({k, (k + 1) % n});
  return EdgeSet::social(n, edges);
}

// A graph with exactly `count` edges, spread over enough nodes to stay sparse.
EdgeSet sparse_graph(std::size_t count, std::mt19937_64& rng) {
  const Index n = static_cast<Index>(std::sqrt(static_cast<double>(count)) * 8) + 4;
  std::set<Edge> edges;
  std::uniform_int_distribution<Index> node(0, n - 1);
  while (edges.size() < count) {
    Index a = node(rng), b = node(rng);
    if (a == b) continue;
    edges.insert({std::min(a, b), std::max(a, b)});
  }
  return EdgeSet::social(n, {edges.begin(), edges.end()});
}

// Edges with both endpoints among nodes that still have an edge must all
// survive: otherwise some surviving node was dropped.
void expect_node_drop_closure(const EdgeSet& in, const EdgeSet& out) {
  std::set<Index> alive;
  const Index offset = in.square ? 0 : in.left_count;
  for (const Edge& e : out.edges) {
    alive.insert(e.a);
    alive.insert(offset + e.b);
  }
  for (const Edge& e : in.edges) {
    if (alive.count(e.a) && alive.count(offset + e.b)) EXPECT_TRUE(out.contains(e));
  }
}

TEST(EdgeDropout, RateZeroIsIdentity) {
  std::mt19937_64 rng(1);
  const EdgeSet g = random_social_set(rng);
  EXPECT_EQ(edge_dropout(g, 0.0, 9).edges, g.edges);
}

TEST(EdgeDropout, RateOneIsEmpty) {
  EXPECT_TRUE(edge_dropout(ring(10), 1.0, 9).edges.empty());
}

TEST(EdgeDropout, KeptCountOnTenThousandEdges) {
  std::mt19937_64 rng(2);
  const EdgeSet g = sparse_graph(10000, rng);
  ASSERT_EQ(g.size(), 10000u);
  const std::size_t kept = edge_dropout(g, 0.2, 77).size();
  EXPECT_GE(kept, 7700u);
  EXPECT_LE(kept, 8300u);
}

TEST(EdgeDropout, DeterministicPerSeed) {
  std::mt19937_64 rng(3);
  const EdgeSet g = sparse_graph(500, rng);
  EXPECT_EQ(edge_dropout(g, 0.3, 5).edges, edge_dropout(g, 0.3, 5).edges);
  EXPECT_NE(edge_dropout(g, 0.3, 5).edges, edge_dropout(g, 0.3, 6).edges);
}

TEST(NodeDropout, RateZeroIsIdentity) {
  std::mt19937_64 rng(4);
  const EdgeSet g = random_bipartite_set(rng);
  EXPECT_EQ(node_dropout(g, 0.0, 1).edges, g.edges);
}

TEST(NodeDropout, StarCenterDroppedEmptiesGraph) {
  // Dropping 1 of 2 nodes of a single edge always hits the star's center or
  // its only leaf; both empty the graph.
  EXPECT_TRUE(node_dropout(EdgeSet::social(2, {{0, 1}}), 0.5, 3).edges.empty());
  // Larger star: whenever the center goes, nothing survives; otherwise the
  // surviving edges all touch the center.
  std::vector<Edge> star;
  for (Index k = 1; k < 10; ++k) star.push_back({0, k});
  const EdgeSet g = EdgeSet::social(10, star);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const EdgeSet out = node_dropout(g, 0.2, seed);
    EXPECT_TRUE(out.size() == 0 || out.size() == 7u) << out.size();
  }
}

TEST(NodeDropout, RemovesExactlyIncidentEdges) {
  // Ring: every node has degree 2, so dropping k non-adjacent-or-adjacent
  // nodes removes between k+1 and 2k edges.
  const EdgeSet g = ring(20);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const EdgeSet out = node_dropout(g, 0.25, seed);  // 5 nodes
    EXPECT_TRUE(is_subset(out, g));
    expect_node_drop_closure(g, out);
    const std::size_t removed = g.size() - out.size();
    EXPECT_GE(removed, 6u);
    EXPECT_LE(removed, 10u);
  }
}

TEST(EdgeAdd, RateZeroIsIdentity) {
  EXPECT_EQ(edge_add(ring(12), 0.0, 1).edges, ring(12).edges);
}

TEST(EdgeAdd, SaturatedPairUnchanged) {
  const EdgeSet g = EdgeSet::social(2, {{0, 1}});
  EXPECT_EQ(edge_add(g, 1.0, 1).edges, g.edges);
}

TEST(EdgeAdd, HundredEdgesPlusTenPercent) {
  std::mt19937_64 rng(6);
  const EdgeSet g = sparse_graph(100, rng);
  const EdgeSet out = edge_add(g, 0.1, 8);
  EXPECT_EQ(out.size(), 110u);
  EXPECT_TRUE(is_subset(g, out));
}

TEST(EdgeAdd, DenseGraphAddsAllAvailablePairs) {
  // K5 minus two edges: only two pairs are addable.
  std::vector<Edge> edges;
  for (Index a = 0; a < 5; ++a)
    for (Index b = a + 1; b < 5; ++b) edges.push_back({a, b});
  edges.erase(edges.begin());
  edges.erase(edges.begin());
  const EdgeSet g = EdgeSet::social(5, edges);
  EXPECT_EQ(edge_add(g, 1.0, 2).size(), 10u);
}

TEST(EdgeAdd, RejectedOnCollaborativeDomain) {
  const AugmentationSpec spec{AugmentationKind::EdgeAdd, 0.1, 1};
  EXPECT_THROW(spec.validate(GraphDomain::Collaborative), ConfigError);
  const EdgeSet g = EdgeSet::bipartite(2, 2, {{0, 0}});
  EXPECT_THROW(make_views(GraphDomain::Collaborative, g, spec, spec), ConfigError);
  EXPECT_THROW(edge_add(g, 0.1, 1), ConfigError);
}

TEST(Augmentation, InvariantsOnRandomGraphs) {
  log::set_level(log::Level::Error);  // saturation warnings are expected here
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> rate(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const bool social = trial % 2 == 0;
    const EdgeSet g = social ? random_social_set(rng) : random_bipartite_set(rng);
    const double r = rate(rng);
    const std::uint64_t seed = rng();

    const EdgeSet dropped = edge_dropout(g, r, seed);
    EXPECT_TRUE(is_subset(dropped, g));

    const EdgeSet nd = node_dropout(g, r, seed);
    EXPECT_TRUE(is_subset(nd, g));
    expect_node_drop_closure(g, nd);

    if (social) {
      const EdgeSet added = edge_add(g, r, seed);
      EXPECT_TRUE(is_subset(g, added));
      const std::size_t possible = static_cast<std::size_t>(g.left_count) * (g.left_count - 1) / 2;
      const std::size_t want = static_cast<std::size_t>(std::floor(r * g.size()));
      EXPECT_EQ(added.size(), std::min(possible, g.size() + want));
      for (const Edge& e : added.edges) EXPECT_LT(e.a, e.b);
    }
  }
  log::set_level(log::Level::Info);
}

TEST(Augmentation, RateZeroIsBitExactForEveryKind) {
  std::mt19937_64 rng(8);
  const EdgeSet g = random_social_set(rng);
  for (auto kind : {AugmentationKind::Identity, AugmentationKind::EdgeDrop,
                    AugmentationKind::NodeDrop, AugmentationKind::EdgeAdd}) {
    const EdgeSet out = apply_augmentation(g, {kind, 0.0, 3});
    EXPECT_EQ(out.edges, g.edges);
    EXPECT_TRUE(normalize_for_domain(GraphDomain::Social, out) ==
                normalize_for_domain(GraphDomain::Social, g));
  }
}

TEST(MakeViews, IdentityViewsEqualBase) {
  std::mt19937_64 rng(9);
  const EdgeSet social = random_social_set(rng);
  auto [s1, s2] = make_views(GraphDomain::Social, social, {}, {});
  EXPECT_TRUE(s1.adjacency == build_social_adjacency(social, true));
  EXPECT_TRUE(s2.adjacency == s1.adjacency);
  EXPECT_EQ(s1.view_id, 1);
  EXPECT_EQ(s2.view_id, 2);

  const EdgeSet items = random_bipartite_set(rng);
  auto [i1, i2] = make_views(GraphDomain::Collaborative, items, {}, {});
  EXPECT_TRUE(i1.adjacency == build_interaction_adjacency(items));
  EXPECT_TRUE(i2.adjacency == i1.adjacency);
}

TEST(MakeViews, DifferentSeedsGiveDifferentViews) {
  std::mt19937_64 rng(10);
  const EdgeSet g = sparse_graph(1000, rng);
  auto [a, b] = make_views(GraphDomain::Social, g, {AugmentationKind::EdgeDrop, 0.3, 1},
                           {AugmentationKind::EdgeDrop, 0.3, 2});
  EXPECT_NE(a.edges.edges, b.edges.edges);
  auto [c, d] = make_views(GraphDomain::Social, g, {AugmentationKind::EdgeDrop, 0.3, 1},
                           {AugmentationKind::EdgeDrop, 0.3, 2});
  EXPECT_TRUE(a.adjacency == c.adjacency);
  EXPECT_TRUE(b.adjacency == d.adjacency);
}

TEST(MakeViews, RenormalizationMatchesDenseOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const EdgeSet social = random_social_set(rng, 20);
    auto [s1, s2] = make_views(GraphDomain::Social, social, {AugmentationKind::EdgeDrop, 0.3, rng()},
                               {AugmentationKind::EdgeAdd, 0.3, rng()});
    for (const auto* v : {&s1, &s2}) {
      const Matrix dense = oracle::dense_social(social.left_count, v->edges.edges, true);
      EXPECT_LE((v->adjacency.to_dense() - dense).cwiseAbs().maxCoeff(), 1e-12);
    }
    const Index m = 1 + static_cast<Index>(rng() % 10), n = 1 + static_cast<Index>(rng() % 10);
    const EdgeSet items = EdgeSet::bipartite(m, n, oracle::random_bipartite(m, n, 0.4, rng));
    auto [i1, i2] = make_views(GraphDomain::Collaborative, items,
                               {AugmentationKind::NodeDrop, 0.2, rng()},
                               {AugmentationKind::EdgeDrop, 0.2, rng()});
    for (const auto* v : {&i1, &i2}) {
      const Matrix dense = oracle::dense_bipartite(m, n, v->edges.edges);
      EXPECT_LE((v->adjacency.to_dense() - dense).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(AugmentationSpec, ParsesAndPrints) {
  const auto s = AugmentationSpec::parse("EdgeDrop:0.1");
  EXPECT_EQ(s.kind, AugmentationKind::EdgeDrop);
  EXPECT_DOUBLE_EQ(s.rate, 0.1);
  EXPECT_EQ(AugmentationSpec::parse(s.to_string()), s);
  EXPECT_THROW(AugmentationSpec::parse("EdgeDrop"), ConfigError);
  EXPECT_THROW(AugmentationSpec::parse("Bogus:0.1"), ConfigError);
  EXPECT_THROW(AugmentationSpec::parse("EdgeDrop:1.5"), ConfigError);
}

}  // namespace
}  // namespace dcrec
