#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "dcrec/data.hpp"
#include "temp_dir.hpp"

namespace dcrec {
namespace {

std::vector<InteractionRecord> parse(const std::string& text, double min_rating = 4.0) {
  std::istringstream in(text);
  return parse_interactions(in, min_rating, "ratings.txt");
}

std::vector<InteractionRecord> numbered_records(std::size_t count, std::size_t users = 37) {
  std::vector<InteractionRecord> out;
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back({"u" + std::to_string(k % users), "i" + std::to_string(k), 5.0});
  }
  return out;
}

TEST(LoadInteractions, KeepsRatingAtThreshold) {
  const auto r = parse("u1\ti9\t5\n");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0], (InteractionRecord{"u1", "i9", 5.0}));
}

TEST(LoadInteractions, DropsRatingBelowThreshold) { EXPECT_TRUE(parse("u1\ti9\t3\n").empty()); }

TEST(LoadInteractions, MixedSeparatorsCommentsAndExtraFields) {
  const auto r = parse("# header\n\nu1   i1\t4 999 extra\n  u2 i2 5\n");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].item_raw_id, "i1");
  EXPECT_EQ(r[1].user_raw_id, "u2");
}

TEST(LoadInteractions, DuplicatesKeepMaxRatingAtFirstPosition) {
  const auto r = parse("a x 4\nb y 5\na x 5\n");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0], (InteractionRecord{"a", "x", 5.0}));
  EXPECT_EQ(r[1].user_raw_id, "b");
}

TEST(LoadInteractions, MalformedLineNamesLine) {
  try {
    parse("a x 5\nb y\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("ratings.txt:2"), std::string::npos) << e.what();
  }
}

TEST(LoadInteractions, NonNumericRatingIsParseError) {
  EXPECT_THROW(parse("a x five\n"), ParseError);
  EXPECT_THROW(parse("a x nan\n"), ParseError);
}

TEST(LoadInteractions, MissingFileIsIoErrorWithPath) {
  try {
    load_interactions("/nonexistent/ratings.txt", 4.0);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/ratings.txt"), std::string::npos);
  }
}

TEST(LoadInteractions, FilterIsMonotoneInThreshold) {
  std::mt19937_64 rng(3);
  std::ostringstream text;
  for (int k = 0; k < 500; ++k) {
    text << "u" << rng() % 50 << " i" << rng() % 80 << " " << 1 + rng() % 5 << "\n";
  }
  std::size_t previous = std::numeric_limits<std::size_t>::max();
  for (double t : {0.0, 1.0, 1.5, 2.0, 3.0, 4.0, 4.5, 5.0, 6.0}) {
    const std::size_t kept = parse(text.str(), t).size();
    EXPECT_LE(kept, previous) << "threshold " << t;
    previous = kept;
  }
}

IdIndex index_of(const std::vector<std::string>& users) {
  IdIndex index;
  for (const auto& u : users) index.add_user(u);
  return index;
}

TEST(LoadSocial, BothDirectionsCollapseToOneUndirectedEdge) {
  const IdIndex index = index_of({"a", "b"});
  std::istringstream in("a b\nb a\n");
  std::size_t directed = 0;
  const auto rel = parse_social(in, index, "social", &directed);
  EXPECT_EQ(rel.size(), 2u);
  EXPECT_EQ(directed, 2u);
  const EdgeSet edges = social_edge_set(rel, index);
  EXPECT_EQ(edges.edges, (std::vector<Edge>{{0, 1}}));
}

TEST(LoadSocial, SelfLoopAndUnknownUsersExcluded) {
  const IdIndex index = index_of({"a", "b"});
  std::istringstream in("a a\na zz\nb a\n");
  const auto rel = parse_social(in, index);
  ASSERT_EQ(rel.size(), 2u);
  EXPECT_EQ(rel[0], (SocialRecord{"a", "b"}));
  EXPECT_EQ(rel[1], (SocialRecord{"b", "a"}));
}

TEST(Split, TenRecordsGiveEightOneOne) {
  const auto records = numbered_records(10);
  const IdIndex index = IdIndex::from_records(records);
  const auto s = split_interactions(records, index, {8, 1, 1}, 7);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.validation.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
}

TEST(Split, SameSeedSameSplit) {
  const auto records = numbered_records(300);
  const IdIndex index = IdIndex::from_records(records);
  const auto a = split_interactions(records, index, {8, 1, 1}, 7);
  const auto b = split_interactions(records, index, {8, 1, 1}, 7);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_EQ(a.test, b.test);
  const auto c = split_interactions(records, index, {8, 1, 1}, 8);
  EXPECT_NE(a.test, c.test);
}

TEST(Split, FewerThanTenRecordsRefused) {
  const auto records = numbered_records(9);
  EXPECT_THROW(split_interactions(records, IdIndex::from_records(records), {8, 1, 1}, 1),
               ConfigError);
}

TEST(Split, DianpingSizedPartition) {
  const auto records = numbered_records(51946, 1000);
  const IdIndex index = IdIndex::from_records(records);
  const auto s = split_interactions(records, index, {8, 1, 1}, 1);
  EXPECT_LE(std::abs(static_cast<long>(s.train.size()) - 41557), 1);
  EXPECT_LE(std::abs(static_cast<long>(s.validation.size()) - 5195), 1);
  EXPECT_LE(std::abs(static_cast<long>(s.test.size()) - 5194), 1);
  EXPECT_EQ(s.total(), 51946u);
}

TEST(Split, DisjointAndCoveringForManySeeds) {
  std::mt19937_64 rng(5);
  std::vector<InteractionRecord> records;
  std::set<std::pair<int, int>> seen;
  while (records.size() < 1000) {
    const int u = static_cast<int>(rng() % 120), i = static_cast<int>(rng() % 150);
    if (seen.insert({u, i}).second) {
      records.push_back({"u" + std::to_string(u), "i" + std::to_string(i), 5.0});
    }
  }
  const IdIndex index = IdIndex::from_records(records);
  std::set<Edge> all;
  for (const auto& r : records) all.insert({index.user(r.user_raw_id), index.item(r.item_raw_id)});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = split_interactions(records, index, {8, 1, 1}, seed);
    std::set<Edge> u;
    std::size_t count = 0;
    for (Fold f : {Fold::Train, Fold::Validation, Fold::Test}) {
      for (const Edge& e : s.fold(f)) {
        u.insert(e);
        ++count;
      }
    }
    EXPECT_EQ(count, all.size()) << "seed " << seed;  // disjoint
    EXPECT_EQ(u, all) << "seed " << seed;              // covering
    EXPECT_EQ(s.validation.size(), 100u);
    EXPECT_EQ(s.test.size(), 100u);
  }
}

TEST(Manifest, RoundTripReproducesSplit) {
  testing::TempDir dir;
  const auto records = numbered_records(120);
  const IdIndex index = IdIndex::from_records(records);
  const auto split = split_interactions(records, index, {8, 1, 1}, 3);
  write_split_manifest(dir / "split.tsv", index, records, split);
  const PreparedData back = read_split_manifest(dir / "split.tsv", 3);
  EXPECT_EQ(back.index.users(), index.users());
  EXPECT_EQ(back.index.items(), index.items());
  for (Fold f : {Fold::Train, Fold::Validation, Fold::Test}) {
    ASSERT_EQ(back.split.fold(f).size(), split.fold(f).size());
    for (std::size_t k = 0; k < split.fold(f).size(); ++k) {
      const Edge a = split.fold(f)[k];
      const Edge b = back.split.fold(f)[k];
      EXPECT_EQ(index.user_raw(a.a), back.index.user_raw(b.a));
      EXPECT_EQ(index.item_raw(a.b), back.index.item_raw(b.b));
    }
  }
}

TEST(Manifest, SocialEdgesRoundTrip) {
  testing::TempDir dir;
  const IdIndex index = index_of({"a", "b", "c"});
  const EdgeSet edges = EdgeSet::social(3, {{0, 1}, {1, 2}});
  write_social_edges(dir / "social.tsv", index, edges);
  EXPECT_EQ(read_social_edges(dir / "social.tsv", index).edges, edges.edges);
}

TEST(Dataset, AssembleBuildsBothDomains) {
  const auto records = numbered_records(40, 8);
  IdIndex index = IdIndex::from_records(records);
  auto split = split_interactions(records, index, {8, 1, 1}, 1);
  const Index m = index.users();
  const Index n = index.items();
  const Dataset d = assemble_dataset(std::move(index), std::move(split), EdgeSet::social(m, {{0, 1}}));
  EXPECT_EQ(d.interaction_adjacency.rows(), m + n);
  EXPECT_EQ(d.social_adjacency.rows(), m);
  EXPECT_FALSE(d.social_free());
  EXPECT_EQ(d.train_edges.size(), 32u);
  std::size_t total = 0;
  for (const auto& items : d.items_by_user(Fold::Train)) total += items.size();
  EXPECT_EQ(total, 32u);
}

TEST(Stats, DensityIsRatingsOverCells) {
  const auto records = numbered_records(10, 2);
  const auto s = compute_stats(IdIndex::from_records(records), 10, 3);
  EXPECT_EQ(s.users, 2);
  EXPECT_EQ(s.items, 10);
  EXPECT_DOUBLE_EQ(s.density, 10.0 / 20.0);
}

}  // namespace
}  // namespace dcrec
