#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dcrec/data.hpp"

namespace dcrec {

/// Users and items are split round-robin into communities. A user interacts
/// with an in-community item with probability `in_community_probability` and
/// with any other item at that probability divided by `affinity_ratio`. Social
/// edges are drawn per user, landing inside the community with probability
/// `social_in_community`.
struct PlantedCommunitySpec {
  Index users = 1000;
  Index items = 800;
  Index communities = 10;
  double in_community_probability = 0.08;
  double affinity_ratio = 10.0;
  double friends_per_user = 5.0;  // undirected edges initiated per user
  double social_in_community = 0.9;
  std::uint64_t seed = 1;
};

struct SyntheticData {
  std::vector<InteractionRecord> interactions;  // rating 5
  std::vector<SocialRecord> relations;          // one direction per drawn edge
  std::vector<Index> user_community;
  std::vector<Index> item_community;
};

SyntheticData generate_planted_communities(const PlantedCommunitySpec& spec);

/// Writes "user item rating" and "user friend" files.
void write_synthetic(const SyntheticData& data, const std::filesystem::path& ratings,
                     const std::filesystem::path& relations);

/// Filter-free pipeline from synthetic records to a split, adjacency-built
/// dataset (8:1:1, `split_seed`).
Dataset build_synthetic_dataset(const SyntheticData& data, std::uint64_t split_seed);

}  // namespace dcrec
