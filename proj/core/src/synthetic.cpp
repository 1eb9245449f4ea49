#include "dcrec/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace dcrec {

SyntheticData generate_planted_communities(const PlantedCommunitySpec& spec) {
  if (spec.users < 2 || spec.items < 1 || spec.communities < 1) {
    throw ConfigError("planted community spec needs >= 2 users, >= 1 item and >= 1 community");
  }
  if (!(spec.affinity_ratio >= 1.0) || !(spec.in_community_probability > 0.0) ||
      spec.in_community_probability > 1.0) {
    throw ConfigError("invalid planted community probabilities");
  }
  std::mt19937_64 rng(spec.seed);
  SyntheticData data;
  data.user_community.resize(static_cast<std::size_t>(spec.users));
  data.item_community.resize(static_cast<std::size_t>(spec.items));
  for (Index u = 0; u < spec.users; ++u) data.user_community[u] = u % spec.communities;
  for (Index i = 0; i < spec.items; ++i) data.item_community[i] = i % spec.communities;

  auto user_id = [](Index u) { return "u" + std::to_string(u); };
  auto item_id = [](Index i) { return "i" + std::to_string(i); };

  const double p_in = spec.in_community_probability;
  const double p_out = p_in / spec.affinity_ratio;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Index u = 0; u < spec.users; ++u) {
    for (Index i = 0; i < spec.items; ++i) {
      const double p = data.user_community[u] == data.item_community[i] ? p_in : p_out;
      if (unit(rng) < p) data.interactions.push_back({user_id(u), item_id(i), 5.0});
    }
  }

  std::vector<std::vector<Index>> members(static_cast<std::size_t>(spec.communities));
  for (Index u = 0; u < spec.users; ++u) members[data.user_community[u]].push_back(u);
  std::poisson_distribution<int> degree(spec.friends_per_user);
  std::uniform_int_distribution<Index> any_user(0, spec.users - 1);
  for (Index u = 0; u < spec.users; ++u) {
    const int count = degree(rng);
    const auto& mine = members[data.user_community[u]];
    for (int k = 0; k < count; ++k) {
      Index v = u;
      if (unit(rng) < spec.social_in_community && mine.size() > 1) {
        std::uniform_int_distribution<std::size_t> pick(0, mine.size() - 1);
        while (v == u) v = mine[pick(rng)];
      } else {
        while (v == u || (spec.communities > 1 &&
                          data.user_community[v] == data.user_community[u])) {
          v = any_user(rng);
        }
      }
      data.relations.push_back({user_id(u), user_id(v)});
    }
  }
  return data;
}

void write_synthetic(const SyntheticData& data, const std::filesystem::path& ratings,
                     const std::filesystem::path& relations) {
  std::ofstream r(ratings);
  if (!r) throw IoError("cannot write " + ratings.string());
  for (const auto& x : data.interactions) r << x.user_raw_id << '\t' << x.item_raw_id << '\t' << x.rating << '\n';
  std::ofstream s(relations);
  if (!s) throw IoError("cannot write " + relations.string());
  for (const auto& x : data.relations) s << x.user_raw_id << '\t' << x.friend_raw_id << '\n';
  if (!r || !s) throw IoError("write failure on synthetic data");
}

Dataset build_synthetic_dataset(const SyntheticData& data, std::uint64_t split_seed) {
  IdIndex index = IdIndex::from_records(data.interactions);
  DatasetSplit split = split_interactions(data.interactions, index, {8, 1, 1}, split_seed);
  std::ostringstream social_text;
  for (const auto& rel : data.relations) social_text << rel.user_raw_id << ' ' << rel.friend_raw_id << '\n';
  std::istringstream in(social_text.str());
  EdgeSet social = social_edge_set(parse_social(in, index, "<synthetic>"), index);
  return assemble_dataset(std::move(index), std::move(split), std::move(social));
}

}  // namespace dcrec
