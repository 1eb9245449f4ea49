#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcrec/common.hpp"
#include "dcrec/sparse.hpp"

namespace dcrec {

struct InteractionRecord {
  std::string user_raw_id;
  std::string item_raw_id;
  double rating = 0.0;

  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

struct SocialRecord {
  std::string user_raw_id;
  std::string friend_raw_id;

  friend bool operator==(const SocialRecord&, const SocialRecord&) = default;
};

/// Dense, contiguous indices for raw user and item ids, assigned in order of
/// first appearance.
class IdIndex {
 public:
  static IdIndex from_records(const std::vector<InteractionRecord>& records);

  Index add_user(const std::string& raw);
  Index add_item(const std::string& raw);

  // Return -1 when the id is unknown.
  Index user(const std::string& raw) const;
  Index item(const std::string& raw) const;

  const std::string& user_raw(Index idx) const { return user_names_.at(idx); }
  const std::string& item_raw(Index idx) const { return item_names_.at(idx); }

  Index users() const { return static_cast<Index>(user_names_.size()); }
  Index items() const { return static_cast<Index>(item_names_.size()); }

 private:
  std::unordered_map<std::string, Index> user_map_;
  std::unordered_map<std::string, Index> item_map_;
  std::vector<std::string> user_names_;
  std::vector<std::string> item_names_;
};

enum class Fold : std::uint8_t { Train = 0, Validation = 1, Test = 2 };

const char* fold_name(Fold fold);
Fold parse_fold(const std::string& name);

struct DatasetSplit {
  std::vector<Edge> train;  // (user, item) dense indices
  std::vector<Edge> validation;
  std::vector<Edge> test;
  std::uint64_t seed = 0;

  const std::vector<Edge>& fold(Fold f) const;
  std::size_t total() const { return train.size() + validation.size() + test.size(); }
};

/// Reads "user item rating [ignored...]" lines. Keeps records with
/// rating >= min_rating; duplicate (user, item) pairs keep the max rating and
/// the position of their first retained occurrence.
std::vector<InteractionRecord> load_interactions(const std::filesystem::path& path,
                                                 double min_rating);
std::vector<InteractionRecord> parse_interactions(std::istream& in, double min_rating,
                                                  const std::string& source = "<stream>");

/// Reads "user friend [ignored...]" lines, keeping pairs whose endpoints are
/// both known users. Output holds both directions of every undirected edge,
/// without self-loops or duplicates, ordered by (user index, friend index).
/// `directed_relations`, when given, receives the number of distinct directed
/// non-self pairs with known endpoints seen before symmetrization.
std::vector<SocialRecord> load_social(const std::filesystem::path& path, const IdIndex& index,
                                      std::size_t* directed_relations = nullptr);
std::vector<SocialRecord> parse_social(std::istream& in, const IdIndex& index,
                                       const std::string& source = "<stream>",
                                       std::size_t* directed_relations = nullptr);

/// Undirected canonical edge set for the given symmetrized records.
EdgeSet social_edge_set(const std::vector<SocialRecord>& records, const IdIndex& index);

/// Global uniform shuffle, then partition. Validation and test sizes are
/// floor(N * r / sum(r)); train takes the remainder.
DatasetSplit split_interactions(const std::vector<InteractionRecord>& records,
                                const IdIndex& index, std::array<double, 3> ratios,
                                std::uint64_t seed);

struct Dataset {
  IdIndex index;
  DatasetSplit split;
  EdgeSet train_edges;   // bipartite
  EdgeSet social_edges;  // square, undirected
  SparseAdjacency interaction_adjacency;
  SparseAdjacency social_adjacency;  // with self-loops

  Index users() const { return index.users(); }
  Index items() const { return index.items(); }
  bool social_free() const { return social_edges.size() == 0; }

  // Per-user sorted item lists of a fold.
  std::vector<std::vector<Index>> items_by_user(Fold fold) const;
};

Dataset assemble_dataset(IdIndex index, DatasetSplit split, EdgeSet social_edges);

/// Split manifest: one "user<TAB>item<TAB>fold" line per interaction, in the
/// order of the retained records.
void write_split_manifest(const std::filesystem::path& path, const IdIndex& index,
                          const std::vector<InteractionRecord>& records,
                          const DatasetSplit& split);

struct PreparedData {
  IdIndex index;
  DatasetSplit split;
};

PreparedData read_split_manifest(const std::filesystem::path& path, std::uint64_t seed = 0);

void write_social_edges(const std::filesystem::path& path, const IdIndex& index,
                        const EdgeSet& edges);
EdgeSet read_social_edges(const std::filesystem::path& path, const IdIndex& index);

struct DatasetStats {
  Index users = 0;
  Index items = 0;
  std::size_t ratings = 0;
  std::size_t relations = 0;
  double density = 0.0;  // ratings / (users * items)
};

DatasetStats compute_stats(const IdIndex& index, std::size_t ratings, std::size_t relations);

}  // namespace dcrec
