#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "dcrec/sparse.hpp"

namespace dcrec {

enum class AugmentationKind { Identity, EdgeDrop, NodeDrop, EdgeAdd };

enum class GraphDomain { Social, Collaborative };

struct AugmentationSpec {
  AugmentationKind kind = AugmentationKind::Identity;
  double rate = 0.0;
  std::uint64_t seed = 0;

  // "kind:rate", e.g. "EdgeDrop:0.1". Seed is not part of the text form.
  static AugmentationSpec parse(const std::string& text);
  std::string to_string() const;
  void validate(GraphDomain domain) const;

  friend bool operator==(const AugmentationSpec&, const AugmentationSpec&) = default;
};

struct AugmentedView {
  SparseAdjacency adjacency;
  EdgeSet edges;
  AugmentationSpec spec;
  int view_id = 1;
};

/// Keeps each undirected edge independently with probability 1 - rate.
EdgeSet edge_dropout(const EdgeSet& edges, double rate, std::uint64_t seed);

/// Removes every edge incident to floor(rate * N) uniformly chosen nodes, where
/// N counts users and items for bipartite sets.
EdgeSet node_dropout(const EdgeSet& edges, double rate, std::uint64_t seed);

/// Adds floor(rate * |E|) distinct absent undirected pairs (u != v), or as many
/// as exist when the graph is too dense (a warning is logged).
EdgeSet edge_add(const EdgeSet& edges, double rate, std::uint64_t seed);

EdgeSet apply_augmentation(const EdgeSet& edges, const AugmentationSpec& spec);

/// Re-normalizes an edge set the way its domain's encoder consumes it.
SparseAdjacency normalize_for_domain(GraphDomain domain, const EdgeSet& edges);

std::pair<AugmentedView, AugmentedView> make_views(GraphDomain domain, const EdgeSet& base,
                                                   const AugmentationSpec& first,
                                                   const AugmentationSpec& second);

}  // namespace dcrec
