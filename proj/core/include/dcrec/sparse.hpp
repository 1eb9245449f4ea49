#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dcrec/common.hpp"

namespace dcrec {

struct Edge {
  Index a = 0;
  Index b = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// A raw (unweighted) edge set.
///
/// Square edge sets (the social domain) store each undirected edge once as
/// (a, b) with a < b. Bipartite edge sets store (user, item) pairs. In both
/// cases edges are sorted and unique; use `normalize()` after bulk edits.
struct EdgeSet {
  Index left_count = 0;
  Index right_count = 0;
  bool square = false;
  std::vector<Edge> edges;

  static EdgeSet social(Index users, std::vector<Edge> edges);
  static EdgeSet bipartite(Index users, Index items, std::vector<Edge> edges);

  std::size_t size() const { return edges.size(); }
  Index node_count() const { return square ? left_count : left_count + right_count; }

  // Canonicalizes orientation for square sets, sorts, dedups and drops self-loops.
  void normalize();
  bool contains(Edge e) const;
};

/// Compressed sparse row matrix with positive, finite weights.
class SparseAdjacency {
 public:
  SparseAdjacency() = default;
  SparseAdjacency(Index rows, Index cols, std::vector<std::int64_t> row_offsets,
                  std::vector<Index> col_indices, std::vector<double> values);

  // Entries may arrive in any order; duplicates are rejected.
  static SparseAdjacency from_triplets(Index rows, Index cols,
                                       std::vector<std::pair<Edge, double>> entries);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  std::size_t nnz() const { return col_indices_.size(); }

  const std::vector<std::int64_t>& row_offsets() const { return row_offsets_; }
  const std::vector<Index>& col_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }

  // Returns 0 when the entry is absent.
  double at(Index row, Index col) const;

  /// out = A * x.
  Matrix multiply(const Matrix& x) const;
  /// out = A^T * x.
  Matrix multiply_transpose(const Matrix& x) const;

  Matrix to_dense() const;
  bool is_structurally_symmetric() const;

  // Throws ShapeError describing the first broken invariant.
  void validate() const;

  friend bool operator==(const SparseAdjacency&, const SparseAdjacency&) = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<std::int64_t> row_offsets_{0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

/// Symmetric-normalized bipartite graph in (m+n)x(m+n) block form. User u is
/// node u, item i is node m+i; edge weight 1/sqrt(deg(u) deg(i)).
SparseAdjacency build_interaction_adjacency(const EdgeSet& train_edges);
SparseAdjacency build_interaction_adjacency(const std::vector<Edge>& train_edges, Index users,
                                            Index items);

/// D^-1/2 (A + I) D^-1/2 with self-loops, D^-1/2 A D^-1/2 without. Isolated
/// nodes have no entries in the latter form.
SparseAdjacency build_social_adjacency(const EdgeSet& social_edges, bool add_self_loops);
SparseAdjacency build_social_adjacency(const std::vector<Edge>& social_edges, Index users,
                                       bool add_self_loops);

}  // namespace dcrec
