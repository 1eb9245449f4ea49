#include "dcrec/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace dcrec {

bool all_finite(const Matrix& m) { return m.allFinite(); }

EdgeSet EdgeSet::social(Index users, std::vector<Edge> edges) {
  EdgeSet set{users, users, true, std::move(edges)};
  set.normalize();
  return set;
}

EdgeSet EdgeSet::bipartite(Index users, Index items, std::vector<Edge> edges) {
  EdgeSet set{users, items, false, std::move(edges)};
  set.normalize();
  return set;
}

void EdgeSet::normalize() {
  for (auto& e : edges) {
    if (e.a < 0 || e.a >= left_count || e.b < 0 || e.b >= right_count) {
      throw ShapeError("edge (" + std::to_string(e.a) + ", " + std::to_string(e.b) +
                       ") out of range");
    }
    if (square && e.a > e.b) std::swap(e.a, e.b);
  }
  if (square) {
    std::erase_if(edges, [](const Edge& e) { return e.a == e.b; });
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

bool EdgeSet::contains(Edge e) const {
  if (square && e.a > e.b) std::swap(e.a, e.b);
  return std::binary_search(edges.begin(), edges.end(), e);
}

SparseAdjacency::SparseAdjacency(Index rows, Index cols, std::vector<std::int64_t> row_offsets,
                                 std::vector<Index> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  validate();
}

SparseAdjacency SparseAdjacency::from_triplets(Index rows, Index cols,
                                               std::vector<std::pair<Edge, double>> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<std::int64_t> offsets(static_cast<std::size_t>(rows) + 1, 0);
  std::vector<Index> cols_out;
  std::vector<double> vals;
  cols_out.reserve(entries.size());
  vals.reserve(entries.size());
  for (const auto& [e, w] : entries) {
    if (e.a < 0 || e.a >= rows || e.b < 0 || e.b >= cols) {
      throw ShapeError("sparse entry out of range");
    }
    ++offsets[static_cast<std::size_t>(e.a) + 1];
    cols_out.push_back(e.b);
    vals.push_back(w);
  }
  for (std::size_t r = 0; r < static_cast<std::size_t>(rows); ++r) offsets[r + 1] += offsets[r];
  return SparseAdjacency(rows, cols, std::move(offsets), std::move(cols_out), std::move(vals));
}

void SparseAdjacency::validate() const {
  if (rows_ < 0 || cols_ < 0) throw ShapeError("negative sparse dimension");
  if (row_offsets_.size() != static_cast<std::size_t>(rows_) + 1 || row_offsets_.front() != 0 ||
      row_offsets_.back() != static_cast<std::int64_t>(col_indices_.size()) ||
      col_indices_.size() != values_.size()) {
    throw ShapeError("inconsistent CSR array lengths");
  }
  for (Index r = 0; r < rows_; ++r) {
    const auto begin = row_offsets_[r];
    const auto end = row_offsets_[r + 1];
    if (end < begin) throw ShapeError("row offsets not monotone at row " + std::to_string(r));
    for (auto k = begin; k < end; ++k) {
      const Index c = col_indices_[k];
      if (c < 0 || c >= cols_) throw ShapeError("column index out of bounds in row " + std::to_string(r));
      if (k > begin && col_indices_[k - 1] >= c) {
        throw ShapeError("columns unsorted or duplicated in row " + std::to_string(r));
      }
      if (!(values_[k] > 0.0) || !std::isfinite(values_[k])) {
        throw ShapeError("non-positive or non-finite weight in row " + std::to_string(r));
      }
    }
  }
}

double SparseAdjacency::at(Index row, Index col) const {
  const auto first = col_indices_.begin() + row_offsets_[row];
  const auto last = col_indices_.begin() + row_offsets_[row + 1];
  const auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

Matrix SparseAdjacency::multiply(const Matrix& x) const {
  if (x.rows() != cols_) {
    throw ShapeError("sparse multiply: expected " + std::to_string(cols_) + " rows, got " +
                     std::to_string(x.rows()));
  }
  // Terms of a row are summed in an order fixed by their operands (weight,
  // then the neighbor's input row), not by neighbor index. Equal keys give
  // equal products, so relabeling nodes permutes the output rows bit-exactly.
  const auto before = [&](std::int64_t p, std::int64_t q) {
    if (values_[p] != values_[q]) return values_[p] < values_[q];
    const auto xp = x.row(col_indices_[p]);
    const auto xq = x.row(col_indices_[q]);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (xp(c) != xq(c)) return xp(c) < xq(c);
    }
    return false;
  };
  Matrix out = Matrix::Zero(rows_, x.cols());
  std::vector<std::int64_t> order;
  for (Index r = 0; r < rows_; ++r) {
    order.resize(static_cast<std::size_t>(row_offsets_[r + 1] - row_offsets_[r]));
    std::iota(order.begin(), order.end(), row_offsets_[r]);
    std::sort(order.begin(), order.end(), before);
    auto dst = out.row(r);
    for (const auto k : order) dst.noalias() += values_[k] * x.row(col_indices_[k]);
  }
  return out;
}

Matrix SparseAdjacency::multiply_transpose(const Matrix& x) const {
  if (x.rows() != rows_) {
    throw ShapeError("sparse transpose multiply: expected " + std::to_string(rows_) +
                     " rows, got " + std::to_string(x.rows()));
  }
  Matrix out = Matrix::Zero(cols_, x.cols());
  for (Index r = 0; r < rows_; ++r) {
    const auto src = x.row(r);
    for (auto k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      out.row(col_indices_[k]).noalias() += values_[k] * src;
    }
  }
  return out;
}

Matrix SparseAdjacency::to_dense() const {
  Matrix dense = Matrix::Zero(rows_, cols_);
  for (Index r = 0; r < rows_; ++r) {
    for (auto k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      dense(r, col_indices_[k]) = values_[k];
    }
  }
  return dense;
}

bool SparseAdjacency::is_structurally_symmetric() const {
  if (rows_ != cols_) return false;
  for (Index r = 0; r < rows_; ++r) {
    for (auto k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      if (at(col_indices_[k], r) == 0.0) return false;
    }
  }
  return true;
}

namespace {

SparseAdjacency normalized_symmetric(Index nodes, const std::vector<Edge>& undirected,
                                     bool self_loops) {
  std::vector<double> degree(static_cast<std::size_t>(nodes), self_loops ? 1.0 : 0.0);
  for (const auto& e : undirected) {
    degree[e.a] += 1.0;
    degree[e.b] += 1.0;
  }
  std::vector<std::pair<Edge, double>> entries;
  entries.reserve(undirected.size() * 2 + (self_loops ? nodes : 0));
  for (const auto& e : undirected) {
    const double w = 1.0 / std::sqrt(degree[e.a] * degree[e.b]);
    entries.push_back({{e.a, e.b}, w});
    entries.push_back({{e.b, e.a}, w});
  }
  if (self_loops) {
    for (Index v = 0; v < nodes; ++v) entries.push_back({{v, v}, 1.0 / degree[v]});
  }
  return SparseAdjacency::from_triplets(nodes, nodes, std::move(entries));
}

}  // namespace

SparseAdjacency build_interaction_adjacency(const std::vector<Edge>& train_edges, Index users,
                                            Index items) {
  std::vector<Edge> lifted;
  lifted.reserve(train_edges.size());
  for (const auto& e : train_edges) {
    if (e.a < 0 || e.a >= users || e.b < 0 || e.b >= items) {
      throw ShapeError("interaction edge (" + std::to_string(e.a) + ", " + std::to_string(e.b) +
                       ") out of range");
    }
    lifted.push_back({e.a, users + e.b});
  }
  std::sort(lifted.begin(), lifted.end());
  lifted.erase(std::unique(lifted.begin(), lifted.end()), lifted.end());
  return normalized_symmetric(users + items, lifted, false);
}

SparseAdjacency build_interaction_adjacency(const EdgeSet& train_edges) {
  if (train_edges.square) throw ShapeError("interaction adjacency needs a bipartite edge set");
  return build_interaction_adjacency(train_edges.edges, train_edges.left_count,
                                     train_edges.right_count);
}

SparseAdjacency build_social_adjacency(const std::vector<Edge>& social_edges, Index users,
                                       bool add_self_loops) {
  EdgeSet set{users, users, true, social_edges};
  set.normalize();
  return normalized_symmetric(users, set.edges, add_self_loops);
}

SparseAdjacency build_social_adjacency(const EdgeSet& social_edges, bool add_self_loops) {
  if (!social_edges.square) throw ShapeError("social adjacency needs a square edge set");
  return normalized_symmetric(social_edges.left_count, social_edges.edges, add_self_loops);
}

}  // namespace dcrec
