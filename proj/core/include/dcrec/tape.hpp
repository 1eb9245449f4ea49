#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcrec/common.hpp"
#include "dcrec/objectives.hpp"
#include "dcrec/sparse.hpp"

namespace dcrec {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
  bool valid() const { return id != static_cast<std::size_t>(-1); }
};

/// Reverse-mode record of one forward evaluation.
///
/// Operations are the small fixed set in `ops`; each records its output value
/// and a closure that maps the output gradient onto its inputs. Gradients are
/// only propagated into nodes that (transitively) depend on a leaf. Every
/// recorded value is checked for finiteness and a NumericError names the
/// operation that first produced a non-finite entry.
///
/// Sparse adjacencies passed to `ops::propagate` are held by reference and
/// must outlive the tape.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  Var leaf(Matrix value, std::string name);
  Var constant(Matrix value, std::string name = "constant");
  Var record(Matrix value, std::string_view op, std::span<const Var> inputs, BackwardFn backward);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  double scalar(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Gradient of the last backward() root; zeros if the node was unreached.
  Matrix grad(Var v) const;

  /// Seeds d(root)/d(root) = 1 and runs every recorded closure in reverse.
  void backward(Var root);

  /// Adds `g` into the gradient slot of `v` (no-op for constants).
  void accumulate(Var v, const Matrix& g);

  std::size_t size() const { return nodes_.size(); }
  const std::string& op_name(Var v) const { return nodes_.at(v.id).op; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::string op;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

namespace ops {

/// A * x for a sparse adjacency.
Var propagate(Tape& tape, const SparseAdjacency& adjacency, Var x);
Var matmul(Tape& tape, Var a, Var b);
Var add(Tape& tape, Var a, Var b);
/// x + bias broadcast over rows; bias is 1 x d.
Var add_row(Tape& tape, Var x, Var bias);
Var relu(Tape& tape, Var x);
Var scale(Tape& tape, Var x, double factor);
/// Uniform mean of equally shaped inputs, summed left to right then scaled.
Var mean(Tape& tape, std::span<const Var> inputs);
Var concat_rows(Tape& tape, Var top, Var bottom);
Var slice_rows(Tape& tape, Var x, Index begin, Index count);
Var gather_rows(Tape& tape, Var x, std::vector<Index> rows);

/// Symmetric InfoNCE loss between two views (1 x 1 output).
Var contrastive(Tape& tape, Var first, Var second, double temperature);
/// sum_t softplus(-(<U_u,V_i> - <U_u,V_j>)) * factor (1 x 1 output).
Var bpr(Tape& tape, Var users, Var items, std::vector<BprTriplet> triplets, double factor);
/// Squared Frobenius norm (1 x 1 output).
Var squared_norm(Tape& tape, Var x);
/// Sum of squared entries over the listed rows (1 x 1 output).
Var squared_norm_rows(Tape& tape, Var x, std::vector<Index> rows);
/// sum_k weights[k] * terms[k] over 1 x 1 inputs; zero weights are skipped.
Var weighted_sum(Tape& tape, std::span<const Var> terms, std::span<const double> weights);

}  // namespace ops

}  // namespace dcrec
