#include "dcrec/tape.hpp"

#include <string>

namespace dcrec {

namespace {

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Matrix scalar_matrix(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}

// Every output row runs the same accumulation, independent of its position.
// Blocked GEMM kernels treat leftover rows differently, which would break
// bit-exact equivariance under node relabeling.
Matrix rowwise_product(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (Eigen::Index k = 0; k < a.cols(); ++k) dst.noalias() += a(i, k) * b.row(k);
  }
  return out;
}

}  // namespace

Var Tape::leaf(Matrix value, std::string name) {
  if (!value.allFinite()) throw NumericError("non-finite parameter " + name);
  nodes_.push_back({std::move(value), Matrix(), std::move(name), nullptr, true});
  return {nodes_.size() - 1};
}

Var Tape::constant(Matrix value, std::string name) {
  if (!value.allFinite()) throw NumericError("non-finite constant " + name);
  nodes_.push_back({std::move(value), Matrix(), std::move(name), nullptr, false});
  return {nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::string_view op, std::span<const Var> inputs,
                 BackwardFn backward) {
  if (!value.allFinite()) {
    throw NumericError("non-finite value produced by " + std::string(op));
  }
  bool needs = false;
  for (Var in : inputs) needs = needs || nodes_.at(in.id).requires_grad;
  nodes_.push_back({std::move(value), Matrix(), std::string(op),
                    needs ? std::move(backward) : BackwardFn{}, needs});
  return {nodes_.size() - 1};
}

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.rows() != 1 || m.cols() != 1) throw ShapeError("expected a scalar, got " + shape_of(m));
  return m(0, 0);
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_.at(v.id);
  if (!n.requires_grad) return;
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) {
    throw ShapeError("gradient shape " + shape_of(g) + " does not match " + n.op + " value " +
                     shape_of(n.value));
  }
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var root) {
  const Matrix& root_value = value(root);
  if (root_value.size() != 1) throw ShapeError("backward needs a scalar root");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[root.id].requires_grad) return;
  nodes_[root.id].grad = scalar_matrix(1.0);
  for (std::size_t k = root.id + 1; k-- > 0;) {
    Node& n = nodes_[k];
    if (!n.backward || n.grad.size() == 0) continue;
    if (!n.grad.allFinite()) throw NumericError("non-finite gradient flowing into " + n.op);
    // The closure may append to other nodes' grads but never to this one.
    const Matrix out_grad = n.grad;
    n.backward(*this, out_grad);
  }
  for (const auto& n : nodes_) {
    if (n.grad.size() != 0 && !n.grad.allFinite()) {
      throw NumericError("non-finite gradient at " + n.op);
    }
  }
}

namespace ops {

Var propagate(Tape& tape, const SparseAdjacency& adjacency, Var x) {
  const Var inputs[] = {x};
  return tape.record(adjacency.multiply(tape.value(x)), "propagate", inputs,
                     [&adjacency, x](Tape& t, const Matrix& g) {
                       t.accumulate(x, adjacency.multiply_transpose(g));
                     });
}

Var matmul(Tape& tape, Var a, Var b) {
  const Matrix& av = tape.value(a);
  const Matrix& bv = tape.value(b);
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: " + shape_of(av) + " * " + shape_of(bv));
  }
  const Var inputs[] = {a, b};
  Matrix out = rowwise_product(av, bv);
  return tape.record(std::move(out), "matmul", inputs, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.requires_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

Var add(Tape& tape, Var a, Var b) {
  const Matrix& av = tape.value(a);
  const Matrix& bv = tape.value(b);
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
    throw ShapeError("add: " + shape_of(av) + " + " + shape_of(bv));
  }
  const Var inputs[] = {a, b};
  return tape.record(av + bv, "add", inputs, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var add_row(Tape& tape, Var x, Var bias) {
  const Matrix& xv = tape.value(x);
  const Matrix& bv = tape.value(bias);
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw ShapeError("add_row: bias " + shape_of(bv) + " for input " + shape_of(xv));
  }
  Matrix out = xv;
  out.rowwise() += bv.row(0);
  const Var inputs[] = {x, bias};
  return tape.record(std::move(out), "add_row", inputs, [x, bias](Tape& t, const Matrix& g) {
    t.accumulate(x, g);
    if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
  });
}

Var relu(Tape& tape, Var x) {
  const Var inputs[] = {x};
  return tape.record(tape.value(x).cwiseMax(0.0), "relu", inputs, [x](Tape& t, const Matrix& g) {
    const Matrix mask = (t.value(x).array() > 0.0).cast<double>().matrix();
    t.accumulate(x, g.cwiseProduct(mask));
  });
}

Var scale(Tape& tape, Var x, double factor) {
  const Var inputs[] = {x};
  return tape.record(tape.value(x) * factor, "scale", inputs,
                     [x, factor](Tape& t, const Matrix& g) { t.accumulate(x, g * factor); });
}

Var mean(Tape& tape, std::span<const Var> inputs) {
  if (inputs.empty()) throw ShapeError("mean of no inputs");
  Matrix sum = tape.value(inputs[0]);
  for (std::size_t k = 1; k < inputs.size(); ++k) {
    const Matrix& v = tape.value(inputs[k]);
    if (v.rows() != sum.rows() || v.cols() != sum.cols()) throw ShapeError("mean: shape mismatch");
    sum += v;
  }
  const double factor = 1.0 / static_cast<double>(inputs.size());
  std::vector<Var> captured(inputs.begin(), inputs.end());
  return tape.record(sum * factor, "mean", inputs,
                     [captured, factor](Tape& t, const Matrix& g) {
                       const Matrix share = g * factor;
                       for (Var v : captured) t.accumulate(v, share);
                     });
}

Var concat_rows(Tape& tape, Var top, Var bottom) {
  const Matrix& tv = tape.value(top);
  const Matrix& bv = tape.value(bottom);
  if (tv.cols() != bv.cols()) throw ShapeError("concat_rows: column mismatch");
  Matrix out(tv.rows() + bv.rows(), tv.cols());
  out.topRows(tv.rows()) = tv;
  out.bottomRows(bv.rows()) = bv;
  const auto split = tv.rows();
  const Var inputs[] = {top, bottom};
  return tape.record(std::move(out), "concat_rows", inputs,
                     [top, bottom, split](Tape& t, const Matrix& g) {
                       if (t.requires_grad(top)) t.accumulate(top, g.topRows(split));
                       if (t.requires_grad(bottom)) t.accumulate(bottom, g.bottomRows(g.rows() - split));
                     });
}

Var slice_rows(Tape& tape, Var x, Index begin, Index count) {
  const Matrix& xv = tape.value(x);
  if (begin < 0 || count < 0 || begin + count > xv.rows()) throw ShapeError("slice_rows out of range");
  const Var inputs[] = {x};
  return tape.record(xv.middleRows(begin, count), "slice_rows", inputs,
                     [x, begin, count](Tape& t, const Matrix& g) {
                       const Matrix& src = t.value(x);
                       Matrix full = Matrix::Zero(src.rows(), src.cols());
                       full.middleRows(begin, count) = g;
                       t.accumulate(x, full);
                     });
}

Var gather_rows(Tape& tape, Var x, std::vector<Index> rows) {
  const Matrix& xv = tape.value(x);
  Matrix out(static_cast<Eigen::Index>(rows.size()), xv.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= xv.rows()) throw ShapeError("gather_rows index out of range");
    out.row(static_cast<Eigen::Index>(k)) = xv.row(rows[k]);
  }
  const Var inputs[] = {x};
  return tape.record(std::move(out), "gather_rows", inputs,
                     [x, rows = std::move(rows)](Tape& t, const Matrix& g) {
                       const Matrix& src = t.value(x);
                       Matrix full = Matrix::Zero(src.rows(), src.cols());
                       for (std::size_t k = 0; k < rows.size(); ++k) {
                         full.row(rows[k]) += g.row(static_cast<Eigen::Index>(k));
                       }
                       t.accumulate(x, full);
                     });
}

Var contrastive(Tape& tape, Var first, Var second, double temperature) {
  const double loss =
      symmetric_contrastive(tape.value(first), tape.value(second), temperature);
  const Var inputs[] = {first, second};
  return tape.record(scalar_matrix(loss), "contrastive", inputs,
                     [first, second, temperature](Tape& t, const Matrix& g) {
                       Matrix g1, g2;
                       symmetric_contrastive_with_grad(t.value(first), t.value(second),
                                                       temperature,
                                                       t.requires_grad(first) ? &g1 : nullptr,
                                                       t.requires_grad(second) ? &g2 : nullptr,
                                                       g(0, 0));
                       if (t.requires_grad(first)) t.accumulate(first, g1);
                       if (t.requires_grad(second)) t.accumulate(second, g2);
                     });
}

Var bpr(Tape& tape, Var users, Var items, std::vector<BprTriplet> triplets, double factor) {
  const double loss = bpr_loss(triplets, tape.value(users), tape.value(items)) * factor;
  const Var inputs[] = {users, items};
  return tape.record(scalar_matrix(loss), "bpr", inputs,
                     [users, items, factor, triplets = std::move(triplets)](Tape& t,
                                                                            const Matrix& g) {
                       const Matrix& uv = t.value(users);
                       const Matrix& iv = t.value(items);
                       Matrix gu = Matrix::Zero(uv.rows(), uv.cols());
                       Matrix gi = Matrix::Zero(iv.rows(), iv.cols());
                       bpr_loss_with_grad(triplets, uv, iv, factor * g(0, 0), &gu, &gi);
                       t.accumulate(users, gu);
                       t.accumulate(items, gi);
                     });
}

Var squared_norm(Tape& tape, Var x) {
  const Var inputs[] = {x};
  return tape.record(scalar_matrix(tape.value(x).squaredNorm()), "squared_norm", inputs,
                     [x](Tape& t, const Matrix& g) { t.accumulate(x, 2.0 * g(0, 0) * t.value(x)); });
}

Var squared_norm_rows(Tape& tape, Var x, std::vector<Index> rows) {
  const Matrix& xv = tape.value(x);
  double total = 0.0;
  for (Index r : rows) {
    if (r < 0 || r >= xv.rows()) throw ShapeError("squared_norm_rows index out of range");
    total += xv.row(r).squaredNorm();
  }
  const Var inputs[] = {x};
  return tape.record(scalar_matrix(total), "squared_norm_rows", inputs,
                     [x, rows = std::move(rows)](Tape& t, const Matrix& g) {
                       const Matrix& src = t.value(x);
                       Matrix full = Matrix::Zero(src.rows(), src.cols());
                       for (Index r : rows) full.row(r) += 2.0 * g(0, 0) * src.row(r);
                       t.accumulate(x, full);
                     });
}

Var weighted_sum(Tape& tape, std::span<const Var> terms, std::span<const double> weights) {
  if (terms.size() != weights.size()) throw ShapeError("weighted_sum: arity mismatch");
  double total = 0.0;
  std::vector<Var> kept;
  std::vector<double> kept_w;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (weights[k] == 0.0) continue;
    total += weights[k] * tape.scalar(terms[k]);
    kept.push_back(terms[k]);
    kept_w.push_back(weights[k]);
  }
  return tape.record(scalar_matrix(total), "weighted_sum", kept,
                     [kept, kept_w](Tape& t, const Matrix& g) {
                       for (std::size_t k = 0; k < kept.size(); ++k) {
                         t.accumulate(kept[k], scalar_matrix(kept_w[k] * g(0, 0)));
                       }
                     });
}

}  // namespace ops

}  // namespace dcrec
