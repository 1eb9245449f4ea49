#include "dcrec/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace dcrec {

namespace {

Vector row_norms(const Matrix& z) { return z.rowwise().norm(); }

double guarded(double norm) { return std::max(norm, kNormEpsilon); }

Matrix normalize_rows(const Matrix& z, const Vector& norms) {
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) out.row(r) = z.row(r) / guarded(norms(r));
  return out;
}

// Backpropagates through n = z / max(|z|, eps).
Matrix normalize_rows_backward(const Matrix& z, const Vector& norms, const Matrix& grad_n) {
  Matrix grad_z(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double norm = norms(r);
    const double denom = guarded(norm);
    grad_z.row(r) = grad_n.row(r) / denom;
    if (norm > kNormEpsilon) {
      const double radial = z.row(r).dot(grad_n.row(r));
      grad_z.row(r) -= z.row(r) * (radial / (norm * norm * norm));
    }
  }
  return grad_z;
}

void check_shapes(const Matrix& first, const Matrix& second, double temperature) {
  if (first.rows() != second.rows() || first.cols() != second.cols()) {
    throw ShapeError("contrastive views differ in shape: " + std::to_string(first.rows()) + "x" +
                     std::to_string(first.cols()) + " vs " + std::to_string(second.rows()) + "x" +
                     std::to_string(second.cols()));
  }
  if (first.rows() < 2) throw ShapeError("contrastive batch needs at least two instances");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("temperature must be positive");
  }
}

}  // namespace

void ContrastiveBatch::validate() const {
  check_shapes(first, second, temperature);
  if (!first.allFinite() || !second.allFinite()) {
    throw NumericError("contrastive batch holds non-finite values");
  }
}

double cosine_affinity(const RowVector& z1, const RowVector& z2, double temperature) {
  if (z1.size() != z2.size()) throw ShapeError("cosine_affinity: length mismatch");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  return z1.dot(z2) / (guarded(z1.norm()) * guarded(z2.norm()) * temperature);
}

double info_nce_term(Index j, const ContrastiveBatch& batch, ContrastDirection direction) {
  batch.validate();
  const Matrix& anchor_view =
      direction == ContrastDirection::FirstToSecond ? batch.first : batch.second;
  const Matrix& other_view =
      direction == ContrastDirection::FirstToSecond ? batch.second : batch.first;
  const double tau = batch.temperature;
  const Index w = batch.width();
  if (j < 0 || j >= w) throw ShapeError("anchor index out of range");

  const RowVector anchor = anchor_view.row(j);
  const double positive = cosine_affinity(anchor, other_view.row(j), tau);
  std::vector<double> logits{positive};
  for (Index k = 0; k < w; ++k) {
    if (k == j) continue;
    logits.push_back(cosine_affinity(anchor, other_view.row(k), tau));
    logits.push_back(cosine_affinity(anchor, anchor_view.row(k), tau));
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double x : logits) sum += std::exp(x - peak);
  return peak + std::log(sum) - positive;
}

double symmetric_contrastive(const ContrastiveBatch& batch) {
  batch.validate();
  return symmetric_contrastive_with_grad(batch.first, batch.second, batch.temperature, nullptr,
                                         nullptr);
}

double symmetric_contrastive(const Matrix& first, const Matrix& second, double temperature) {
  return symmetric_contrastive_with_grad(first, second, temperature, nullptr, nullptr);
}

namespace {

using MatrixMap = Eigen::Map<Matrix, Eigen::AlignedMax>;

// Reused w x w buffers. Fresh multi-megabyte allocations page-fault on every
// call, which dominated training time. Storage is aligned like Eigen's own so
// vectorized reductions do not peel a heap-dependent prefix, which would make
// the summation order, and so the low bits, depend on the allocation address.
struct ContrastScratch {
  std::vector<double, Eigen::aligned_allocator<double>> storage[4];
  MatrixMap take(int slot, Eigen::Index w) {
    auto& s = storage[slot];
    if (s.size() < static_cast<std::size_t>(w * w)) s.resize(static_cast<std::size_t>(w * w));
    return MatrixMap(s.data(), w, w);
  }
};

ContrastScratch& scratch() {
  thread_local ContrastScratch s;
  return s;
}

// One InfoNCE direction over all anchors. On entry `cross` holds the anchor
// view against the other view (positives on the diagonal) and `intra` the
// anchor view against itself. Both are overwritten with softmax weights.
// Returns the per-anchor terms.
Vector softmax_direction(MatrixMap& cross, MatrixMap& intra) {
  const Eigen::Index w = cross.rows();
  const Vector positive = cross.diagonal();
  intra.diagonal().setConstant(-std::numeric_limits<double>::infinity());
  const Vector peak = cross.rowwise().maxCoeff().cwiseMax(intra.rowwise().maxCoeff());
  Vector sum(w);
  for (Eigen::Index j = 0; j < w; ++j) {
    cross.row(j) = (cross.row(j).array() - peak(j)).exp().matrix();
    intra.row(j) = (intra.row(j).array() - peak(j)).exp().matrix();
    intra(j, j) = 0.0;
    sum(j) = cross.row(j).sum() + intra.row(j).sum();
    const double inv = 1.0 / sum(j);
    cross.row(j) *= inv;
    intra.row(j) *= inv;
  }
  return peak + sum.array().log().matrix() - positive;
}

// a <- a + a^T in place.
void symmetrize_sum(MatrixMap& a) {
  const Eigen::Index w = a.rows();
  for (Eigen::Index i = 0; i < w; ++i) {
    a(i, i) *= 2.0;
    for (Eigen::Index k = i + 1; k < w; ++k) {
      const double s = a(i, k) + a(k, i);
      a(i, k) = s;
      a(k, i) = s;
    }
  }
}

double contrastive_ordered(const Matrix& first, const Matrix& second, double temperature,
                           Matrix* grad_first, Matrix* grad_second, double scale) {
  const Eigen::Index w = first.rows();
  const double inv_tau = 1.0 / temperature;
  const Vector norms1 = row_norms(first);
  const Vector norms2 = row_norms(second);
  const Matrix n1 = normalize_rows(first, norms1);
  const Matrix n2 = normalize_rows(second, norms2);

  // p_fwd(j, k) = psi(z1_j, z2_k); p_bwd is its transpose. intra_v = psi(zv_j, zv_k).
  ContrastScratch& buffers = scratch();
  MatrixMap p_fwd = buffers.take(0, w);
  MatrixMap p_bwd = buffers.take(1, w);
  MatrixMap intra1 = buffers.take(2, w);
  MatrixMap intra2 = buffers.take(3, w);
  p_fwd.noalias() = n1 * n2.transpose();
  p_fwd *= inv_tau;
  p_bwd = p_fwd.transpose();
  intra1.noalias() = n1 * n1.transpose();
  intra1 *= inv_tau;
  intra2.noalias() = n2 * n2.transpose();
  intra2 *= inv_tau;

  const Vector forward_terms = softmax_direction(p_fwd, intra1);
  const Vector backward_terms = softmax_direction(p_bwd, intra2);
  const double coeff = 1.0 / (2.0 * static_cast<double>(w));
  const double loss = (forward_terms + backward_terms).sum() * coeff;

  if (grad_first != nullptr || grad_second != nullptr) {
    // d_cross = p_fwd + p_bwd^T - 2I, d_intra_v = p_v + p_v^T, all times coeff.
    p_fwd += p_bwd.transpose();
    p_fwd.diagonal().array() -= 2.0;
    const double g = scale * inv_tau * coeff;
    if (grad_first != nullptr) {
      symmetrize_sum(intra1);
      Matrix d_n1(w, first.cols());
      d_n1.noalias() = p_fwd * n2;
      d_n1.noalias() += intra1 * n1;
      d_n1 *= g;
      *grad_first = normalize_rows_backward(first, norms1, d_n1);
    }
    if (grad_second != nullptr) {
      symmetrize_sum(intra2);
      Matrix d_n2(w, second.cols());
      d_n2.noalias() = p_fwd.transpose() * n1;
      d_n2.noalias() += intra2 * n2;
      d_n2 *= g;
      *grad_second = normalize_rows_backward(second, norms2, d_n2);
    }
  }
  return loss;
}

}  // namespace

double symmetric_contrastive_with_grad(const Matrix& first, const Matrix& second,
                                       double temperature, Matrix* grad_first,
                                       Matrix* grad_second, double scale) {
  check_shapes(first, second, temperature);
  // The loss is symmetric in its views. Evaluating in a canonical operand
  // order makes L(Z1, Z2) and L(Z2, Z1) bit-identical.
  const bool swapped = std::lexicographical_compare(second.data(), second.data() + second.size(),
                                                    first.data(), first.data() + first.size());
  if (swapped) return contrastive_ordered(second, first, temperature, grad_second, grad_first, scale);
  return contrastive_ordered(first, second, temperature, grad_first, grad_second, scale);
}

double cross_domain_loss(const Matrix& social1, const Matrix& social2, const Matrix& collab1,
                         const Matrix& collab2, double temperature) {
  return symmetric_contrastive(social1, collab1, temperature) +
         symmetric_contrastive(social1, collab2, temperature) +
         symmetric_contrastive(social2, collab1, temperature) +
         symmetric_contrastive(social2, collab2, temperature);
}

DomainLosses domain_specific_losses(const Matrix& users1, const Matrix& users2,
                                    const Matrix& items1, const Matrix& items2,
                                    const Matrix& social1, const Matrix& social2,
                                    double temperature) {
  DomainLosses out;
  out.collaborative = symmetric_contrastive(users1, users2, temperature) +
                      symmetric_contrastive(items1, items2, temperature);
  out.social = symmetric_contrastive(social1, social2, temperature);
  return out;
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

namespace {

// sigmoid(-x), stable for either sign.
double sigmoid_neg(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

double bpr_margin(const BprTriplet& t, const Matrix& users, const Matrix& items) {
  if (t.user < 0 || t.user >= users.rows() || t.positive < 0 || t.positive >= items.rows() ||
      t.negative < 0 || t.negative >= items.rows()) {
    throw ShapeError("BPR triplet index out of range");
  }
  return users.row(t.user).dot(items.row(t.positive)) - users.row(t.user).dot(items.row(t.negative));
}

}  // namespace

double bpr_loss(std::span<const BprTriplet> triplets, const Matrix& users, const Matrix& items) {
  if (users.cols() != items.cols()) throw ShapeError("BPR: user/item dimension mismatch");
  double total = 0.0;
  for (const auto& t : triplets) total += softplus(-bpr_margin(t, users, items));
  return total;
}

double bpr_loss_with_grad(std::span<const BprTriplet> triplets, const Matrix& users,
                          const Matrix& items, double scale, Matrix* grad_users,
                          Matrix* grad_items) {
  if (users.cols() != items.cols()) throw ShapeError("BPR: user/item dimension mismatch");
  double total = 0.0;
  for (const auto& t : triplets) {
    const double margin = bpr_margin(t, users, items);
    total += softplus(-margin);
    const double d_margin = -sigmoid_neg(margin) * scale;
    if (grad_users != nullptr) {
      grad_users->row(t.user) += d_margin * (items.row(t.positive) - items.row(t.negative));
    }
    if (grad_items != nullptr) {
      grad_items->row(t.positive) += d_margin * users.row(t.user);
      grad_items->row(t.negative) -= d_margin * users.row(t.user);
    }
  }
  return total * scale;
}

void LossWeights::validate() const {
  for (double v : {lambda1, lambda2, lambda3}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError("loss weights must be finite and non-negative");
    }
  }
}

double joint_objective(const LossParts& parts, const LossWeights& weights) {
  const std::pair<const char*, double> components[] = {
      {"main (BPR)", parts.main},
      {"collaborative contrastive", parts.collaborative},
      {"social contrastive", parts.social},
      {"cross-domain contrastive", parts.cross_domain},
      {"regularizer", parts.regularizer},
  };
  for (const auto& [name, value] : components) {
    if (!std::isfinite(value)) throw NumericError(std::string("non-finite loss component: ") + name);
  }
  double total = parts.main;
  if (weights.lambda1 != 0.0) total += weights.lambda1 * (parts.collaborative + parts.social);
  if (weights.lambda2 != 0.0) total += weights.lambda2 * parts.cross_domain;
  if (weights.lambda3 != 0.0) total += weights.lambda3 * parts.regularizer;
  return total;
}

}  // namespace dcrec
