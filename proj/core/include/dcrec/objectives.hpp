#pragma once

#include <span>
#include <string>

#include "dcrec/common.hpp"

namespace dcrec {

/// Lower bound on every row norm before dividing, so a zero row has cosine 0
/// against everything instead of producing NaN.
inline constexpr double kNormEpsilon = 1e-12;

/// Two views of the same w instances, row j of each describing instance j.
struct ContrastiveBatch {
  Matrix first;
  Matrix second;
  double temperature = 0.2;

  Index width() const { return static_cast<Index>(first.rows()); }
  void validate() const;
};

enum class ContrastDirection { FirstToSecond, SecondToFirst };

/// dot(z1, z2) / (|z1| |z2| tau), each norm floored at kNormEpsilon.
double cosine_affinity(const RowVector& z1, const RowVector& z2, double temperature);

/// -log of the softmax weight of the positive pair for anchor j. Negatives are
/// every other instance in both views.
double info_nce_term(Index j, const ContrastiveBatch& batch, ContrastDirection direction);

/// (1 / 2w) sum_j [term(j, 1->2) + term(j, 2->1)].
double symmetric_contrastive(const ContrastiveBatch& batch);
double symmetric_contrastive(const Matrix& first, const Matrix& second, double temperature);

/// Same value as symmetric_contrastive. When the gradient outputs are non-null
/// they receive scale * dL/dfirst and scale * dL/dsecond (overwritten).
double symmetric_contrastive_with_grad(const Matrix& first, const Matrix& second,
                                       double temperature, Matrix* grad_first,
                                       Matrix* grad_second, double scale = 1.0);

/// Sum of the four social-view x collaborative-view contrastive losses over
/// projected user representations.
double cross_domain_loss(const Matrix& social1, const Matrix& social2, const Matrix& collab1,
                         const Matrix& collab2, double temperature);

struct DomainLosses {
  double collaborative = 0.0;  // users and items, raw collaborative views
  double social = 0.0;         // projected social views
};

DomainLosses domain_specific_losses(const Matrix& users1, const Matrix& users2,
                                    const Matrix& items1, const Matrix& items2,
                                    const Matrix& social1, const Matrix& social2,
                                    double temperature);

struct BprTriplet {
  Index user = 0;
  Index positive = 0;
  Index negative = 0;

  friend bool operator==(const BprTriplet&, const BprTriplet&) = default;
};

/// log(1 + exp(x)) without overflow.
double softplus(double x);

/// Sum over triplets of -log sigmoid(<U_u, V_i> - <U_u, V_j>).
double bpr_loss(std::span<const BprTriplet> triplets, const Matrix& users, const Matrix& items);

/// bpr_loss(...) * scale; gradients (scaled) are accumulated into the outputs,
/// which must already have the shapes of users and items.
double bpr_loss_with_grad(std::span<const BprTriplet> triplets, const Matrix& users,
                          const Matrix& items, double scale, Matrix* grad_users,
                          Matrix* grad_items);

struct LossWeights {
  double lambda1 = 0.01;   // domain-specific contrastive
  double lambda2 = 0.001;  // cross-domain contrastive
  double lambda3 = 1e-4;   // L2 regularization

  void validate() const;
};

struct LossParts {
  double main = 0.0;
  double collaborative = 0.0;  // L_I
  double social = 0.0;         // L_S
  double cross_domain = 0.0;   // L_C
  double regularizer = 0.0;    // squared L2 norm of the regularized subset
};

/// main + lambda1 (L_I + L_S) + lambda2 L_C + lambda3 regularizer. Throws
/// NumericError naming the first non-finite component.
double joint_objective(const LossParts& parts, const LossWeights& weights);

}  // namespace dcrec
