#pragma once

#include <vector>

#include "dcrec/config.hpp"
#include "dcrec/model.hpp"
#include "dcrec/objectives.hpp"
#include "dcrec/sparse.hpp"

namespace dcrec {

/// Everything random about one optimization step, frozen so that the joint
/// objective is a deterministic function of the parameters. Adjacencies are
/// borrowed and must outlive any evaluation.
struct BatchContext {
  const SparseAdjacency* training_adjacency = nullptr;  // un-augmented A_I block form
  const SparseAdjacency* item_view1 = nullptr;
  const SparseAdjacency* item_view2 = nullptr;
  const SparseAdjacency* social_view1 = nullptr;
  const SparseAdjacency* social_view2 = nullptr;

  std::vector<BprTriplet> triplets;
  std::vector<Index> contrast_users;  // sorted, unique
  std::vector<Index> contrast_items;  // sorted, unique

  // False when there is no social graph: L_S and L_C are dropped.
  bool social_enabled = true;
};

struct ObjectiveSettings {
  LossWeights weights;
  double temperature = 0.2;
  BprReduction bpr_reduction = BprReduction::Sum;
  Index item_layers = 2;
  Activation projector_hidden = Activation::Relu;

  static ObjectiveSettings from(const TrainConfig& config);
};

struct BatchEvaluation {
  double loss = 0.0;
  LossParts parts;
};

/// Users and items of the triplets, sorted and unique (the in-batch
/// contrastive instances).
std::vector<Index> batch_users(const std::vector<BprTriplet>& triplets);
std::vector<Index> batch_items(const std::vector<BprTriplet>& triplets);

/// Joint objective of one batch. When `grads` is non-null it receives the
/// exact reverse-mode gradient of the returned loss; parameters outside the
/// active objective get zero.
///
/// The regularized subset is: collaborative embeddings of batch users and
/// items, plus (only while the social branch is active) social embeddings of
/// batch users, social-encoder weights and projector weights.
BatchEvaluation evaluate_batch(const ParameterSet& params, const BatchContext& context,
                               const ObjectiveSettings& settings, GradientSet* grads = nullptr);

/// (loss, exact gradient) pair.
std::pair<double, GradientSet> value_and_grad(const ParameterSet& params,
                                              const BatchContext& context,
                                              const ObjectiveSettings& settings);

}  // namespace dcrec
