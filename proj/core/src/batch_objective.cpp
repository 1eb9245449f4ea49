#include "dcrec/batch_objective.hpp"

#include <algorithm>

namespace dcrec {

ObjectiveSettings ObjectiveSettings::from(const TrainConfig& config) {
  ObjectiveSettings s;
  s.weights = config.weights;
  s.temperature = config.temperature;
  s.bpr_reduction = config.bpr_reduction;
  s.item_layers = config.model.item_layers;
  return s;
}

std::vector<Index> batch_users(const std::vector<BprTriplet>& triplets) {
  std::vector<Index> out;
  out.reserve(triplets.size());
  for (const auto& t : triplets) out.push_back(t.user);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Index> batch_items(const std::vector<BprTriplet>& triplets) {
  std::vector<Index> out;
  out.reserve(triplets.size());
  for (const auto& t : triplets) out.push_back(t.positive);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

std::vector<Index> regularized_items(const std::vector<BprTriplet>& triplets) {
  std::vector<Index> out;
  out.reserve(triplets.size() * 2);
  for (const auto& t : triplets) {
    out.push_back(t.positive);
    out.push_back(t.negative);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

BatchEvaluation evaluate_batch(const ParameterSet& params, const BatchContext& ctx,
                               const ObjectiveSettings& settings, GradientSet* grads) {
  settings.weights.validate();
  if (ctx.training_adjacency == nullptr) throw ConfigError("batch context has no training adjacency");
  if (ctx.triplets.empty()) throw ConfigError("batch has no BPR triplets");

  const double lambda1 = settings.weights.lambda1;
  const double lambda2 = settings.weights.lambda2;
  const bool collab_cl = lambda1 > 0.0;
  const bool social_cl = ctx.social_enabled && lambda1 > 0.0;
  const bool cross_cl = ctx.social_enabled && lambda2 > 0.0;
  const bool users_contrastable = ctx.contrast_users.size() >= 2;
  const bool items_contrastable = ctx.contrast_items.size() >= 2;
  const bool need_item_views = (collab_cl || cross_cl) && (users_contrastable || items_contrastable);
  const bool need_social = (social_cl || cross_cl) && users_contrastable;

  Tape tape;
  const ParameterVars vars = ParameterVars::register_on(tape, params);

  // Main task on the un-augmented graph.
  const auto [users_final, items_final] = light_gcn(tape, *ctx.training_adjacency,
                                                    vars.user_collab, vars.item_collab,
                                                    settings.item_layers);
  const double bpr_factor = settings.bpr_reduction == BprReduction::Mean
                                ? 1.0 / static_cast<double>(ctx.triplets.size())
                                : 1.0;
  const Var main = ops::bpr(tape, users_final, items_final, ctx.triplets, bpr_factor);

  Var collab_loss, social_loss, cross_loss;

  Var users_view1, users_view2;  // raw collaborative user reps of the contrast batch
  if (need_item_views) {
    if (ctx.item_view1 == nullptr || ctx.item_view2 == nullptr) {
      throw ConfigError("batch context is missing collaborative views");
    }
    const auto [u1, v1] = light_gcn(tape, *ctx.item_view1, vars.user_collab, vars.item_collab,
                                    settings.item_layers);
    const auto [u2, v2] = light_gcn(tape, *ctx.item_view2, vars.user_collab, vars.item_collab,
                                    settings.item_layers);
    if (users_contrastable) {
      users_view1 = ops::gather_rows(tape, u1, ctx.contrast_users);
      users_view2 = ops::gather_rows(tape, u2, ctx.contrast_users);
    }
    if (collab_cl) {
      std::vector<Var> terms;
      if (users_contrastable) {
        terms.push_back(ops::contrastive(tape, users_view1, users_view2, settings.temperature));
      }
      if (items_contrastable) {
        const Var i1 = ops::gather_rows(tape, v1, ctx.contrast_items);
        const Var i2 = ops::gather_rows(tape, v2, ctx.contrast_items);
        terms.push_back(ops::contrastive(tape, i1, i2, settings.temperature));
      }
      const std::vector<double> ones(terms.size(), 1.0);
      collab_loss = ops::weighted_sum(tape, terms, ones);
    }
  }

  if (need_social) {
    if (ctx.social_view1 == nullptr || ctx.social_view2 == nullptr) {
      throw ConfigError("batch context is missing social views");
    }
    ProjectorParams projector_info = params.social_projector;
    projector_info.hidden_activation = settings.projector_hidden;

    auto social_projected = [&](const SparseAdjacency& adjacency) {
      const Var encoded = social_gcn(tape, adjacency, vars.user_social, vars.social_weights);
      const Var rows = ops::gather_rows(tape, encoded, ctx.contrast_users);
      return project(tape, rows, vars.social_proj_weights, vars.social_proj_biases, projector_info);
    };
    const Var s1 = social_projected(*ctx.social_view1);
    const Var s2 = social_projected(*ctx.social_view2);

    if (social_cl) social_loss = ops::contrastive(tape, s1, s2, settings.temperature);
    if (cross_cl) {
      const Var c1 = project(tape, users_view1, vars.collab_proj_weights, vars.collab_proj_biases,
                             projector_info);
      const Var c2 = project(tape, users_view2, vars.collab_proj_weights, vars.collab_proj_biases,
                             projector_info);
      const Var pairs[] = {
          ops::contrastive(tape, s1, c1, settings.temperature),
          ops::contrastive(tape, s1, c2, settings.temperature),
          ops::contrastive(tape, s2, c1, settings.temperature),
          ops::contrastive(tape, s2, c2, settings.temperature),
      };
      const double ones[] = {1.0, 1.0, 1.0, 1.0};
      cross_loss = ops::weighted_sum(tape, pairs, ones);
    }
  }

  // Regularizer over the touched/active subset.
  std::vector<Var> reg_terms{
      ops::squared_norm_rows(tape, vars.user_collab, batch_users(ctx.triplets)),
      ops::squared_norm_rows(tape, vars.item_collab, regularized_items(ctx.triplets)),
  };
  if (need_social) {
    reg_terms.push_back(ops::squared_norm_rows(tape, vars.user_social, ctx.contrast_users));
    for (Var w : vars.social_weights) reg_terms.push_back(ops::squared_norm(tape, w));
    for (Var w : vars.social_proj_weights) reg_terms.push_back(ops::squared_norm(tape, w));
    if (cross_cl) {
      for (Var w : vars.collab_proj_weights) reg_terms.push_back(ops::squared_norm(tape, w));
    }
  }
  const std::vector<double> reg_ones(reg_terms.size(), 1.0);
  const Var regularizer = ops::weighted_sum(tape, reg_terms, reg_ones);

  BatchEvaluation result;
  result.parts.main = tape.scalar(main);
  result.parts.collaborative = collab_loss.valid() ? tape.scalar(collab_loss) : 0.0;
  result.parts.social = social_loss.valid() ? tape.scalar(social_loss) : 0.0;
  result.parts.cross_domain = cross_loss.valid() ? tape.scalar(cross_loss) : 0.0;
  result.parts.regularizer = tape.scalar(regularizer);

  std::vector<Var> terms{main};
  std::vector<double> weights{1.0};
  if (collab_loss.valid()) { terms.push_back(collab_loss); weights.push_back(lambda1); }
  if (social_loss.valid()) { terms.push_back(social_loss); weights.push_back(lambda1); }
  if (cross_loss.valid()) { terms.push_back(cross_loss); weights.push_back(lambda2); }
  terms.push_back(regularizer);
  weights.push_back(settings.weights.lambda3);
  const Var total = ops::weighted_sum(tape, terms, weights);

  // Names the offending component if anything went non-finite.
  joint_objective(result.parts, settings.weights);
  result.loss = tape.scalar(total);

  if (grads != nullptr) {
    tape.backward(total);
    *grads = vars.collect(tape, params);
  }
  return result;
}

std::pair<double, GradientSet> value_and_grad(const ParameterSet& params,
                                              const BatchContext& context,
                                              const ObjectiveSettings& settings) {
  GradientSet grads;
  const auto eval = evaluate_batch(params, context, settings, &grads);
  return {eval.loss, std::move(grads)};
}

}  // namespace dcrec
