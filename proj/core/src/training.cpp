#include "dcrec/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "dcrec/augment.hpp"
#include "dcrec/log.hpp"

namespace dcrec {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kViewStream = 2;
constexpr std::uint64_t kShuffleStream = 3;
constexpr std::uint64_t kNegativeStream = 4;

struct EpochViews {
  SparseAdjacency item1, item2, social1, social2;
};

EpochViews sample_views(const Dataset& dataset, const TrainConfig& config, std::size_t epoch,
                        std::size_t batch, bool want_items, bool want_social) {
  EpochViews views;
  auto seeded = [&](AugmentationSpec spec, std::uint64_t slot) {
    spec.seed = derive_seed(config.seed, kViewStream, (epoch << 20) ^ batch, slot);
    return spec;
  };
  if (want_items) {
    auto [v1, v2] = make_views(GraphDomain::Collaborative, dataset.train_edges,
                               seeded(config.item_view1, 1), seeded(config.item_view2, 2));
    views.item1 = std::move(v1.adjacency);
    views.item2 = std::move(v2.adjacency);
  }
  if (want_social) {
    auto [v1, v2] = make_views(GraphDomain::Social, dataset.social_edges,
                               seeded(config.social_view1, 3), seeded(config.social_view2, 4));
    views.social1 = std::move(v1.adjacency);
    views.social2 = std::move(v2.adjacency);
  }
  return views;
}

std::vector<Index> all_indices(Index count) {
  std::vector<Index> out(static_cast<std::size_t>(count));
  std::iota(out.begin(), out.end(), Index{0});
  return out;
}

void add_parts(LossParts& into, const LossParts& x) {
  into.main += x.main;
  into.collaborative += x.collaborative;
  into.social += x.social;
  into.cross_domain += x.cross_domain;
  into.regularizer += x.regularizer;
}

}  // namespace

AdamSettings AdamSettings::from(const TrainConfig& config) {
  return {config.learning_rate, config.beta1, config.beta2, config.adam_epsilon};
}

AdamState AdamState::zeros_like(const ParameterSet& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

void adam_step(ParameterSet& params, const GradientSet& grads, AdamState& state,
               const AdamSettings& settings) {
  std::vector<Matrix*> p, m, v;
  std::vector<const Matrix*> g;
  params.for_each([&](const std::string&, Matrix& x) { p.push_back(&x); });
  grads.for_each([&](const std::string&, const Matrix& x) { g.push_back(&x); });
  state.first_moment.for_each([&](const std::string&, Matrix& x) { m.push_back(&x); });
  state.second_moment.for_each([&](const std::string&, Matrix& x) { v.push_back(&x); });
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw ShapeError("adam_step: parameter/gradient/state structure mismatch");
  }
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (g[k]->rows() != p[k]->rows() || g[k]->cols() != p[k]->cols() ||
        m[k]->rows() != p[k]->rows() || m[k]->cols() != p[k]->cols()) {
      throw ShapeError("adam_step: shape mismatch in parameter group " + std::to_string(k));
    }
    if (!g[k]->allFinite()) throw NumericError("adam_step: non-finite gradient");
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(settings.beta1, t);
  const double correction2 = 1.0 - std::pow(settings.beta2, t);
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto grad = g[k]->array();
    auto mom1 = m[k]->array();
    auto mom2 = v[k]->array();
    mom1 = settings.beta1 * mom1 + (1.0 - settings.beta1) * grad;
    mom2 = settings.beta2 * mom2 + (1.0 - settings.beta2) * grad.square();
    p[k]->array() -= settings.learning_rate * (mom1 / correction1) /
                     ((mom2 / correction2).sqrt() + settings.epsilon);
  }
}

TrainerState initial_state(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  ModelShape shape = config.model;
  shape.users = dataset.users();
  shape.items = dataset.items();
  TrainerState state;
  state.params = init_parameters(shape, derive_seed(config.seed, kInitStream));
  state.adam = AdamState::zeros_like(state.params);
  return state;
}

EpochRecord train_epoch(const Dataset& dataset, TrainerState& state, const TrainConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t epoch = state.epoch + 1;
  const ObjectiveSettings settings = ObjectiveSettings::from(config);
  const AdamSettings adam = AdamSettings::from(config);

  const auto& train = dataset.split.train;
  if (train.empty()) throw ConfigError("training fold is empty");
  const Index n_items = dataset.items();

  const bool contrastive = config.weights.lambda1 > 0.0 || config.weights.lambda2 > 0.0;
  const bool social = contrastive && !dataset.social_free();

  const auto train_items = dataset.items_by_user(Fold::Train);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(derive_seed(config.seed, kShuffleStream, epoch));
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  std::mt19937_64 negative_rng(derive_seed(config.seed, kNegativeStream, epoch));
  std::uniform_int_distribution<Index> pick_item(0, n_items - 1);

  EpochViews views;
  if (contrastive && !config.views_per_batch) {
    views = sample_views(dataset, config, epoch, 0, true, social);
  }

  const std::vector<Index> every_user = all_indices(dataset.users());
  const std::vector<Index> every_item = all_indices(n_items);

  EpochRecord record;
  record.epoch = epoch;
  double total = 0.0;
  for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
    const std::size_t end = std::min(order.size(), begin + config.batch_size);
    const std::size_t batch_index = record.batches;

    BatchContext ctx;
    ctx.training_adjacency = &dataset.interaction_adjacency;
    ctx.social_enabled = !dataset.social_free();
    ctx.triplets.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
      const Edge e = train[order[k]];
      const auto& owned = train_items[e.a];
      if (owned.size() >= static_cast<std::size_t>(n_items)) continue;  // nothing to contrast with
      Index negative = pick_item(negative_rng);
      while (std::binary_search(owned.begin(), owned.end(), negative)) negative = pick_item(negative_rng);
      ctx.triplets.push_back({e.a, e.b, negative});
    }
    if (ctx.triplets.empty()) continue;

    if (contrastive) {
      if (config.views_per_batch) views = sample_views(dataset, config, epoch, batch_index + 1, true, social);
      ctx.item_view1 = &views.item1;
      ctx.item_view2 = &views.item2;
      if (social) {
        ctx.social_view1 = &views.social1;
        ctx.social_view2 = &views.social2;
      }
      if (config.negatives_scope == NegativeScope::Full) {
        ctx.contrast_users = every_user;
        ctx.contrast_items = every_item;
      } else {
        ctx.contrast_users = batch_users(ctx.triplets);
        ctx.contrast_items = batch_items(ctx.triplets);
      }
    }

    GradientSet grads;
    BatchEvaluation eval;
    try {
      eval = evaluate_batch(state.params, ctx, settings, &grads);
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(batch_index) + ": " + e.what());
    }
    if (!std::isfinite(eval.loss)) {
      throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(batch_index) + ": non-finite loss");
    }
    adam_step(state.params, grads, state.adam, adam);
    add_parts(record.parts, eval.parts);
    total += eval.loss;
    ++record.batches;
  }
  if (record.batches > 0) {
    const double n = static_cast<double>(record.batches);
    record.parts.main /= n;
    record.parts.collaborative /= n;
    record.parts.social /= n;
    record.parts.cross_domain /= n;
    record.parts.regularizer /= n;
    record.total = total / n;
  }
  state.epoch = epoch;
  record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

std::pair<Matrix, Matrix> representations(const Dataset& dataset, const ParameterSet& params,
                                          const TrainConfig& config) {
  return final_representations(dataset.interaction_adjacency, params, config.model.item_layers);
}

Validator validation_recall(const Dataset& dataset, const TrainConfig& config) {
  if (dataset.split.validation.empty()) return nullptr;
  return [&dataset, config](const ParameterSet& params, std::size_t) {
    const auto [users, items] = representations(dataset, params, config);
    EvaluateOptions options;
    options.k = config.eval_k;
    return evaluate(dataset, Fold::Validation, users, items, options).mean;
  };
}

FitResult fit(const Dataset& dataset, const TrainConfig& config, const Validator& validator,
              const EpochCallback& on_epoch) {
  config.validate();
  const Validator score = validator ? validator : validation_recall(dataset, config);
  if (!score) log::warn("no validation data: keeping the parameters of the last epoch");

  FitResult result;
  TrainerState state = initial_state(dataset, config);
  result.best = state;
  double best = -std::numeric_limits<double>::infinity();
  std::size_t stale = 0;

  for (std::size_t e = 0; e < config.epochs; ++e) {
    EpochRecord record = train_epoch(dataset, state, config);
    if (score) {
      record.validation = score(state.params, record.epoch);
      if (record.validation->recall > best) {
        best = record.validation->recall;
        result.best = state;
        result.log.best_epoch = record.epoch;
        result.log.best_validation_recall = best;
        stale = 0;
      } else {
        ++stale;
      }
    } else {
      result.best = state;
    }
    result.log.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
    if (score && stale > config.patience) break;
  }
  result.final_state = std::move(state);
  return result;
}

void TrainLog::write(std::ostream& out, bool with_timing) const {
  out << "epoch\tbatches\tl_main\tl_item\tl_social\tl_cross\tregularizer\ttotal\tval_ndcg\t"
         "val_recall\tval_precision"
      << (with_timing ? "\tseconds\n" : "\n");
  out << std::setprecision(17);
  for (const auto& r : epochs) {
    out << r.epoch << '\t' << r.batches << '\t' << r.parts.main << '\t' << r.parts.collaborative
        << '\t' << r.parts.social << '\t' << r.parts.cross_domain << '\t' << r.parts.regularizer
        << '\t' << r.total << '\t';
    if (r.validation) {
      out << r.validation->ndcg << '\t' << r.validation->recall << '\t' << r.validation->precision;
    } else {
      out << "-\t-\t-";
    }
    if (with_timing) out << '\t' << std::setprecision(4) << r.seconds << std::setprecision(17);
    out << '\n';
  }
}

}  // namespace dcrec
