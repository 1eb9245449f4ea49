#include "dcrec/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "dcrec/augment.hpp"

namespace dcrec {

GradientSet finite_diff_grad(const ScalarObjective& objective, const ParameterSet& params,
                             double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("finite difference step must be positive");
  ParameterSet probe = params;
  GradientSet out = params.zeros_like();
  std::vector<Matrix*> probe_slots;
  std::vector<Matrix*> out_slots;
  probe.for_each([&](const std::string&, Matrix& m) { probe_slots.push_back(&m); });
  out.for_each([&](const std::string&, Matrix& m) { out_slots.push_back(&m); });
  for (std::size_t s = 0; s < probe_slots.size(); ++s) {
    Matrix& m = *probe_slots[s];
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      const double saved = m.data()[k];
      m.data()[k] = saved + epsilon;
      const double up = objective(probe);
      m.data()[k] = saved - epsilon;
      const double down = objective(probe);
      m.data()[k] = saved;
      out_slots[s]->data()[k] = (up - down) / (2.0 * epsilon);
    }
  }
  return out;
}

void build_gradcheck_problem(const GradCheckInstance& inst, GradCheckProblem& problem) {
  std::mt19937_64 rng(inst.seed);
  std::uniform_int_distribution<Index> pick_user(0, inst.users - 1);
  std::uniform_int_distribution<Index> pick_item(0, inst.items - 1);

  std::set<Edge> interactions;
  // Every user gets at least one item so each row of A_I participates.
  for (Index u = 0; u < inst.users; ++u) interactions.insert({u, pick_item(rng)});
  while (interactions.size() < inst.interactions) interactions.insert({pick_user(rng), pick_item(rng)});
  const EdgeSet train = EdgeSet::bipartite(inst.users, inst.items, {interactions.begin(), interactions.end()});

  std::set<Edge> social;
  const std::size_t max_pairs = static_cast<std::size_t>(inst.users) * (inst.users - 1) / 2;
  while (social.size() < std::min(inst.social_edges, max_pairs)) {
    Index a = pick_user(rng), b = pick_user(rng);
    if (a == b) continue;
    social.insert({std::min(a, b), std::max(a, b)});
  }
  const EdgeSet social_set = EdgeSet::social(inst.users, {social.begin(), social.end()});

  problem.training = build_interaction_adjacency(train);
  const auto item_views = make_views(GraphDomain::Collaborative, train,
                                     {AugmentationKind::EdgeDrop, 0.2, inst.seed + 1},
                                     {AugmentationKind::NodeDrop, 0.1, inst.seed + 2});
  problem.item_view1 = item_views.first.adjacency;
  problem.item_view2 = item_views.second.adjacency;
  const auto social_views = make_views(GraphDomain::Social, social_set,
                                       {AugmentationKind::EdgeDrop, 0.2, inst.seed + 3},
                                       {AugmentationKind::EdgeAdd, 0.5, inst.seed + 4});
  problem.social_view1 = social_views.first.adjacency;
  problem.social_view2 = social_views.second.adjacency;

  ModelShape shape;
  shape.users = inst.users;
  shape.items = inst.items;
  shape.dim = inst.dim;
  shape.item_layers = inst.item_layers;
  shape.social_layers = inst.social_layers;
  shape.projector_depth = inst.projector_depth;
  shape.projector = inst.projector;
  problem.params = init_parameters(shape, inst.seed + 5);
  // Non-zero biases so their gradients are exercised away from the origin.
  std::uniform_real_distribution<double> bias(-0.02, 0.02);
  for (ProjectorParams* p : {&problem.params.social_projector, &problem.params.collab_projector}) {
    for (auto& b : p->biases) {
      for (Eigen::Index k = 0; k < b.size(); ++k) b.data()[k] = bias(rng);
    }
  }

  std::vector<BprTriplet> triplets;
  const auto& edges = train.edges;
  std::uniform_int_distribution<std::size_t> pick_edge(0, edges.size() - 1);
  while (triplets.size() < inst.triplets) {
    const Edge e = edges[pick_edge(rng)];
    Index neg = pick_item(rng);
    if (train.contains({e.a, neg})) continue;
    triplets.push_back({e.a, e.b, neg});
  }

  problem.context = BatchContext{};
  problem.context.training_adjacency = &problem.training;
  problem.context.item_view1 = &problem.item_view1;
  problem.context.item_view2 = &problem.item_view2;
  problem.context.social_view1 = &problem.social_view1;
  problem.context.social_view2 = &problem.social_view2;
  problem.context.triplets = triplets;
  problem.context.social_enabled = social_set.size() > 0;
  // Full-set negatives: every user and item is a contrastive instance.
  for (Index u = 0; u < inst.users; ++u) problem.context.contrast_users.push_back(u);
  for (Index i = 0; i < inst.items; ++i) problem.context.contrast_items.push_back(i);

  problem.settings = ObjectiveSettings{};
  problem.settings.weights = inst.weights;
  problem.settings.temperature = inst.temperature;
  problem.settings.item_layers = inst.item_layers;
}

GradCheckReport compare_gradients(const GradientSet& analytic, const GradientSet& numeric,
                                  const GradCheckOptions& options) {
  GradCheckReport report;
  report.tolerance = options.tolerance;
  std::vector<std::pair<std::string, const Matrix*>> a_slots, n_slots;
  analytic.for_each([&](const std::string& name, const Matrix& m) { a_slots.push_back({name, &m}); });
  numeric.for_each([&](const std::string& name, const Matrix& m) { n_slots.push_back({name, &m}); });
  if (a_slots.size() != n_slots.size()) throw ShapeError("gradient sets differ in structure");
  for (std::size_t s = 0; s < a_slots.size(); ++s) {
    const Matrix& a = *a_slots[s].second;
    const Matrix& n = *n_slots[s].second;
    if (a.rows() != n.rows() || a.cols() != n.cols()) throw ShapeError("gradient shapes differ");
    GroupError g;
    g.name = a_slots[s].first;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      const double av = a.data()[k];
      const double nv = n.data()[k];
      g.max_abs_analytic = std::max(g.max_abs_analytic, std::abs(av));
      const double scale = std::max(std::abs(av), std::abs(nv));
      if (scale <= options.magnitude_floor) continue;
      ++g.coordinates;
      g.max_relative_error = std::max(g.max_relative_error, std::abs(av - nv) / scale);
    }
    report.max_relative_error = std::max(report.max_relative_error, g.max_relative_error);
    report.groups.push_back(std::move(g));
  }
  report.passed = report.max_relative_error < options.tolerance;
  return report;
}

GradCheckReport check_gradients(const GradCheckInstance& instance, const GradCheckOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  GradCheckProblem problem;
  build_gradcheck_problem(instance, problem);

  auto [loss, analytic] = value_and_grad(problem.params, problem.context, problem.settings);
  if (options.corrupt_analytic) options.corrupt_analytic(analytic);
  const GradientSet numeric = finite_diff_grad(
      [&](const ParameterSet& p) { return evaluate_batch(p, problem.context, problem.settings).loss; },
      problem.params, instance.epsilon);

  GradCheckReport report = compare_gradients(analytic, numeric, options);
  report.loss = loss;
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string GradCheckReport::to_text() const {
  std::ostringstream out;
  out << std::left << std::setw(24) << "group" << std::right << std::setw(8) << "coords"
      << std::setw(16) << "max_rel_err" << std::setw(14) << "max_|g|" << '\n';
  for (const auto& g : groups) {
    out << std::left << std::setw(24) << g.name << std::right << std::setw(8) << g.coordinates
        << std::setw(16) << std::scientific << std::setprecision(3) << g.max_relative_error
        << std::setw(14) << g.max_abs_analytic << std::defaultfloat << '\n';
  }
  out << "loss " << std::setprecision(12) << loss << '\n';
  out << "max relative error " << std::scientific << std::setprecision(3) << max_relative_error
      << " (tolerance " << tolerance << ")" << std::defaultfloat << '\n';
  out << "elapsed " << std::fixed << std::setprecision(3) << seconds << " s" << std::defaultfloat << '\n';
  out << (passed ? "PASS" : "FAIL") << '\n';
  return out.str();
}

}  // namespace dcrec
