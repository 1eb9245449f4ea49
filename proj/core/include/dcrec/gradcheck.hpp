#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dcrec/batch_objective.hpp"
#include "dcrec/model.hpp"

namespace dcrec {

using ScalarObjective = std::function<double(const ParameterSet&)>;

/// Central differences (f(x + eps) - f(x - eps)) / 2 eps, one coordinate at a
/// time, on a private copy of the parameters.
GradientSet finite_diff_grad(const ScalarObjective& objective, const ParameterSet& params,
                             double epsilon);

struct GradCheckInstance {
  Index users = 6;
  Index items = 8;
  Index dim = 4;
  Index item_layers = 2;
  Index social_layers = 2;
  Index projector_depth = 2;
  bool projector = true;
  LossWeights weights{0.01, 0.01, 1e-4};
  double temperature = 0.2;
  std::size_t interactions = 20;
  std::size_t social_edges = 8;  // 0 gives the social-free corner
  std::size_t triplets = 6;
  double epsilon = 1e-5;
  std::uint64_t seed = 7;
};

struct GroupError {
  std::string name;
  std::size_t coordinates = 0;  // entries compared (|g| above the floor)
  double max_relative_error = 0.0;
  double max_abs_analytic = 0.0;
};

struct GradCheckReport {
  std::vector<GroupError> groups;
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  double loss = 0.0;
  double seconds = 0.0;
  bool passed = false;

  std::string to_text() const;
};

struct GradCheckOptions {
  double tolerance = 1e-4;
  double magnitude_floor = 1e-6;
  // Test hook: applied to the analytic gradient before comparison.
  std::function<void(GradientSet&)> corrupt_analytic;
};

/// The randomized instance the check runs on: data, views and batch.
struct GradCheckProblem {
  ParameterSet params;
  SparseAdjacency training;
  SparseAdjacency item_view1, item_view2, social_view1, social_view2;
  BatchContext context;  // points into this object; do not copy-and-outlive
  ObjectiveSettings settings;

  GradCheckProblem() = default;
  GradCheckProblem(const GradCheckProblem&) = delete;
  GradCheckProblem& operator=(const GradCheckProblem&) = delete;
};

void build_gradcheck_problem(const GradCheckInstance& instance, GradCheckProblem& problem);

/// Compares `analytic` against `numeric` group by group.
GradCheckReport compare_gradients(const GradientSet& analytic, const GradientSet& numeric,
                                  const GradCheckOptions& options);

GradCheckReport check_gradients(const GradCheckInstance& instance,
                                const GradCheckOptions& options = {});

}  // namespace dcrec
