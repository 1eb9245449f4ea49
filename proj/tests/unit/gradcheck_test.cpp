#include <gtest/gtest.h>

#include <cmath>

#include "dcrec/gradcheck.hpp"

namespace dcrec {
namespace {

ParameterSet small_params(std::uint64_t seed) {
  ModelShape shape;
  shape.users = 3;
  shape.items = 4;
  shape.dim = 2;
  shape.social_layers = 1;
  shape.projector_depth = 1;
  return init_parameters(shape, seed);
}

TEST(FiniteDiff, LinearObjectiveRecoversCoefficients) {
  const ParameterSet p = small_params(1);
  ParameterSet coeffs = small_params(2);
  const auto objective = [&coeffs](const ParameterSet& x) {
    double total = 0.0;
    std::vector<const Matrix*> c;
    coeffs.for_each([&](const std::string&, const Matrix& m) { c.push_back(&m); });
    std::size_t k = 0;
    x.for_each([&](const std::string&, const Matrix& m) { total += (m.array() * c[k++]->array()).sum(); });
    return total;
  };
  const GradientSet g = finite_diff_grad(objective, p, 1e-5);
  std::vector<const Matrix*> gs, cs;
  g.for_each([&](const std::string&, const Matrix& m) { gs.push_back(&m); });
  coeffs.for_each([&](const std::string&, const Matrix& m) { cs.push_back(&m); });
  for (std::size_t k = 0; k < gs.size(); ++k) EXPECT_LE((*gs[k] - *cs[k]).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(FiniteDiff, QuadraticAtThree) {
  ParameterSet p = small_params(1);
  p.user_collab(0, 0) = 3.0;
  const auto objective = [](const ParameterSet& x) { return 0.5 * x.user_collab(0, 0) * x.user_collab(0, 0); };
  const GradientSet g = finite_diff_grad(objective, p, 1e-4);
  EXPECT_NEAR(g.user_collab(0, 0), 3.0, 1e-8);
  EXPECT_EQ(g.item_collab.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(finite_diff_grad(objective, p, 0.0), ConfigError);
}

TEST(CheckGradients, DefaultInstancePasses) {
  const GradCheckReport r = check_gradients(GradCheckInstance{});
  EXPECT_TRUE(r.passed) << r.to_text();
  EXPECT_LT(r.max_relative_error, 1e-4);
  EXPECT_LT(r.seconds, 10.0);
  for (const auto& g : r.groups) EXPECT_GT(g.coordinates, 0u) << g.name;
}

TEST(CheckGradients, SeveralSeedsAndShapesPass) {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    GradCheckInstance inst;
    inst.seed = seed;
    inst.projector_depth = 1 + static_cast<Index>(seed % 3);
    inst.item_layers = static_cast<Index>(seed % 3);
    inst.social_layers = 1 + static_cast<Index>(seed % 2);
    const GradCheckReport r = check_gradients(inst);
    EXPECT_TRUE(r.passed) << "seed " << seed << "\n" << r.to_text();
  }
}

TEST(CheckGradients, WithoutProjectorPasses) {
  GradCheckInstance inst;
  inst.projector = false;
  EXPECT_TRUE(check_gradients(inst).passed);
}

TEST(CheckGradients, CorruptedGradientFails) {
  GradCheckOptions options;
  options.corrupt_analytic = [](GradientSet& g) { g.social_encoder.layer_weights[0](0, 0) *= 1.01; };
  const GradCheckReport r = check_gradients(GradCheckInstance{}, options);
  EXPECT_FALSE(r.passed);
  EXPECT_NE(r.to_text().find("FAIL"), std::string::npos);
}

TEST(CheckGradients, SocialFreeInstanceHasZeroSocialGradients) {
  GradCheckInstance inst;
  inst.social_edges = 0;
  EXPECT_TRUE(check_gradients(inst).passed);

  GradCheckProblem problem;
  build_gradcheck_problem(inst, problem);
  EXPECT_FALSE(problem.context.social_enabled);
  const auto [loss, g] = value_and_grad(problem.params, problem.context, problem.settings);
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_TRUE(g.user_social.isZero(0.0));
  for (const auto& w : g.social_encoder.layer_weights) EXPECT_TRUE(w.isZero(0.0));
  for (const auto& w : g.social_projector.weights) EXPECT_TRUE(w.isZero(0.0));
  for (const auto& w : g.collab_projector.weights) EXPECT_TRUE(w.isZero(0.0));
  EXPECT_FALSE(g.user_collab.isZero(0.0));
}

TEST(ValueAndGrad, GradientOfSumIsSumOfGradients) {
  GradCheckInstance inst;
  inst.weights = {0.0, 0.0, 0.0};
  GradCheckProblem problem;
  build_gradcheck_problem(inst, problem);
  auto grads_for = [&](double l1, double l2) {
    ObjectiveSettings s = problem.settings;
    s.weights = {l1, l2, 0.0};
    return value_and_grad(problem.params, problem.context, s);
  };
  const auto [base, g0] = grads_for(0.0, 0.0);
  const auto [li, gi] = grads_for(0.3, 0.0);
  const auto [lc, gc] = grads_for(0.0, 0.2);
  const auto [lj, gj] = grads_for(0.3, 0.2);
  EXPECT_NEAR(lj + base, li + lc, 1e-12);
  std::vector<const Matrix*> s0, si, sc, sj;
  g0.for_each([&](const std::string&, const Matrix& m) { s0.push_back(&m); });
  gi.for_each([&](const std::string&, const Matrix& m) { si.push_back(&m); });
  gc.for_each([&](const std::string&, const Matrix& m) { sc.push_back(&m); });
  gj.for_each([&](const std::string&, const Matrix& m) { sj.push_back(&m); });
  for (std::size_t k = 0; k < s0.size(); ++k) {
    EXPECT_LE((*sj[k] + *s0[k] - *si[k] - *sc[k]).cwiseAbs().maxCoeff(), 1e-12) << "group " << k;
  }
}

TEST(ValueAndGrad, IsDeterministic) {
  GradCheckProblem problem;
  build_gradcheck_problem(GradCheckInstance{}, problem);
  const auto [l1, g1] = value_and_grad(problem.params, problem.context, problem.settings);
  const auto [l2, g2] = value_and_grad(problem.params, problem.context, problem.settings);
  EXPECT_EQ(l1, l2);
  EXPECT_EQ(checksum(g1), checksum(g2));
  EXPECT_EQ(evaluate_batch(problem.params, problem.context, problem.settings).loss, l1);
}

TEST(ValueAndGrad, ZeroContrastWeightsIsolateSocialBranch) {
  GradCheckInstance inst;
  inst.weights = {0.0, 0.0, 1e-4};
  GradCheckProblem problem;
  build_gradcheck_problem(inst, problem);
  const auto [loss, g] = value_and_grad(problem.params, problem.context, problem.settings);
  EXPECT_TRUE(g.user_social.isZero(0.0));
  for (const auto& w : g.social_encoder.layer_weights) EXPECT_TRUE(w.isZero(0.0));
  for (const auto& b : g.social_projector.biases) EXPECT_TRUE(b.isZero(0.0));
  const BatchEvaluation e = evaluate_batch(problem.params, problem.context, problem.settings);
  EXPECT_EQ(e.parts.collaborative, 0.0);
  EXPECT_EQ(e.parts.cross_domain, 0.0);
  EXPECT_EQ(e.loss, e.parts.main + 1e-4 * e.parts.regularizer);
}

}  // namespace
}  // namespace dcrec
