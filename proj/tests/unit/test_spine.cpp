#include <gtest/gtest.h>

#include <cmath>

#include "stats_support.hpp"
#include "wbis/error.hpp"
#include "wbis/spine_sampler.hpp"

using namespace wbis;

TEST(CheckVariant, RejectsIndependentQForDependentModel) {
  EXPECT_THROW(check_variant(ModelSpec(model::SimplexGamma{}), EstimatorVariant::IndependentQ), Error);
  EXPECT_NO_THROW(check_variant(ModelSpec(model::SimplexGamma{}), EstimatorVariant::General));
  EXPECT_NO_THROW(check_variant(ModelSpec(model::BranchingMM1{}), EstimatorVariant::IndependentQ));
  ISOptions o;
  o.variant = EstimatorVariant::IndependentQ;
  o.n = 10;
  const ModelSpec m(model::SimplexGamma{});
  try {
    is_estimate(m, solve_alpha(m), 1.0, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(RunSingle, NegativeLevelStopsAtRoot) {
  const ModelSpec m(model::BranchingMM1{});
  const TiltContext c = solve_alpha(m);
  Rng rng(1, 0);
  for (int i = 0; i < 100; ++i) {
    const ISRun r = run_single(m, c, -0.5, EstimatorVariant::IndependentQ, kDefaultNodeBudget, rng);
    EXPECT_EQ(r.z_value, 1.0);
    EXPECT_TRUE(r.terminal_index.is_root());
    EXPECT_TRUE(r.hit_on_spine);
    EXPECT_EQ(r.nodes_expanded, 1u);
  }
}

TEST(RunSingle, NegativeLevelGeneralVariantAveragesToOne) {
  const ModelSpec m(model::NonBranchingExp{});
  const TiltContext c = solve_alpha(m);
  ISOptions o;
  o.n = 50000;
  o.parallelism = 2;
  const auto s = is_estimate(m, c, -1.0, o);
  EXPECT_NEAR(s.mean, 1.0, 4 * s.std_err);
}

TEST(RunSingle, NonBranchingAlwaysHitsOnSpine) {
  const ModelSpec m(model::NonBranchingExp{});
  const TiltContext c = solve_alpha(m);
  Rng rng(2, 0);
  for (int i = 0; i < 200; ++i) {
    const ISRun r = run_single(m, c, 2.0, EstimatorVariant::IndependentQ, kDefaultNodeBudget, rng);
    ASSERT_TRUE(r.hit_on_spine);
    EXPECT_EQ(r.tau, r.terminal_index.generation());
    EXPECT_GT(r.v_tau, 2.0);
    EXPECT_DOUBLE_EQ(r.z_value, std::exp(-c.alpha * r.v_tau));
    for (auto j : r.terminal_index.path()) EXPECT_EQ(j, 1u);
  }
}

TEST(RunSingle, BudgetIsFlagged) {
  const ModelSpec m(model::BranchingMM1{});
  const TiltContext c = solve_alpha(m);
  Rng rng(3, 0);
  const ISRun r = run_single(m, c, 20.0, EstimatorVariant::IndependentQ, 3, rng);
  EXPECT_TRUE(r.budget_exceeded);
  EXPECT_EQ(r.nodes_expanded, 3u);
  EXPECT_EQ(r.z_value, 0.0);
  EXPECT_THROW(run_single(m, c, 1.0, EstimatorVariant::IndependentQ, 0, rng), Error);
}

TEST(RunSingle, Reproducible) {
  const ModelSpec m(model::SimplexGamma{});
  const TiltContext c = solve_alpha(m);
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng a(7, s), b(7, s);
    const ISRun x = run_single(m, c, 2.0, EstimatorVariant::General, kDefaultNodeBudget, a);
    const ISRun y = run_single(m, c, 2.0, EstimatorVariant::General, kDefaultNodeBudget, b);
    EXPECT_EQ(x.z_value, y.z_value);
    EXPECT_EQ(x.terminal_index, y.terminal_index);
  }
}

TEST(RunSingle, EstimatorBoundedByWeight) {
  const ModelSpec m(model::BranchingMM1{});
  const TiltContext c = solve_alpha(m);
  Rng rng(4, 0);
  for (int i = 0; i < 500; ++i) {
    const ISRun r = run_single(m, c, 1.0, EstimatorVariant::IndependentQ, kDefaultNodeBudget, rng);
    if (r.hit_on_spine) EXPECT_LE(r.z_value, std::exp(-c.alpha * r.v_tau) + 1e-300);
    EXPECT_GE(r.z_value, 0.0);
  }
}

TEST(IsEstimate, NonBranchingMatchesClosedForm) {
  const ModelSpec m(model::NonBranchingExp{});
  const TiltContext c = solve_alpha(m);
  ISOptions o;
  o.variant = EstimatorVariant::IndependentQ;
  o.n = 20000;
  for (double t : {1.0, 3.0}) {
    const auto s = is_estimate(m, c, t, o);
    EXPECT_NEAR(s.mean, 0.5 * std::exp(-t), 4 * s.std_err) << t;
    EXPECT_LT(s.rel_err, 0.01);
  }
}

TEST(IsEstimate, GeneralAndIndependentAgree) {
  const ModelSpec m(model::NonBranchingExp{});
  const TiltContext c = solve_alpha(m);
  ISOptions a, b;
  a.variant = EstimatorVariant::IndependentQ;
  b.variant = EstimatorVariant::General;
  a.n = b.n = 10000;
  b.master_seed = 2;
  const auto x = is_estimate(m, c, 1.0, a);
  const auto y = is_estimate(m, c, 1.0, b);
  EXPECT_NEAR(x.mean, y.mean, 4 * (x.std_err + y.std_err));
}

TEST(IsEstimate, IndependentOfParallelism) {
  const ModelSpec m(model::BranchingMM1{});
  const TiltContext c = solve_alpha(m);
  ISOptions o;
  o.variant = EstimatorVariant::IndependentQ;
  o.n = 2000;
  o.parallelism = 1;
  const auto x = is_replications(m, c, 1.0, o);
  o.parallelism = 4;
  const auto y = is_replications(m, c, 1.0, o);
  ASSERT_EQ(x.runs.size(), y.runs.size());
  for (std::size_t i = 0; i < x.runs.size(); ++i) {
    EXPECT_EQ(x.runs[i].value, y.runs[i].value);
    EXPECT_EQ(x.runs[i].terminal_generation, y.runs[i].terminal_generation);
  }
}

TEST(IsEstimate, ZeroReplicationsRejected) {
  const ModelSpec m(model::NonBranchingExp{});
  ISOptions o;
  o.n = 0;
  EXPECT_THROW(is_estimate(m, solve_alpha(m), 1.0, o), Error);
}

TEST(GenerationProfile, GrowsWithLevel) {
  const ModelSpec m(model::BranchingMM1{});
  const TiltContext c = solve_alpha(m);
  ISOptions o;
  o.variant = EstimatorVariant::IndependentQ;
  o.n = 2000;
  const auto rows = terminal_generation_profile(m, c, {0.5, 1.5, 2.5}, o);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GT(rows[i].mean_terminal_generation, rows[i - 1].mean_terminal_generation);
    EXPECT_GE(rows[i].mean_tau, rows[i].mean_terminal_generation - 1.0);
  }
  EXPECT_NEAR(rows[2].t_over_mu, 2.5 / c.mu, 1e-12);
}
