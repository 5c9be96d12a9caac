#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "wbis/config.hpp"
#include "wbis/error.hpp"
#include "wbis/oracle.hpp"

using namespace wbis;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Naive, DeterministicExample) {
  Rng rng(1, 0);
  for (unsigned depth : {0u, 1u, 5u}) EXPECT_EQ(naive_w_sample(constant_pair_model(), depth, rng), std::log(0.5));
}

TEST(Naive, RecursionBudget) {
  Rng rng(2, 0);
  EXPECT_EQ(code_of([&] { naive_w_sample(ModelSpec(model::BranchingMM1{}), 40, rng); }), ErrorCode::RecursionBudget);
}

TEST(Naive, NonBranchingTail) {
  const auto s = naive_tail(ModelSpec(model::NonBranchingExp{}), 1.0, 20000, 60, 3, 2);
  EXPECT_NEAR(s.mean, 0.5 * std::exp(-1.0), 4 * s.std_err);
}

TEST(Naive, SamplesIndependentOfParallelism) {
  const ModelSpec m(model::BranchingMM1{});
  EXPECT_EQ(naive_w_samples(m, 4, 500, 9, 1), naive_w_samples(m, 4, 500, 9, 4));
}

TEST(TailFraction, Binomial) {
  const auto s = tail_fraction({1.0, 2.0, 3.0, 4.0}, 2.5);
  EXPECT_DOUBLE_EQ(s.mean, 0.5);
  EXPECT_DOUBLE_EQ(s.std_err, std::sqrt(0.25 / 4));
  EXPECT_THROW(tail_fraction({}, 1.0), Error);
}

TEST(PopDyn, NonBranchingTail) {
  const WPool pool = popdyn_pool(ModelSpec(model::NonBranchingExp{}), 20000, 60, 4);
  EXPECT_EQ(pool.iterations, 60u);
  EXPECT_EQ(pool.samples.size(), 20000u);
  const auto s = pool_tail(pool, 1.0);
  EXPECT_NEAR(s.mean, 0.5 * std::exp(-1.0), 4 * s.std_err);
}

TEST(PopDyn, Reproducible) {
  const ModelSpec m(model::BranchingMM1{});
  EXPECT_EQ(popdyn_pool(m, 1000, 5, 11).samples, popdyn_pool(m, 1000, 5, 11).samples);
}

TEST(PopDyn, ContinuesFromInitialPool) {
  const WPool pool = popdyn_pool(constant_pair_model(), 100, 1, 1, WPool{std::vector<double>(100, 5.0), 3});
  for (double w : pool.samples) EXPECT_DOUBLE_EQ(w, std::log(0.5) + 5.0);
  EXPECT_EQ(pool.iterations, 4u);
}

TEST(PopDyn, PoolFileRoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "wbis_pool_roundtrip.txt").string();
  WPool pool{{kNegInf, 0.1, -3.25e-7, 1.0 / 3.0}, 7};
  write_pool(path, pool);
  const WPool back = read_pool(path);
  EXPECT_EQ(back.samples, pool.samples);
  std::filesystem::remove(path);
  EXPECT_THROW(read_pool(path), Error);
}

TEST(H, NonBranchingEquivalent) {
  const ModelSpec m(model::NonBranchingExp{});
  const TiltContext c = solve_alpha(m);
  const WPool pool = popdyn_pool(m, 50000, 60, 5);
  const auto h = estimate_H_equiv(m, c, pool, 200000, 6);
  EXPECT_NEAR(h.value, 0.5, 4 * h.std_err + 0.02);
}

TEST(H, NonBranchingSpine) {
  const ModelSpec m(model::NonBranchingExp{});
  const TiltContext c = solve_alpha(m);
  const auto h = estimate_H_spine(m, c, 15, 40000, kDefaultNodeBudget, 7, 2);
  EXPECT_NEAR(h.value, 0.5, 4 * h.std_err + 0.005);
}

TEST(H, SpineBudget) {
  const ModelSpec m(model::BranchingMM1{});
  EXPECT_EQ(code_of([&] { estimate_H_spine(m, solve_alpha(m), 30, 10, kDefaultNodeBudget, 1); }),
            ErrorCode::BudgetExceeded);
}

TEST(ClBound, NonBranching) {
  const ModelSpec m(model::NonBranchingExp{});
  ISOptions o;
  o.variant = EstimatorVariant::IndependentQ;
  o.n = 5000;
  const TiltContext c = solve_alpha(m);
  const auto rows = cl_bound_check(m, c, {1.0, 3.0}, o);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.pass);
    EXPECT_DOUBLE_EQ(r.bound, std::exp(-c.alpha * r.t));
  }
}

TEST(ClBound, NeedsDegenerateQ) {
  const ModelSpec m(model::SimplexGamma{});
  EXPECT_EQ(code_of([&] { cl_bound_check(m, solve_alpha(m), {1.0}, ISOptions{}); }), ErrorCode::NotDegenerateQ);
}
