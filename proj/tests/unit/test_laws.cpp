#include <gtest/gtest.h>

#include <cmath>

#include "stats_support.hpp"
#include "wbis/error.hpp"
#include "wbis/laws.hpp"

using namespace wbis;

namespace {

std::vector<OffspringLaw> all_offspring_laws() {
  return {nlaw::Constant{3},          nlaw::Uniform{1, 3}, nlaw::TruncatedPoisson{2.0},
          nlaw::ShiftedPoisson{1.5}, nlaw::Geometric{0.5}, nlaw::Table{{0.2, 0.0, 0.5, 0.3}}};
}

}  // namespace

TEST(OffspringLaw, PmfSumsToOneAndMeanMatches) {
  for (const auto& law : all_offspring_laws()) {
    double total = 0.0, mean = 0.0, sb_total = 0.0;
    for (int n = 1; n <= law.support_upper(); ++n) {
      total += law.pmf(n);
      mean += n * law.pmf(n);
      sb_total += law.size_biased_pmf(n);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(mean, law.mean(), 1e-10);
    EXPECT_NEAR(sb_total, 1.0, 1e-12);
  }
}

TEST(OffspringLaw, TruncatedPoissonMean) {
  EXPECT_DOUBLE_EQ(OffspringLaw(nlaw::TruncatedPoisson{2.0}).mean(), 2.0 / (1.0 - std::exp(-2.0)));
}

TEST(OffspringLaw, SizeBiasedTruncatedPoissonIsShiftedPoisson) {
  const OffspringLaw law(nlaw::TruncatedPoisson{2.0});
  double expected = std::exp(-2.0);
  for (int n = 1; n <= 30; ++n) {
    if (n > 1) expected *= 2.0 / (n - 1);
    EXPECT_NEAR(law.size_biased_pmf(n), expected, 4 * std::numeric_limits<double>::epsilon() * expected) << n;
  }
}

TEST(OffspringLaw, SizeBiasedGeometric) {
  const OffspringLaw law(nlaw::Geometric{0.5});
  for (int n = 1; n <= 20; ++n) EXPECT_NEAR(law.size_biased_pmf(n), n * std::pow(0.5, n) / 2.0, 1e-15);
}

TEST(OffspringLaw, SamplersMatchPmf) {
  for (const auto& law : all_offspring_laws()) {
    Rng rng(17, 0);
    const int top = std::min(law.support_upper(), 40);
    std::vector<double> plain(static_cast<std::size_t>(top), 0.0), biased(plain);
    std::vector<double> p(plain.size()), pb(plain.size());
    for (int n = 1; n <= top; ++n) {
      p[static_cast<std::size_t>(n - 1)] = law.pmf(n);
      pb[static_cast<std::size_t>(n - 1)] = law.size_biased_pmf(n);
    }
    const int draws = 50000;
    for (int k = 0; k < draws; ++k) {
      const int a = law.sample(rng), b = law.sample_size_biased(rng);
      if (a <= top) plain[static_cast<std::size_t>(a - 1)] += 1;
      if (b <= top) biased[static_cast<std::size_t>(b - 1)] += 1;
    }
    EXPECT_GT(stats::chi_square_p(plain, p, draws), 0.001);
    EXPECT_GT(stats::chi_square_p(biased, pb, draws), 0.001);
  }
}

TEST(OffspringLaw, RejectsBadParameters) {
  EXPECT_THROW(OffspringLaw(nlaw::Constant{0}), Error);
  EXPECT_THROW(OffspringLaw(nlaw::Uniform{3, 1}), Error);
  EXPECT_THROW(OffspringLaw(nlaw::TruncatedPoisson{-1.0}), Error);
  EXPECT_THROW(OffspringLaw(nlaw::Table{{0.5, 0.4}}), Error);
}

TEST(PerturbationLaw, Moments) {
  EXPECT_DOUBLE_EQ(PerturbationLaw(qlaw::Constant{2.0}).moment(3.0), 8.0);
  EXPECT_DOUBLE_EQ(PerturbationLaw(qlaw::LogExponential{9.0}).moment(4.0), 9.0 / 5.0);
  EXPECT_TRUE(std::isinf(PerturbationLaw(qlaw::LogExponential{9.0}).moment(9.5)));
  EXPECT_NEAR(PerturbationLaw(qlaw::Gamma{2.0, 0.5}).moment(1.0), 4.0, 1e-12);
}

TEST(PerturbationLaw, DegenerateAndLowerBound) {
  EXPECT_EQ(PerturbationLaw(qlaw::Constant{0.5}).degenerate_value(), 0.5);
  EXPECT_FALSE(PerturbationLaw(qlaw::Gamma{}).degenerate_value());
  EXPECT_EQ(PerturbationLaw(qlaw::LogExponential{3.0}).lower_bound(), 1.0);
}

TEST(PerturbationLaw, LogExponentialSampleMean) {
  const PerturbationLaw q(qlaw::LogExponential{9.0});
  Rng rng(4, 0);
  std::vector<double> x(100000);
  for (auto& v : x) v = q.sample(rng);
  const auto s = stats::mean_se(x);
  EXPECT_NEAR(s.mean, 9.0 / 8.0, 4 * s.se);
}

TEST(Samplers, GammaAndPoissonMeans) {
  Rng rng(8, 0);
  std::vector<double> g(100000), p(100000);
  for (auto& v : g) v = sample_gamma(rng, 2.5, 4.0);
  for (auto& v : p) v = sample_poisson(rng, 3.2);
  const auto sg = stats::mean_se(g), sp = stats::mean_se(p);
  EXPECT_NEAR(sg.mean, 2.5 / 4.0, 4 * sg.se);
  EXPECT_NEAR(sp.mean, 3.2, 4 * sp.se);
}

TEST(DiscreteSampler, Pmf) {
  const DiscreteSampler d({1.0, 3.0}, 5);
  EXPECT_DOUBLE_EQ(d.pmf(5), 0.25);
  EXPECT_DOUBLE_EQ(d.pmf(6), 0.75);
  EXPECT_DOUBLE_EQ(d.pmf(7), 0.0);
}
