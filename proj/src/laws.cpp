#include "wbis/laws.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "wbis/error.hpp"

namespace wbis {

namespace {

constexpr double kTailCut = 1e-17;
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

double poisson_pmf(double lambda, int k) {
  if (k < 0) return 0.0;
  if (k > 100) return std::exp(-lambda + k * std::log(lambda) - std::lgamma(k + 1.0));
  double p = std::exp(-lambda);
  for (int i = 1; i <= k; ++i) p *= lambda / i;
  return p;
}

// Past the mode the Poisson tail is at most pmf(n) / (1 - lambda / (n + 1)).
int poisson_support_upper(double lambda) {
  int n = 1;
  while (n <= 2.0 * lambda || poisson_pmf(lambda, n) / (1.0 - lambda / (n + 1.0)) > kTailCut) ++n;
  return n;
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::DomainError, what);
}

}  // namespace

double sample_gamma(Rng& rng, double shape, double rate) {
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(rng);
}

int sample_poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<int> dist(mean);
  return dist(rng);
}

DiscreteSampler::DiscreteSampler(std::vector<double> probs, int offset)
    : probs_(std::move(probs)), offset_(offset) {
  cdf_.resize(probs_.size());
  std::partial_sum(probs_.begin(), probs_.end(), cdf_.begin());
  if (cdf_.empty() || !(cdf_.back() > 0.0)) {
    throw Error(ErrorCode::DomainError, "discrete law with no mass");
  }
}

int DiscreteSampler::sample(Rng& rng) const {
  const double u = rng.uniform() * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return offset_ + static_cast<int>(it - cdf_.begin());
}

double DiscreteSampler::pmf(int value) const {
  const int k = value - offset_;
  if (k < 0 || k >= static_cast<int>(probs_.size())) return 0.0;
  return probs_[static_cast<std::size_t>(k)] / cdf_.back();
}

// ---------------------------------------------------------------------------

OffspringLaw::OffspringLaw(Variant law) : law_(std::move(law)) {
  std::visit(Overloaded{
                 [](const nlaw::Constant& c) { require(c.n >= 1, "constant offspring count must be >= 1"); },
                 [](const nlaw::Uniform& u) { require(u.lo >= 1 && u.hi >= u.lo, "uniform offspring needs 1 <= lo <= hi"); },
                 [](const nlaw::TruncatedPoisson& p) { require(p.lambda > 0.0, "poisson parameter must be > 0"); },
                 [](const nlaw::ShiftedPoisson& p) { require(p.lambda > 0.0, "poisson parameter must be > 0"); },
                 [](const nlaw::Geometric& g) { require(g.p > 0.0 && g.p <= 1.0, "geometric p must be in (0, 1]"); },
                 [](const nlaw::Table& t) {
                   require(!t.probs.empty(), "offspring table is empty");
                   double sum = 0.0;
                   for (double p : t.probs) {
                     require(p >= 0.0, "offspring probabilities must be nonnegative");
                     sum += p;
                   }
                   require(std::abs(sum - 1.0) <= 1e-12, "offspring probabilities must sum to 1");
                 },
             },
             law_);

  if (const auto* t = std::get_if<nlaw::Table>(&law_)) table_ = DiscreteSampler(t->probs, 1);
  if (const auto* u = std::get_if<nlaw::Uniform>(&law_)) {
    table_ = DiscreteSampler(std::vector<double>(static_cast<std::size_t>(u->hi - u->lo + 1), 1.0), u->lo);
  }

  // Closed forms exist for Constant, TruncatedPoisson and Geometric; tabulate the rest.
  if (std::holds_alternative<nlaw::Uniform>(law_) || std::holds_alternative<nlaw::ShiftedPoisson>(law_) ||
      std::holds_alternative<nlaw::Table>(law_)) {
    const int upper = support_upper();
    std::vector<double> probs(static_cast<std::size_t>(upper));
    for (int n = 1; n <= upper; ++n) probs[static_cast<std::size_t>(n - 1)] = size_biased_pmf(n);
    size_biased_ = DiscreteSampler(std::move(probs), 1);
  }
}

double OffspringLaw::pmf(int n) const {
  if (n < 1) return 0.0;
  return std::visit(Overloaded{
                        [n](const nlaw::Constant& c) { return n == c.n ? 1.0 : 0.0; },
                        [n](const nlaw::Uniform& u) {
                          return (n >= u.lo && n <= u.hi) ? 1.0 / (u.hi - u.lo + 1) : 0.0;
                        },
                        [n](const nlaw::TruncatedPoisson& p) {
                          return poisson_pmf(p.lambda, n) / -std::expm1(-p.lambda);
                        },
                        [n](const nlaw::ShiftedPoisson& p) { return poisson_pmf(p.lambda, n - 1); },
                        [n](const nlaw::Geometric& g) { return g.p * std::pow(1.0 - g.p, n - 1); },
                        [n](const nlaw::Table& t) {
                          return n <= static_cast<int>(t.probs.size()) ? t.probs[static_cast<std::size_t>(n - 1)]
                                                                       : 0.0;
                        },
                    },
                    law_);
}

double OffspringLaw::mean() const {
  return std::visit(Overloaded{
                        [](const nlaw::Constant& c) { return static_cast<double>(c.n); },
                        [](const nlaw::Uniform& u) { return 0.5 * (u.lo + u.hi); },
                        [](const nlaw::TruncatedPoisson& p) { return p.lambda / -std::expm1(-p.lambda); },
                        [](const nlaw::ShiftedPoisson& p) { return p.lambda + 1.0; },
                        [](const nlaw::Geometric& g) { return 1.0 / g.p; },
                        [](const nlaw::Table& t) {
                          double m = 0.0;
                          for (std::size_t k = 0; k < t.probs.size(); ++k) m += (k + 1.0) * t.probs[k];
                          return m;
                        },
                    },
                    law_);
}

int OffspringLaw::sample(Rng& rng) const {
  return std::visit(Overloaded{
                        [](const nlaw::Constant& c) { return c.n; },
                        [&](const nlaw::Uniform&) { return table_.sample(rng); },
                        [&](const nlaw::TruncatedPoisson& p) {
                          int k = 0;
                          while (k == 0) k = sample_poisson(rng, p.lambda);
                          return k;
                        },
                        [&](const nlaw::ShiftedPoisson& p) { return sample_poisson(rng, p.lambda) + 1; },
                        [&](const nlaw::Geometric& g) {
                          if (g.p >= 1.0) return 1;
                          return 1 + static_cast<int>(std::floor(std::log(rng.uniform()) / std::log1p(-g.p)));
                        },
                        [&](const nlaw::Table&) { return table_.sample(rng); },
                    },
                    law_);
}

double OffspringLaw::size_biased_pmf(int n) const { return n * pmf(n) / mean(); }

int OffspringLaw::sample_size_biased(Rng& rng) const {
  if (const auto* c = std::get_if<nlaw::Constant>(&law_)) return c->n;
  if (const auto* p = std::get_if<nlaw::TruncatedPoisson>(&law_)) {
    // n P(K = n | K > 0) / E[K | K > 0] = P(K' = n - 1), K' ~ Poisson(lambda).
    return sample_poisson(rng, p->lambda) + 1;
  }
  if (const auto* g = std::get_if<nlaw::Geometric>(&law_)) {
    // n p^2 (1 - p)^(n - 1) is the law of G1 + G2 - 1.
    if (g->p >= 1.0) return 1;
    const double scale = std::log1p(-g->p);
    const auto draw = [&] { return 1 + static_cast<int>(std::floor(std::log(rng.uniform()) / scale)); };
    const int first = draw();
    return first + draw() - 1;
  }
  return size_biased_.sample(rng);
}

int OffspringLaw::support_upper() const {
  return std::visit(Overloaded{
                        [](const nlaw::Constant& c) { return c.n; },
                        [](const nlaw::Uniform& u) { return u.hi; },
                        [](const nlaw::TruncatedPoisson& p) { return poisson_support_upper(p.lambda); },
                        [](const nlaw::ShiftedPoisson& p) { return poisson_support_upper(p.lambda) + 1; },
                        [](const nlaw::Geometric& g) {
                          if (g.p >= 1.0) return 1;
                          return static_cast<int>(std::ceil(std::log(kTailCut) / std::log1p(-g.p))) + 1;
                        },
                        [](const nlaw::Table& t) { return static_cast<int>(t.probs.size()); },
                    },
                    law_);
}

// ---------------------------------------------------------------------------

PerturbationLaw::PerturbationLaw(Variant law) : law_(std::move(law)) {
  std::visit(Overloaded{
                 [](const qlaw::Constant& c) { require(c.q >= 0.0 && std::isfinite(c.q), "constant Q must be >= 0"); },
                 [](const qlaw::LogExponential& e) { require(e.rate > 0.0, "log-exponential rate must be > 0"); },
                 [](const qlaw::Gamma& g) { require(g.shape > 0.0 && g.rate > 0.0, "gamma Q needs shape, rate > 0"); },
             },
             law_);
}

double PerturbationLaw::sample(Rng& rng) const {
  return std::visit(Overloaded{
                        [](const qlaw::Constant& c) { return c.q; },
                        [&](const qlaw::LogExponential& e) { return std::exp(rng.exponential(e.rate)); },
                        [&](const qlaw::Gamma& g) { return sample_gamma(rng, g.shape, g.rate); },
                    },
                    law_);
}

double PerturbationLaw::moment(double s) const {
  return std::visit(Overloaded{
                        [s](const qlaw::Constant& c) {
                          if (c.q == 0.0) return s > 0.0 ? 0.0 : (s == 0.0 ? 1.0 : kInf);
                          return std::pow(c.q, s);
                        },
                        [s](const qlaw::LogExponential& e) { return s < e.rate ? e.rate / (e.rate - s) : kInf; },
                        [s](const qlaw::Gamma& g) {
                          if (s <= -g.shape) return kInf;
                          return std::exp(std::lgamma(g.shape + s) - std::lgamma(g.shape) - s * std::log(g.rate));
                        },
                    },
                    law_);
}

std::optional<double> PerturbationLaw::degenerate_value() const {
  if (const auto* c = std::get_if<qlaw::Constant>(&law_)) return c->q;
  return std::nullopt;
}

double PerturbationLaw::lower_bound() const {
  return std::visit(Overloaded{
                        [](const qlaw::Constant& c) { return c.q; },
                        [](const qlaw::LogExponential&) { return 1.0; },
                        [](const qlaw::Gamma&) { return 0.0; },
                    },
                    law_);
}

}  // namespace wbis
