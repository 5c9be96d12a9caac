#include "wbis/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/digamma.hpp>

#include "samplers.hpp"
#include "wbis/error.hpp"

namespace wbis {

namespace {

using detail::dirichlet_ones;
using detail::exp_difference;
using detail::sample_power_law;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kMomentSamples = 200000;
constexpr SeedSpec kMomentSeed{0x6d656c6c696eULL, 0};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

double digamma(double x) { return boost::math::digamma(x); }

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::DomainError, what);
}

/// x^s with 0^s = 0 for s > 0 and 0^0 = 0 (zero weights are never counted).
double weight_power(double c, double s) {
  if (c <= 0.0) return 0.0;
  return std::pow(c, s);
}

double weight_power_log(double c, double s) {
  if (c <= 0.0) return 0.0;
  return std::pow(c, s) * std::log(c);
}

// --- Pareto(a, b) truncated to [b, upper] ----------------------------------

double pareto_moment(double a, double b, double upper, double s) {
  if (!std::isfinite(upper)) return s < a ? a * std::pow(b, s) / (a - s) : kInf;
  const double norm = -std::expm1(a * std::log(b / upper));
  const double k = s - a;
  const double integral =
      std::abs(k) < 1e-12 ? std::log(upper / b) : (std::pow(upper, k) - std::pow(b, k)) / k;
  return a * std::pow(b, a) * integral / norm;
}

double pareto_moment_log(double a, double b, double upper, double s) {
  if (!std::isfinite(upper)) return pareto_moment(a, b, upper, s) * (std::log(b) + 1.0 / (a - s));
  const double norm = -std::expm1(a * std::log(b / upper));
  const double k = s - a;
  double integral;
  if (std::abs(k) < 1e-12) {
    const double lu = std::log(upper), lb = std::log(b);
    integral = 0.5 * (lu * lu - lb * lb);
  } else {
    const auto antiderivative = [k](double x) { return std::pow(x, k) * (k * std::log(x) - 1.0) / (k * k); };
    integral = antiderivative(upper) - antiderivative(b);
  }
  return a * std::pow(b, a) * integral / norm;
}

// --- SimplexGamma helpers ---------------------------------------------------

/// log E[B^s], B ~ Gamma(a, b) with rate b.
double log_gamma_moment(double a, double b, double s) {
  return std::lgamma(a + s) - std::lgamma(a) - s * std::log(b);
}

/// E[sum_i beta_i^r | N = n] for Dirichlet(1, ..., 1).
double dirichlet_power_sum(int n, double r) {
  return std::exp(std::lgamma(1.0 + r) + std::lgamma(n + 1.0) - std::lgamma(n + r));
}

double solve_simplex_exponent(double a, double b) {
  const auto f = [&](double k) { return log_gamma_moment(a, b, k); };
  require(digamma(a) - std::log(b) < 0.0,
          "simplex model: E[B^s] never drops below 1, so no exponent with E[B^s] = 1 exists");
  double lo = 1e-8, hi = 1.0;
  while (f(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    require(hi < 1e6, "simplex model: no exponent with E[B^s] = 1");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

BranchingVector simplex_vector(const model::SimplexGamma& m, double kappa, double big_b, int n, Rng& rng) {
  BranchingVector v;
  v.n = n;
  const auto betas = dirichlet_ones(rng, n);
  v.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    v.weights[static_cast<std::size_t>(i)] = big_b * std::pow(betas[static_cast<std::size_t>(i)], 1.0 / kappa);
  }
  v.q = m.q_mode == model::SimplexQMode::TwoTimesB ? 2.0 * big_b : m.q_law.sample(rng);
  return v;
}

void check_domain(const ModelSpec& model, double s) {
  if (!(s > model.domain_lower() && s < model.domain_upper())) {
    std::ostringstream os;
    os << "s = " << s << " outside the convergence region (" << model.domain_lower() << ", "
       << model.domain_upper() << ") of " << model.name();
    throw Error(ErrorCode::DomainError, os.str());
  }
}

/// Monte Carlo average of f(vector) over a fixed-seed P-sample.
template <class F>
MomentEstimate monte_carlo_moment(const ModelSpec& model, F&& f) {
  Rng rng(kMomentSeed);
  double mean = 0.0, m2 = 0.0;
  for (std::uint64_t k = 1; k <= kMomentSamples; ++k) {
    const double x = f(sample_p(model, rng));
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  const double var = m2 / static_cast<double>(kMomentSamples - 1);
  return {mean, std::sqrt(var / static_cast<double>(kMomentSamples)), kMomentSamples};
}

}  // namespace

double BranchingVector::spine_weight_sum(double alpha) const {
  double d = 0.0;
  for (double c : weights) d += weight_power(c, alpha);
  return d;
}

// ---------------------------------------------------------------------------

ModelSpec::ModelSpec(Variant v) : v_(std::move(v)) {
  std::visit(
      Overloaded{
          [this](const model::NonBranchingExp& m) {
            require(m.theta > 0.0 && m.lambda > 0.0, "exponential rates must be > 0");
            domain_lower_ = -m.lambda;
            domain_upper_ = m.theta;
          },
          [this](const model::BranchingMM1& m) {
            require(m.theta > 0.0 && m.lambda > 0.0, "exponential rates must be > 0");
            require(m.poisson_param > 0.0, "poisson_param must be > 0");
            require(m.y_rate > 0.0, "y_rate must be > 0");
            domain_lower_ = -m.lambda;
            domain_upper_ = m.theta;
          },
          [this](const model::IdenticalPareto& m) {
            require(m.a > 0.0 && m.b > 0.0, "Pareto shape and scale must be > 0");
            require(m.upper > m.b, "Pareto truncation point must exceed the scale");
            domain_lower_ = -kInf;
            domain_upper_ = std::isfinite(m.upper) ? kInf : m.a;
          },
          [this](const model::ExpPoisson& m) {
            require(m.lambda > 0.0, "exponential rate must be > 0");
            domain_lower_ = -1.0;
            domain_upper_ = kInf;
          },
          [this](const model::GammaGeometric& m) {
            require(m.beta > 0.0, "gamma rate beta must be > 0");
            domain_lower_ = -2.0;
            domain_upper_ = 2.0;
          },
          [this](const model::SimplexGamma& m) {
            require(m.a > 0.0 && m.b > 0.0, "gamma shape and rate must be > 0");
            simplex_exponent_ = solve_simplex_exponent(m.a, m.b);
            domain_lower_ = std::max(-m.a, -simplex_exponent_);
            domain_upper_ = kInf;
          },
          [this](const model::DiscreteTable& m) {
            require(!m.outcomes.empty() && m.outcomes.size() == m.probs.size(),
                    "discrete table needs one probability per outcome");
            const std::size_t n = m.outcomes.front().weights.size();
            require(n >= 1, "discrete outcomes need at least one weight");
            double total = 0.0;
            for (std::size_t k = 0; k < m.outcomes.size(); ++k) {
              require(m.outcomes[k].weights.size() == n, "discrete table requires a constant N");
              require(m.probs[k] >= 0.0, "discrete probabilities must be >= 0");
              require(m.outcomes[k].q >= 0.0, "Q must be >= 0");
              for (double c : m.outcomes[k].weights) require(c >= 0.0, "weights must be >= 0");
              total += m.probs[k];
            }
            require(std::abs(total - 1.0) <= 1e-12, "discrete probabilities must sum to 1");
            domain_lower_ = 0.0;
            domain_upper_ = kInf;
          },
          [this](const model::Custom& m) {
            require(static_cast<bool>(m.sample_p), "custom model needs a sample_p hook");
            domain_lower_ = 0.0;
            domain_upper_ = m.domain_upper;
          },
      },
      v_);
}

std::string ModelSpec::name() const {
  return std::visit(Overloaded{
                        [](const model::NonBranchingExp&) -> std::string { return "non_branching_exp"; },
                        [](const model::BranchingMM1&) -> std::string { return "branching_mm1"; },
                        [](const model::IdenticalPareto&) -> std::string { return "identical_pareto"; },
                        [](const model::ExpPoisson&) -> std::string { return "exp_poisson"; },
                        [](const model::GammaGeometric&) -> std::string { return "gamma_geometric"; },
                        [](const model::SimplexGamma&) -> std::string { return "simplex_gamma"; },
                        [](const model::DiscreteTable&) -> std::string { return "discrete_table"; },
                        [](const model::Custom& m) { return m.name; },
                    },
                    v_);
}

bool ModelSpec::q_independent() const {
  return std::visit(Overloaded{
                        [](const model::GammaGeometric&) { return false; },
                        [](const model::SimplexGamma& m) { return m.q_mode == model::SimplexQMode::Independent; },
                        [](const model::DiscreteTable& m) {
                          // Independent only when Q is constant across outcomes.
                          return std::all_of(m.outcomes.begin(), m.outcomes.end(),
                                             [&](const auto& o) { return o.q == m.outcomes.front().q; });
                        },
                        [](const model::Custom& m) { return m.q_independent; },
                        [](const auto&) { return true; },
                    },
                    v_);
}

std::optional<double> ModelSpec::degenerate_q() const {
  return std::visit(Overloaded{
                        [](const model::NonBranchingExp& m) { return m.q_law.degenerate_value(); },
                        [](const model::BranchingMM1&) -> std::optional<double> { return std::nullopt; },
                        [](const model::IdenticalPareto& m) { return m.q_law.degenerate_value(); },
                        [](const model::ExpPoisson& m) { return m.q_law.degenerate_value(); },
                        [](const model::GammaGeometric&) -> std::optional<double> { return std::nullopt; },
                        [](const model::SimplexGamma& m) -> std::optional<double> {
                          if (m.q_mode == model::SimplexQMode::TwoTimesB) return std::nullopt;
                          return m.q_law.degenerate_value();
                        },
                        [this](const model::DiscreteTable& m) -> std::optional<double> {
                          if (!q_independent()) return std::nullopt;
                          return m.outcomes.front().q;
                        },
                        [](const model::Custom& m) { return m.degenerate_q; },
                    },
                    v_);
}

double ModelSpec::q_lower_bound() const {
  return std::visit(Overloaded{
                        [](const model::NonBranchingExp& m) { return m.q_law.lower_bound(); },
                        [](const model::BranchingMM1&) { return 1.0; },
                        [](const model::IdenticalPareto& m) { return m.q_law.lower_bound(); },
                        [](const model::ExpPoisson& m) { return m.q_law.lower_bound(); },
                        [](const model::GammaGeometric&) { return 0.0; },
                        [](const model::SimplexGamma& m) {
                          return m.q_mode == model::SimplexQMode::TwoTimesB ? 0.0 : m.q_law.lower_bound();
                        },
                        [](const model::DiscreteTable& m) {
                          double lo = kInf;
                          for (const auto& o : m.outcomes) lo = std::min(lo, o.q);
                          return lo;
                        },
                        [](const model::Custom& m) { return m.q_lower_bound.value_or(0.0); },
                    },
                    v_);
}

double ModelSpec::mean_offspring() const {
  return std::visit(Overloaded{
                        [](const model::NonBranchingExp&) { return 1.0; },
                        [](const model::BranchingMM1& m) { return m.poisson_param / -std::expm1(-m.poisson_param); },
                        [](const model::IdenticalPareto& m) { return m.n_law.mean(); },
                        [](const model::ExpPoisson& m) { return 1.0 / m.lambda + 1.0; },
                        [](const model::GammaGeometric&) { return 2.0; },
                        [](const model::SimplexGamma& m) { return m.n_law.mean(); },
                        [](const model::DiscreteTable& m) {
                          return static_cast<double>(m.outcomes.front().weights.size());
                        },
                        [this](const model::Custom& m) {
                          if (m.mean_offspring) return *m.mean_offspring;
                          return monte_carlo_moment(*this, [](const BranchingVector& v) {
                                   return static_cast<double>(v.n);
                                 }).value;
                        },
                    },
                    v_);
}

bool ModelSpec::has_analytic_mellin() const {
  if (const auto* c = get_if<model::Custom>()) return static_cast<bool>(c->mellin);
  return true;
}

// ---------------------------------------------------------------------------

MomentEstimate mellin_estimate(const ModelSpec& model, double s) {
  if (const auto* c = model.get_if<model::Custom>(); c && !c->mellin) {
    check_domain(model, s);
    return monte_carlo_moment(model, [s](const BranchingVector& v) {
      double total = 0.0;
      for (double w : v.weights) total += s == 0.0 ? (w > 0.0 ? 1.0 : 0.0) : weight_power(w, s);
      return total;
    });
  }
  return {mellin(model, s), 0.0, 0};
}

double mellin(const ModelSpec& model, double s) {
  if (s == 0.0 && !model.get_if<model::Custom>()) {
    // Counts the strictly positive weights. Every built-in except the
    // discrete table has C > 0 almost surely.
    if (const auto* d = model.get_if<model::DiscreteTable>()) {
      double count = 0.0;
      for (std::size_t k = 0; k < d->outcomes.size(); ++k) {
        for (double c : d->outcomes[k].weights) count += c > 0.0 ? d->probs[k] : 0.0;
      }
      return count;
    }
    return model.mean_offspring();
  }
  check_domain(model, s);
  return std::visit(
      Overloaded{
          [s](const model::NonBranchingExp& m) { return m.theta / (m.theta - s) * m.lambda / (m.lambda + s); },
          [s, &model](const model::BranchingMM1& m) {
            return model.mean_offspring() * m.theta / (m.theta - s) * m.lambda / (m.lambda + s);
          },
          [s](const model::IdenticalPareto& m) { return m.n_law.mean() * pareto_moment(m.a, m.b, m.upper, s); },
          [s](const model::ExpPoisson& m) {
            return std::exp(std::lgamma(s + 2.0) - (s + 1.0) * std::log(m.lambda)) +
                   std::exp(std::lgamma(s + 1.0) - s * std::log(m.lambda));
          },
          [s](const model::GammaGeometric& m) {
            return 2.0 * std::exp(s * std::log(m.beta) + std::lgamma(2.0 - s) + std::lgamma(2.0 + s));
          },
          [s, &model](const model::SimplexGamma& m) {
            const double r = s / model.simplex_exponent();
            double mix = 0.0;
            for (int n = 1; n <= m.n_law.support_upper(); ++n) {
              const double p = m.n_law.pmf(n);
              if (p > 0.0) mix += p * dirichlet_power_sum(n, r);
            }
            return std::exp(log_gamma_moment(m.a, m.b, s)) * mix;
          },
          [s](const model::DiscreteTable& m) {
            double total = 0.0;
            for (std::size_t k = 0; k < m.outcomes.size(); ++k) {
              for (double c : m.outcomes[k].weights) total += m.probs[k] * weight_power(c, s);
            }
            return total;
          },
          [s, &model](const model::Custom& m) {
            if (m.mellin) return m.mellin(s);
            return mellin_estimate(model, s).value;
          },
      },
      model.variant());
}

double drift_mu(const ModelSpec& model, double alpha) {
  check_domain(model, alpha);
  return std::visit(
      Overloaded{
          [&](const model::NonBranchingExp& m) {
            return mellin(model, alpha) * (1.0 / (m.theta - alpha) - 1.0 / (m.lambda + alpha));
          },
          [&](const model::BranchingMM1& m) {
            return mellin(model, alpha) * (1.0 / (m.theta - alpha) - 1.0 / (m.lambda + alpha));
          },
          [&](const model::IdenticalPareto& m) {
            return m.n_law.mean() * pareto_moment_log(m.a, m.b, m.upper, alpha);
          },
          [&](const model::ExpPoisson& m) {
            const double log_l = std::log(m.lambda);
            return std::exp(std::lgamma(alpha + 2.0) - (alpha + 1.0) * log_l) * (digamma(alpha + 2.0) - log_l) +
                   std::exp(std::lgamma(alpha + 1.0) - alpha * log_l) * (digamma(alpha + 1.0) - log_l);
          },
          [&](const model::GammaGeometric& m) {
            return mellin(model, alpha) * (std::log(m.beta) - digamma(2.0 - alpha) + digamma(2.0 + alpha));
          },
          [&](const model::SimplexGamma& m) {
            const double kappa = model.simplex_exponent();
            const double r = alpha / kappa;
            const double log_b_part = digamma(m.a + alpha) - std::log(m.b);
            double total = 0.0;
            for (int n = 1; n <= m.n_law.support_upper(); ++n) {
              const double p = m.n_law.pmf(n);
              if (p <= 0.0) continue;
              const double g = dirichlet_power_sum(n, r);
              total += p * g * (log_b_part + (digamma(1.0 + r) - digamma(n + r)) / kappa);
            }
            return std::exp(log_gamma_moment(m.a, m.b, alpha)) * total;
          },
          [&](const model::DiscreteTable& m) {
            double total = 0.0;
            for (std::size_t k = 0; k < m.outcomes.size(); ++k) {
              for (double c : m.outcomes[k].weights) total += m.probs[k] * weight_power_log(c, alpha);
            }
            return total;
          },
          [&](const model::Custom& m) {
            if (m.mellin_derivative) return m.mellin_derivative(alpha);
            if (m.mellin) {
              const double h = 1e-5 * std::max(1.0, alpha);
              return (m.mellin(alpha + h) - m.mellin(alpha - h)) / (2.0 * h);
            }
            return monte_carlo_moment(model, [alpha](const BranchingVector& v) {
                     double total = 0.0;
                     for (double w : v.weights) total += weight_power_log(w, alpha);
                     return total;
                   }).value;
          },
      },
      model.variant());
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> root_scan_grid(const ModelSpec& model) {
  const double upper = model.domain_upper();
  const double cap = std::min(upper, 256.0);
  std::vector<double> grid;
  for (double lo = 0x1.0p-6; lo < cap; lo *= 2.0) {
    const double hi = std::min(lo * 2.0, cap);
    for (int k = 0; k < 16; ++k) {
      const double s = lo + (hi - lo) * k / 16.0;
      if (s < upper) grid.push_back(s);
    }
  }
  if (std::isfinite(upper)) {
    const double last = grid.empty() ? 0.0 : grid.back();
    for (int j = 1; j <= 40; ++j) {
      const double s = upper - (upper - last) * std::ldexp(1.0, -j);
      if (s > grid.back() && upper - s >= 1e-9) grid.push_back(s);
    }
    grid.push_back(upper - 1e-9);
  } else {
    grid.push_back(cap);
  }
  return grid;
}

double bisect_unit_crossing(const ModelSpec& model, double lo, double hi, bool increasing) {
  const bool exact = model.has_analytic_mellin();
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double value = mellin(model, mid) - 1.0;
    if (exact && std::abs(value) <= 1e-13) return mid;
    if ((value < 0.0) == increasing) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TiltContext make_context(const ModelSpec& model, double alpha) {
  check_domain(model, alpha);
  if (!(alpha > 0.0)) throw Error(ErrorCode::DomainError, "alpha must be > 0");
  TiltContext ctx;
  ctx.alpha = alpha;
  ctx.mu = drift_mu(model, alpha);
  std::visit(
      Overloaded{
          [&](const model::NonBranchingExp& m) {
            ctx.tilted_theta = m.theta - alpha;
            ctx.tilted_lambda = m.lambda + alpha;
          },
          [&](const model::BranchingMM1& m) {
            ctx.tilted_theta = m.theta - alpha;
            ctx.tilted_lambda = m.lambda + alpha;
          },
          [&](const model::IdenticalPareto& m) { ctx.tilted_pareto_shape = m.a - alpha; },
          [&](const model::ExpPoisson& m) {
            // n lambda Gamma(n + alpha) / ((n - 1)! (lambda + 1)^(n + alpha))
            std::vector<double> probs;
            const double log_l = std::log(m.lambda), log_l1 = std::log1p(m.lambda);
            double total = 0.0, previous = 0.0;
            for (int n = 1; n < 100000; ++n) {
              const double p = std::exp(std::log(static_cast<double>(n)) + log_l + std::lgamma(n + alpha) -
                                        std::lgamma(static_cast<double>(n)) - (n + alpha) * log_l1);
              probs.push_back(p);
              total += p;
              if (p < previous && p < 1e-18 * total) break;
              previous = p;
            }
            ctx.tilted_probs = probs;
            ctx.tilted_table = DiscreteSampler(std::move(probs), 1);
          },
          [&](const model::GammaGeometric&) {
            if (alpha >= 2.0) throw Error(ErrorCode::DomainError, "gamma-geometric tilt needs alpha < 2");
          },
          [&](const model::SimplexGamma& m) { ctx.tilted_gamma_shape = m.a + alpha; },
          [&](const model::DiscreteTable& m) {
            std::vector<double> probs(m.probs.size());
            for (std::size_t k = 0; k < m.probs.size(); ++k) {
              double d = 0.0;
              for (double c : m.outcomes[k].weights) d += weight_power(c, alpha);
              probs[k] = m.probs[k] * d;
            }
            ctx.tilted_probs = probs;
            ctx.tilted_table = DiscreteSampler(std::move(probs), 0);
          },
          [](const model::Custom&) {},
      },
      model.variant());
  return ctx;
}

TiltContext solve_alpha(const ModelSpec& model) {
  const auto grid = root_scan_grid(model);
  std::optional<std::pair<double, double>> up, down;
  double prev_s = grid.front();
  double prev_m = mellin(model, prev_s);
  bool seen_below = prev_m < 1.0;
  for (std::size_t k = 1; k < grid.size() && !up; ++k) {
    const double s = grid[k];
    const double m = mellin(model, s);
    if (!std::isfinite(m)) break;
    if (prev_m < 1.0 && m >= 1.0) up = {prev_s, s};
    if (!down && prev_m > 1.0 && m <= 1.0) down = {prev_s, s};
    seen_below = seen_below || m < 1.0;
    prev_s = s;
    prev_m = m;
  }

  if (up) {
    const double alpha = bisect_unit_crossing(model, up->first, up->second, true);
    TiltContext ctx = make_context(model, alpha);
    if (!(ctx.mu > 0.0)) {
      std::ostringstream os;
      os << "root alpha = " << alpha << " has drift mu = " << ctx.mu << " <= 0";
      throw Error(ErrorCode::NonPositiveDrift, os.str());
    }
    return ctx;
  }
  if (down) {
    const double alpha = bisect_unit_crossing(model, down->first, down->second, false);
    std::ostringstream os;
    os << "the only root alpha = " << alpha << " lies on the decreasing branch, mu = " << drift_mu(model, alpha)
       << " <= 0";
    throw Error(ErrorCode::NonPositiveDrift, os.str());
  }
  std::ostringstream os;
  os << "E[sum C_i^s] - 1 has no sign change on (0, " << model.domain_upper() << ") for " << model.name()
     << (seen_below ? "" : "; it never drops below 1");
  throw Error(ErrorCode::NoRoot, os.str());
}

// ---------------------------------------------------------------------------

BranchingVector sample_p(const ModelSpec& model, Rng& rng) {
  return std::visit(
      Overloaded{
          [&](const model::NonBranchingExp& m) {
            BranchingVector v;
            v.n = 1;
            v.weights = {exp_difference(rng, m.theta, m.lambda)};
            v.q = m.q_law.sample(rng);
            return v;
          },
          [&](const model::BranchingMM1& m) {
            BranchingVector v;
            int k = 0;
            while (k == 0) k = sample_poisson(rng, m.poisson_param);
            v.n = k;
            v.weights.resize(static_cast<std::size_t>(k));
            for (auto& c : v.weights) c = exp_difference(rng, m.theta, m.lambda);
            v.q = std::exp(rng.exponential(m.y_rate));
            return v;
          },
          [&](const model::IdenticalPareto& m) {
            BranchingVector v;
            v.n = m.n_law.sample(rng);
            v.weights.assign(static_cast<std::size_t>(v.n), sample_power_law(rng, m.a, m.b, m.upper));
            v.q = m.q_law.sample(rng);
            return v;
          },
          [&](const model::ExpPoisson& m) {
            BranchingVector v;
            const double c = rng.exponential(m.lambda);
            v.n = sample_poisson(rng, c) + 1;
            v.weights.assign(static_cast<std::size_t>(v.n), c);
            v.q = m.q_law.sample(rng);
            return v;
          },
          [&](const model::GammaGeometric& m) {
            BranchingVector v;
            v.q = sample_gamma(rng, 2.0, m.beta);
            v.n = 1 + static_cast<int>(std::floor(std::log(rng.uniform()) / std::log(0.5)));
            v.weights.assign(static_cast<std::size_t>(v.n), sample_gamma(rng, v.n + 1.0, 2.0 * v.q));
            return v;
          },
          [&](const model::SimplexGamma& m) {
            const int n = m.n_law.sample(rng);
            const double big_b = sample_gamma(rng, m.a, m.b);
            return simplex_vector(m, model.simplex_exponent(), big_b, n, rng);
          },
          [&](const model::DiscreteTable& m) {
            const auto k = static_cast<std::size_t>(DiscreteSampler(m.probs, 0).sample(rng));
            BranchingVector v;
            v.weights = m.outcomes[k].weights;
            v.n = static_cast<int>(v.weights.size());
            v.q = m.outcomes[k].q;
            return v;
          },
          [&](const model::Custom& m) { return m.sample_p(rng); },
      },
      model.variant());
}

BranchingVector sample_tilted(const ModelSpec& model, const TiltContext& ctx, Rng& rng) {
  return std::visit(
      Overloaded{
          [&](const model::NonBranchingExp& m) {
            BranchingVector v;
            v.n = 1;
            v.weights = {exp_difference(rng, ctx.tilted_theta, ctx.tilted_lambda)};
            v.q = m.q_law.sample(rng);
            return v;
          },
          [&](const model::BranchingMM1& m) {
            // Size-biased truncated Poisson is Poisson + 1; one uniformly
            // chosen coordinate is exponentially tilted, Q is untouched.
            BranchingVector v;
            v.n = sample_poisson(rng, m.poisson_param) + 1;
            const auto tilted = rng.below(static_cast<std::uint64_t>(v.n));
            v.weights.resize(static_cast<std::size_t>(v.n));
            for (std::size_t i = 0; i < v.weights.size(); ++i) {
              v.weights[i] = i == tilted ? exp_difference(rng, ctx.tilted_theta, ctx.tilted_lambda)
                                         : exp_difference(rng, m.theta, m.lambda);
            }
            v.q = std::exp(rng.exponential(m.y_rate));
            return v;
          },
          [&](const model::IdenticalPareto& m) {
            BranchingVector v;
            v.n = m.n_law.sample_size_biased(rng);
            v.weights.assign(static_cast<std::size_t>(v.n),
                             sample_power_law(rng, ctx.tilted_pareto_shape, m.b, m.upper));
            v.q = m.q_law.sample(rng);
            return v;
          },
          [&](const model::ExpPoisson& m) {
            BranchingVector v;
            v.n = ctx.tilted_table.sample(rng);
            v.weights.assign(static_cast<std::size_t>(v.n), sample_gamma(rng, v.n + ctx.alpha, m.lambda + 1.0));
            v.q = m.q_law.sample(rng);
            return v;
          },
          [&](const model::GammaGeometric& m) {
            BranchingVector v;
            v.q = sample_gamma(rng, 2.0 - ctx.alpha, m.beta);
            const double c = sample_gamma(rng, ctx.alpha + 2.0, v.q);
            v.n = sample_poisson(rng, v.q * c) + 1;
            v.weights.assign(static_cast<std::size_t>(v.n), c);
            return v;
          },
          [&](const model::SimplexGamma& m) {
            const int n = m.n_law.sample(rng);
            const double big_b = sample_gamma(rng, ctx.tilted_gamma_shape, m.b);
            return simplex_vector(m, model.simplex_exponent(), big_b, n, rng);
          },
          [&](const model::DiscreteTable& m) {
            const auto k = static_cast<std::size_t>(ctx.tilted_table.sample(rng));
            BranchingVector v;
            v.weights = m.outcomes[k].weights;
            v.n = static_cast<int>(v.weights.size());
            v.q = m.outcomes[k].q;
            return v;
          },
          [&](const model::Custom& m) {
            if (!m.sample_tilted) {
              throw Error(ErrorCode::NoTiltAvailable, "custom model '" + m.name + "' has no tilted sampler");
            }
            return m.sample_tilted(ctx, rng);
          },
      },
      model.variant());
}

std::uint32_t choose_spine_child(const BranchingVector& v, double alpha, Rng& rng) {
  const double d = v.spine_weight_sum(alpha);
  if (!(d > 0.0) || !std::isfinite(d)) {
    throw Error(ErrorCode::ZeroSpineWeight, "sum of C_i^alpha is zero or not finite");
  }
  const double target = rng.uniform() * d;
  double running = 0.0;
  std::uint32_t last_positive = 0;
  for (std::size_t j = 0; j < v.weights.size(); ++j) {
    const double w = weight_power(v.weights[j], alpha);
    if (w <= 0.0) continue;
    running += w;
    last_positive = static_cast<std::uint32_t>(j + 1);
    if (target < running) return last_positive;
  }
  return last_positive;
}

// ---------------------------------------------------------------------------

QEfficiencyReport q_efficiency_check(const ModelSpec& model, const TiltContext& ctx) {
  const double alpha = ctx.alpha;
  QEfficiencyReport report;

  // Monte Carlo with a crude heavy-tail flag: one draw carrying a large share
  // of the total suggests the moment is infinite.
  const auto mc = [&](auto&& f) {
    Rng rng(kMomentSeed.with_stream(1));
    double total = 0.0, largest = 0.0;
    for (std::uint64_t k = 0; k < kMomentSamples; ++k) {
      const double x = f(sample_p(model, rng));
      total += x;
      largest = std::max(largest, x);
    }
    if (!std::isfinite(total) || (total > 0.0 && largest / total > 0.05)) {
      report.warnings.push_back("Monte Carlo moment dominated by a single draw; the moment may be infinite");
    }
    return total / static_cast<double>(kMomentSamples);
  };
  const auto q_moment_mc = [&](double s) { return mc([s](const BranchingVector& v) { return std::pow(v.q, s); }); };
  const auto q_over_d_mc = [&] {
    return mc([alpha](const BranchingVector& v) {
      const double d = v.spine_weight_sum(alpha);
      return d > 0.0 ? std::pow(v.q, 2.0 * alpha) / d : kInf;
    });
  };

  std::visit(
      Overloaded{
          [&](const model::BranchingMM1& m) {
            const PerturbationLaw q(qlaw::LogExponential{m.y_rate});
            report.e_q_alpha = q.moment(alpha);
            report.e_q_2alpha = q.moment(2.0 * alpha);
            // P(N = 1) > 0 and E[C^-alpha] = inf when alpha >= lambda.
            report.e_q_2alpha_over_d = alpha >= m.lambda ? kInf : q_over_d_mc();
            report.analytic = true;
          },
          [&](const model::NonBranchingExp& m) {
            report.e_q_alpha = m.q_law.moment(alpha);
            report.e_q_2alpha = m.q_law.moment(2.0 * alpha);
            report.e_q_2alpha_over_d =
                alpha >= m.lambda ? kInf : report.e_q_2alpha * m.theta / (m.theta + alpha) * m.lambda / (m.lambda - alpha);
            report.analytic = true;
          },
          [&](const model::SimplexGamma& m) {
            if (m.q_mode == model::SimplexQMode::TwoTimesB) {
              report.e_q_alpha = std::pow(2.0, alpha) * std::exp(log_gamma_moment(m.a, m.b, alpha));
              report.e_q_2alpha = std::pow(2.0, 2.0 * alpha) * std::exp(log_gamma_moment(m.a, m.b, 2.0 * alpha));
              if (std::abs(alpha - model.simplex_exponent()) < 1e-9) {
                // D = B^alpha, so Q^2alpha / D = 4^alpha B^alpha.
                report.e_q_2alpha_over_d = std::pow(4.0, alpha) * std::exp(log_gamma_moment(m.a, m.b, alpha));
                report.analytic = true;
              } else {
                report.e_q_2alpha_over_d = q_over_d_mc();
              }
            } else {
              report.e_q_alpha = m.q_law.moment(alpha);
              report.e_q_2alpha = m.q_law.moment(2.0 * alpha);
              report.e_q_2alpha_over_d = q_over_d_mc();
              report.analytic = true;
            }
          },
          [&](const model::DiscreteTable& m) {
            for (std::size_t k = 0; k < m.probs.size(); ++k) {
              const auto& o = m.outcomes[k];
              double d = 0.0;
              for (double c : o.weights) d += weight_power(c, alpha);
              report.e_q_alpha += m.probs[k] * std::pow(o.q, alpha);
              report.e_q_2alpha += m.probs[k] * std::pow(o.q, 2.0 * alpha);
              if (m.probs[k] > 0.0) report.e_q_2alpha_over_d += d > 0.0 ? m.probs[k] * std::pow(o.q, 2.0 * alpha) / d : kInf;
            }
            report.analytic = true;
          },
          [&](const model::GammaGeometric& m) {
            const PerturbationLaw q(qlaw::Gamma{2.0, m.beta});
            report.e_q_alpha = q.moment(alpha);
            report.e_q_2alpha = q.moment(2.0 * alpha);
            report.e_q_2alpha_over_d = q_over_d_mc();
          },
          [&](const model::IdenticalPareto& m) {
            report.e_q_alpha = m.q_law.moment(alpha);
            report.e_q_2alpha = m.q_law.moment(2.0 * alpha);
            report.e_q_2alpha_over_d = q_over_d_mc();
            report.analytic = true;
          },
          [&](const model::ExpPoisson& m) {
            report.e_q_alpha = m.q_law.moment(alpha);
            report.e_q_2alpha = m.q_law.moment(2.0 * alpha);
            report.e_q_2alpha_over_d = q_over_d_mc();
            report.analytic = true;
          },
          [&](const model::Custom&) {
            report.e_q_alpha = q_moment_mc(alpha);
            report.e_q_2alpha = q_moment_mc(2.0 * alpha);
            report.e_q_2alpha_over_d = q_over_d_mc();
          },
      },
      model.variant());

  const double relevant = model.q_independent() ? report.e_q_2alpha : report.e_q_2alpha_over_d;
  report.finite = std::isfinite(relevant) && (report.analytic || report.warnings.empty());
  return report;
}

}  // namespace wbis
