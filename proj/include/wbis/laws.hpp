#pragma once

#include <optional>
#include <type_traits>
#include <variant>
#include <vector>

#include "wbis/rng.hpp"

namespace wbis {

/// Finite-support sampler by inverse CDF over a probability table indexed
/// from `offset`.
class DiscreteSampler {
 public:
  DiscreteSampler() = default;
  DiscreteSampler(std::vector<double> probs, int offset);

  int sample(Rng& rng) const;
  double pmf(int value) const;
  int offset() const { return offset_; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
  std::vector<double> cdf_;
  int offset_ = 0;
};

// ---------------------------------------------------------------------------
// Offspring-count laws on {1, 2, ...}.

namespace nlaw {
struct Constant { int n = 1; };
/// Uniform on {lo, ..., hi}.
struct Uniform { int lo = 1; int hi = 1; };
/// K | K > 0 with K ~ Poisson(lambda). Note the mean is lambda / (1 - e^-lambda).
struct TruncatedPoisson { double lambda = 1.0; };
/// K + 1 with K ~ Poisson(lambda).
struct ShiftedPoisson { double lambda = 1.0; };
/// P(N = n) = p (1 - p)^(n - 1), n >= 1.
struct Geometric { double p = 0.5; };
/// probs[k] = P(N = k + 1).
struct Table { std::vector<double> probs; };
}  // namespace nlaw

class OffspringLaw {
 public:
  using Variant = std::variant<nlaw::Constant, nlaw::Uniform, nlaw::TruncatedPoisson, nlaw::ShiftedPoisson,
                               nlaw::Geometric, nlaw::Table>;

  OffspringLaw() : OffspringLaw(nlaw::Constant{1}) {}
  /// Validates parameters (throws DomainError) and tabulates the size-biased law.
  OffspringLaw(Variant law);
  template <class T>
    requires(!std::is_same_v<std::decay_t<T>, Variant> && std::is_constructible_v<Variant, T>)
  OffspringLaw(T&& alternative) : OffspringLaw(Variant(std::forward<T>(alternative))) {}

  const Variant& variant() const { return law_; }

  double pmf(int n) const;
  double mean() const;
  int sample(Rng& rng) const;

  /// n P(N = n) / E[N].
  double size_biased_pmf(int n) const;
  int sample_size_biased(Rng& rng) const;

  /// Smallest n_max with P(N > n_max) below 1e-17 (exact for finite supports).
  int support_upper() const;

 private:
  Variant law_;
  DiscreteSampler table_;       // for the tabulated laws
  DiscreteSampler size_biased_;  // tabulated size-biased law where no closed form
};

// ---------------------------------------------------------------------------
// Perturbation laws for Q >= 0.

namespace qlaw {
struct Constant { double q = 1.0; };
/// Q = e^Y with Y ~ Exponential(rate): Pareto(rate, 1).
struct LogExponential { double rate = 1.0; };
/// Shape / rate parameterization.
struct Gamma { double shape = 1.0; double rate = 1.0; };
}  // namespace qlaw

class PerturbationLaw {
 public:
  using Variant = std::variant<qlaw::Constant, qlaw::LogExponential, qlaw::Gamma>;

  PerturbationLaw() : PerturbationLaw(qlaw::Constant{1.0}) {}
  PerturbationLaw(Variant law);
  template <class T>
    requires(!std::is_same_v<std::decay_t<T>, Variant> && std::is_constructible_v<Variant, T>)
  PerturbationLaw(T&& alternative) : PerturbationLaw(Variant(std::forward<T>(alternative))) {}

  const Variant& variant() const { return law_; }

  double sample(Rng& rng) const;
  /// E[Q^s]; +inf when the moment diverges.
  double moment(double s) const;
  /// q when Q is degenerate at q.
  std::optional<double> degenerate_value() const;
  /// Essential infimum of Q.
  double lower_bound() const;

 private:
  Variant law_;
};

/// Gamma(shape, rate) variate.
double sample_gamma(Rng& rng, double shape, double rate);
/// Poisson(mean) variate.
int sample_poisson(Rng& rng, double mean);

}  // namespace wbis
