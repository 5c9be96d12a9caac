#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <type_traits>
#include <string>
#include <variant>
#include <vector>

#include "wbis/laws.hpp"
#include "wbis/rng.hpp"

namespace wbis {

/// One realization of (N, Q, C_1, ..., C_N).
struct BranchingVector {
  int n = 0;
  double q = 0.0;
  std::vector<double> weights;

  /// D = sum_i C_i^alpha, with 0^alpha = 0.
  double spine_weight_sum(double alpha) const;
};

struct TiltContext;

namespace model {

/// N = 1, C = e^(chi - tau), chi ~ Exp(theta), tau ~ Exp(lambda). With Q = 1
/// this is the M/M/1 waiting time.
struct NonBranchingExp {
  double theta = 2.0;
  double lambda = 1.0;
  PerturbationLaw q_law;
};

/// i.i.d. C_i = e^(chi_i - tau_i), N = K | K > 0 with K ~ Poisson(poisson_param),
/// Q = e^Y with Y ~ Exp(y_rate); N, Q and the C's mutually independent.
struct BranchingMM1 {
  double theta = 5.0;
  double lambda = 0.25;
  double poisson_param = 2.0;
  double y_rate = 9.0;
};

/// C_i = C for all i, C ~ Pareto(shape a, scale b), optionally truncated to
/// [b, upper]; N, Q independent of C.
struct IdenticalPareto {
  double a = 4.0;
  double b = 0.5;
  OffspringLaw n_law{nlaw::Constant{2}};
  PerturbationLaw q_law;
  double upper = std::numeric_limits<double>::infinity();
};

/// C_i = C ~ Exp(lambda), N | C ~ Poisson(C) + 1, Q independent.
struct ExpPoisson {
  double lambda = 3.0;
  PerturbationLaw q_law;
};

/// Q ~ Gamma(2, beta), N ~ Geometric(1/2) on {1, 2, ...}, C_i = C with
/// C | (N, Q) ~ Gamma(N + 1, 2Q).
struct GammaGeometric {
  double beta = 0.1;
};

enum class SimplexQMode { Independent, TwoTimesB };

/// B ~ Gamma(a, b) (shape, rate), (beta_i) ~ Dirichlet(1, ..., 1) given N,
/// C_i = B beta_i^(1/kappa) where E[B^kappa] = 1.
struct SimplexGamma {
  double a = 0.25;
  double b = 1.0;
  OffspringLaw n_law{nlaw::Uniform{1, 3}};
  SimplexQMode q_mode = SimplexQMode::TwoTimesB;
  PerturbationLaw q_law;  // used when q_mode == Independent
};

struct DiscreteOutcome {
  std::vector<double> weights;
  double q = 1.0;
};

/// Constant N with finitely many (C_1, ..., C_N, Q) outcomes.
struct DiscreteTable {
  std::vector<DiscreteOutcome> outcomes;
  std::vector<double> probs;
};

/// User-supplied law. Only sample_p is mandatory; missing moment hooks fall
/// back to Monte Carlo, a missing tilt hook makes tilted sampling fail with
/// NoTiltAvailable.
struct Custom {
  std::string name = "custom";
  std::function<BranchingVector(Rng&)> sample_p;
  std::function<BranchingVector(const TiltContext&, Rng&)> sample_tilted;
  std::function<double(double)> mellin;
  std::function<double(double)> mellin_derivative;
  double domain_upper = std::numeric_limits<double>::infinity();
  bool q_independent = false;
  std::optional<double> degenerate_q;
  std::optional<double> mean_offspring;
  std::optional<double> q_lower_bound;
};

}  // namespace model

/// Immutable description of the law of the branching vector.
class ModelSpec {
 public:
  using Variant = std::variant<model::NonBranchingExp, model::BranchingMM1, model::IdenticalPareto,
                               model::ExpPoisson, model::GammaGeometric, model::SimplexGamma,
                               model::DiscreteTable, model::Custom>;

  /// Validates parameters; throws DomainError when out of range.
  ModelSpec(Variant v);
  template <class T>
    requires(!std::is_same_v<std::decay_t<T>, Variant> && std::is_constructible_v<Variant, T>)
  ModelSpec(T&& alternative) : ModelSpec(Variant(std::forward<T>(alternative))) {}

  const Variant& variant() const { return v_; }
  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&v_);
  }

  std::string name() const;

  /// Q independent of (N, C_1, C_2, ...).
  bool q_independent() const;
  /// q when Q is degenerate.
  std::optional<double> degenerate_q() const;
  /// Essential infimum of Q.
  double q_lower_bound() const;
  double mean_offspring() const;
  bool has_analytic_mellin() const;

  /// Open interval on which E[sum C_i^s] is finite.
  double domain_lower() const { return domain_lower_; }
  double domain_upper() const { return domain_upper_; }

  /// kappa with E[B^kappa] = 1 for SimplexGamma, 0 otherwise.
  double simplex_exponent() const { return simplex_exponent_; }

 private:
  Variant v_;
  double domain_lower_ = 0.0;
  double domain_upper_ = std::numeric_limits<double>::infinity();
  double simplex_exponent_ = 0.0;
};

/// Cramer-Lundberg root, drift and the per-model parameters of the tilted law.
struct TiltContext {
  double alpha = 0.0;
  double mu = 0.0;

  // Exponential pair (NonBranchingExp, BranchingMM1): chi ~ Exp(theta - alpha),
  // tau ~ Exp(lambda + alpha).
  double tilted_theta = 0.0;
  double tilted_lambda = 0.0;
  // IdenticalPareto shape a - alpha.
  double tilted_pareto_shape = 0.0;
  // SimplexGamma shape a + alpha.
  double tilted_gamma_shape = 0.0;
  // DiscreteTable reweighted pmf; ExpPoisson law of the tilted N.
  std::vector<double> tilted_probs;
  DiscreteSampler tilted_table;
};

/// Estimate with standard error; se == 0 for closed-form values.
struct MomentEstimate {
  double value = 0.0;
  double std_err = 0.0;
  std::uint64_t n = 0;
};

/// E[sum_{i<=N} C_i^s]. Throws DomainError outside the convergence region.
double mellin(const ModelSpec& model, double s);
MomentEstimate mellin_estimate(const ModelSpec& model, double s);

/// mu = E[sum C_i^alpha log C_i] (0 log 0 = 0).
double drift_mu(const ModelSpec& model, double alpha);

/// Finds alpha with E[sum C_i^alpha] = 1 on the increasing branch of the
/// (convex) moment function. Throws NoRoot or NonPositiveDrift.
TiltContext solve_alpha(const ModelSpec& model);

/// Context for a caller-chosen alpha (no root check). Used for override
/// testing and for models like discrete_pair whose root has mu <= 0.
TiltContext make_context(const ModelSpec& model, double alpha);

/// One draw of the branching vector under the original measure.
BranchingVector sample_p(const ModelSpec& model, Rng& rng);

/// One draw from the spine law, whose density against P is D.
BranchingVector sample_tilted(const ModelSpec& model, const TiltContext& ctx, Rng& rng);

/// Picks child j (1-based) with probability C_j^alpha / D. Throws
/// ZeroSpineWeight when D = 0.
std::uint32_t choose_spine_child(const BranchingVector& v, double alpha, Rng& rng);

struct QEfficiencyReport {
  double e_q_alpha = 0.0;
  double e_q_2alpha = 0.0;
  double e_q_2alpha_over_d = 0.0;
  /// The moment condition that gives bounded relative error for the
  /// estimator this model would use: E[Q^2alpha] for independent Q,
  /// E[Q^2alpha / D] otherwise.
  bool finite = false;
  bool analytic = false;
  std::vector<std::string> warnings;
};

/// Advisory check of the moment conditions for bounded relative error.
QEfficiencyReport q_efficiency_check(const ModelSpec& model, const TiltContext& ctx);

}  // namespace wbis
