#include "wbis/tilt_strategies.hpp"

#include <algorithm>
#include <cmath>

#include "samplers.hpp"
#include "wbis/error.hpp"

namespace wbis {

namespace {

BranchingVector iid_vector(int n, double q, const std::function<double()>& draw) {
  BranchingVector v;
  v.n = n;
  v.q = q;
  v.weights.resize(static_cast<std::size_t>(n));
  for (auto& c : v.weights) c = draw();
  return v;
}

std::vector<double> uniform_weights(int n) {
  return std::vector<double>(static_cast<std::size_t>(n), 1.0 / n);
}

}  // namespace

std::optional<MixtureIngredients> mixture_ingredients(const ModelSpec& model, const TiltContext& ctx) {
  if (const auto* m = model.get_if<model::NonBranchingExp>()) {
    MixtureIngredients ing;
    ing.sample_tilted_n = [](Rng&) { return 1; };
    ing.component_weights = uniform_weights;
    ing.sample_tilted_marginal = [ctx](std::size_t, int, Rng& rng) {
      return detail::exp_difference(rng, ctx.tilted_theta, ctx.tilted_lambda);
    };
    ing.complete = [m = *m](std::size_t, int, double c, Rng& rng) {
      BranchingVector v;
      v.n = 1;
      v.weights = {c};
      v.q = m.q_law.sample(rng);
      return v;
    };
    return ing;
  }
  if (const auto* m = model.get_if<model::BranchingMM1>()) {
    MixtureIngredients ing;
    ing.sample_tilted_n = [lambda = m->poisson_param](Rng& rng) { return sample_poisson(rng, lambda) + 1; };
    ing.component_weights = uniform_weights;
    ing.sample_tilted_marginal = [ctx](std::size_t, int, Rng& rng) {
      return detail::exp_difference(rng, ctx.tilted_theta, ctx.tilted_lambda);
    };
    ing.complete = [m = *m](std::size_t i, int n, double c, Rng& rng) {
      BranchingVector v = iid_vector(n, 0.0, [&] { return detail::exp_difference(rng, m.theta, m.lambda); });
      v.weights[i] = c;
      v.q = std::exp(rng.exponential(m.y_rate));
      return v;
    };
    return ing;
  }
  if (const auto* m = model.get_if<model::IdenticalPareto>()) {
    MixtureIngredients ing;
    ing.sample_tilted_n = [law = m->n_law](Rng& rng) { return law.sample_size_biased(rng); };
    ing.component_weights = uniform_weights;
    ing.sample_tilted_marginal = [m = *m, ctx](std::size_t, int, Rng& rng) {
      return detail::sample_power_law(rng, ctx.tilted_pareto_shape, m.b, m.upper);
    };
    ing.complete = [m = *m](std::size_t, int n, double c, Rng& rng) {
      BranchingVector v;
      v.n = n;
      v.weights.assign(static_cast<std::size_t>(n), c);
      v.q = m.q_law.sample(rng);
      return v;
    };
    return ing;
  }
  return std::nullopt;
}

BranchingVector tilt_mixture_sample(const MixtureIngredients& ing, Rng& rng) {
  const int n = ing.sample_tilted_n(rng);
  const auto weights = ing.component_weights(n);
  const auto i = static_cast<std::size_t>(DiscreteSampler(weights, 0).sample(rng));
  const double c = ing.sample_tilted_marginal(i, n, rng);
  return ing.complete(i, n, c, rng);
}

BranchingVector tilt_mixture_sample(const ModelSpec& model, const TiltContext& ctx, Rng& rng) {
  const auto ing = mixture_ingredients(model, ctx);
  if (!ing) {
    throw Error(ErrorCode::MissingIngredients, "no mixture representation for model " + model.name());
  }
  return tilt_mixture_sample(*ing, rng);
}

// ---------------------------------------------------------------------------

std::optional<ConditionalIngredients> conditional_ingredients(const ModelSpec& model, const TiltContext& ctx) {
  ConditionalIngredients ing;
  if (const auto* m = model.get_if<model::DiscreteTable>()) {
    const int n = static_cast<int>(m->outcomes.front().weights.size());
    ing.sample_tilted_n = [n](Rng&) { return n; };
    ing.sample_given_n = [model](int, Rng& rng) { return sample_p(model, rng); };
    return ing;
  }
  if (const auto* m = model.get_if<model::IdenticalPareto>()) {
    ing.sample_tilted_n = [law = m->n_law](Rng& rng) { return law.sample_size_biased(rng); };
    ing.sample_given_n = [m = *m](int n, Rng& rng) {
      BranchingVector v;
      v.n = n;
      v.weights.assign(static_cast<std::size_t>(n), detail::sample_power_law(rng, m.a, m.b, m.upper));
      v.q = m.q_law.sample(rng);
      return v;
    };
    return ing;
  }
  if (const auto* m = model.get_if<model::BranchingMM1>()) {
    ing.sample_tilted_n = [lambda = m->poisson_param](Rng& rng) { return sample_poisson(rng, lambda) + 1; };
    ing.sample_given_n = [m = *m](int n, Rng& rng) {
      BranchingVector v = iid_vector(n, 0.0, [&] { return detail::exp_difference(rng, m.theta, m.lambda); });
      v.q = std::exp(rng.exponential(m.y_rate));
      return v;
    };
    return ing;
  }
  if (const auto* m = model.get_if<model::NonBranchingExp>()) {
    ing.sample_tilted_n = [](Rng&) { return 1; };
    ing.sample_given_n = [m = *m](int, Rng& rng) {
      return iid_vector(1, m.q_law.sample(rng), [&] { return detail::exp_difference(rng, m.theta, m.lambda); });
    };
    return ing;
  }
  if (const auto* m = model.get_if<model::SimplexGamma>()) {
    const double kappa = model.simplex_exponent();
    const double r = ctx.alpha / kappa;
    std::vector<double> probs;
    for (int n = 1; n <= m->n_law.support_upper(); ++n) {
      probs.push_back(m->n_law.pmf(n) *
                      std::exp(std::lgamma(1.0 + r) + std::lgamma(n + 1.0) - std::lgamma(n + r)));
    }
    ing.sample_tilted_n = [table = DiscreteSampler(probs, 1)](Rng& rng) { return table.sample(rng); };
    ing.sample_given_n = [m = *m, kappa](int n, Rng& rng) {
      const double big_b = sample_gamma(rng, m.a, m.b);
      const auto betas = detail::dirichlet_ones(rng, n);
      BranchingVector v;
      v.n = n;
      v.weights.resize(betas.size());
      for (std::size_t i = 0; i < betas.size(); ++i) v.weights[i] = big_b * std::pow(betas[i], 1.0 / kappa);
      v.q = m.q_mode == model::SimplexQMode::TwoTimesB ? 2.0 * big_b : m.q_law.sample(rng);
      return v;
    };
    return ing;
  }
  if (const auto* m = model.get_if<model::ExpPoisson>()) {
    ing.sample_tilted_n = [table = ctx.tilted_table](Rng& rng) { return table.sample(rng); };
    ing.sample_given_n = [m = *m](int n, Rng& rng) {
      BranchingVector v;
      v.n = n;
      v.weights.assign(static_cast<std::size_t>(n), sample_gamma(rng, n, m.lambda + 1.0));
      v.q = m.q_law.sample(rng);
      return v;
    };
    return ing;
  }
  return std::nullopt;
}

TiltDraw tilt_ar_bounded_sample(const ConditionalIngredients& ing, double alpha,
                                const CoordinateBounds& bounds, Rng& rng, std::uint64_t max_attempts) {
  const int n = ing.sample_tilted_n(rng);
  const auto b_i = bounds(n);
  if (b_i.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::InvalidArgument, "need one bound per coordinate");
  }
  const double b = BranchingVector{n, 0.0, b_i}.spine_weight_sum(alpha);
  for (std::uint64_t attempt = 1; attempt <= max_attempts; ++attempt) {
    BranchingVector v = ing.sample_given_n(n, rng);
    for (std::size_t i = 0; i < v.weights.size(); ++i) {
      if (v.weights[i] > b_i[i]) {
        throw Error(ErrorCode::NonBoundedModel, "a weight exceeded its stated bound");
      }
    }
    const double d = v.spine_weight_sum(alpha);
    if (rng.uniform() * b < d) return {std::move(v), attempt};
  }
  throw Error(ErrorCode::BudgetExceeded, "acceptance-rejection exceeded its attempt budget");
}

TiltDraw tilt_ar_sumbound_sample(const ConditionalIngredients& ing, double alpha,
                                 const std::function<double(int)>& bound, double pareto_shape, Rng& rng,
                                 std::uint64_t max_attempts) {
  if (!(pareto_shape > 0.0)) throw Error(ErrorCode::InvalidArgument, "Pareto shape must be > 0");
  const int n = ing.sample_tilted_n(rng);
  const double b = bound(n);
  for (std::uint64_t attempt = 1; attempt <= max_attempts; ++attempt) {
    BranchingVector v = ing.sample_given_n(n, rng);
    const double d = v.spine_weight_sum(alpha);
    if (d > b * (1.0 + 1e-12)) {
      throw Error(ErrorCode::SumBoundViolated, "D exceeded the stated sum bound");
    }
    const double z = std::pow(rng.uniform(), -1.0 / pareto_shape);
    if (d > 0.0 && z > std::pow(b / d, 1.0 / pareto_shape)) return {std::move(v), attempt};
  }
  throw Error(ErrorCode::BudgetExceeded, "acceptance-rejection exceeded its attempt budget");
}

std::optional<CoordinateBounds> coordinate_bounds(const ModelSpec& model) {
  if (const auto* m = model.get_if<model::DiscreteTable>()) {
    std::vector<double> top(m->outcomes.front().weights.size(), 0.0);
    for (const auto& o : m->outcomes) {
      for (std::size_t i = 0; i < top.size(); ++i) top[i] = std::max(top[i], o.weights[i]);
    }
    return [top](int) { return top; };
  }
  if (const auto* m = model.get_if<model::IdenticalPareto>(); m && std::isfinite(m->upper)) {
    return [u = m->upper](int n) { return std::vector<double>(static_cast<std::size_t>(n), u); };
  }
  return std::nullopt;
}

}  // namespace wbis
