#pragma once

#include <cmath>
#include <vector>

#include "wbis/rng.hpp"

namespace wbis::detail {

/// Density proportional to x^(-shape-1) on [b, upper].
inline double sample_power_law(Rng& rng, double shape, double b, double upper) {
  const double u = rng.uniform();
  if (!std::isfinite(upper)) return b * std::pow(u, -1.0 / shape);
  if (std::abs(shape) < 1e-12) return b * std::pow(upper / b, u);
  const double lo = std::pow(b, -shape), hi = std::pow(upper, -shape);
  return std::pow(lo - u * (lo - hi), -1.0 / shape);
}

/// e^(chi - tau), chi ~ Exp(chi_rate), tau ~ Exp(tau_rate).
inline double exp_difference(Rng& rng, double chi_rate, double tau_rate) {
  return std::exp(rng.exponential(chi_rate) - rng.exponential(tau_rate));
}

inline std::vector<double> dirichlet_ones(Rng& rng, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  double total = 0.0;
  for (auto& e : out) {
    e = rng.exponential(1.0);
    total += e;
  }
  for (auto& e : out) e /= total;
  return out;
}

}  // namespace wbis::detail
