#pragma once

#include <cmath>
#include <stdexcept>

namespace dss {

/// Largest K >= 1 with K <= (sqrt(ln(Np/delta) / (8 Ns)) - gamma^K) / (eps0 + C),
/// or 1 when no K qualifies. K*(eps0+C) + gamma^K is convex in K, so the
/// feasible set is an interval and the scan can stop at the first failure past
/// it.
inline int suggest_k(int n_policies, int n_samples, double delta, double gamma, double eps0_plus_c, int max_k = 1'000'000) {
  if (n_policies < 1 || n_samples < 1) throw std::invalid_argument("suggest_k: counts must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("suggest_k: delta must lie in (0,1)");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("suggest_k: gamma must lie in [0,1)");
  if (!(eps0_plus_c > 0.0)) throw std::invalid_argument("suggest_k: eps0_plus_c must be positive");
  const double budget = std::sqrt(std::log(n_policies / delta) / (8.0 * n_samples));
  int best = 0;
  double gamma_k = 1.0;
  for (int k = 1; k <= max_k; ++k) {
    gamma_k *= gamma;
    const bool feasible = k <= (budget - gamma_k) / eps0_plus_c;
    if (feasible) {
      best = k;
    } else if (best > 0 || k * eps0_plus_c > budget) {
      break;
    }
  }
  return best > 0 ? best : 1;
}

}  // namespace dss
