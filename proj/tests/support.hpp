#pragma once

#include "dss/mdp.hpp"
#include "dss/random.hpp"

#include <random>

namespace dss::testing {

// Dense random model; rows from normalized exponentials.
inline Mdp<double> random_mdp(Index S, Index A, double gamma, Engine& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix<double> P(S * A, S);
  Matrix<double> R(S, A);
  for (Index r = 0; r < S * A; ++r) {
    for (Index j = 0; j < S; ++j) P(r, j) = expo(rng);
    P.row(r) /= P.row(r).sum();
  }
  for (Index s = 0; s < S; ++s)
    for (Index a = 0; a < A; ++a) R(s, a) = unit(rng);
  return Mdp<double>(P, R, gamma);
}

}  // namespace dss::testing
