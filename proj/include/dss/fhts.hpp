#pragma once

#include "dss/belief.hpp"

#include <cstdint>
#include <limits>
#include <stdexcept>

namespace dss {

inline constexpr std::uint64_t kDefaultNodeBudget = 10'000'000;

class NodeBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// sum_{d=1..depth} branching^d, saturating at uint64 max.
inline std::uint64_t tree_size(std::uint64_t branching, int depth) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t level = 1;
  std::uint64_t total = 0;
  for (int d = 0; d < depth; ++d) {
    if (branching != 0 && level > kMax / branching) return kMax;
    level *= branching;
    if (total > kMax - level) return kMax;
    total += level;
  }
  return total;
}

namespace detail {

template <typename Scalar>
Scalar fhts_q(const HyperState<Scalar>& omega, Index a, int remaining);

template <typename Scalar>
Scalar fhts_value(const HyperState<Scalar>& omega, int remaining) {
  if (remaining == 0) return Scalar(0);
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  for (Index a = 0; a < omega.belief.n_actions(); ++a) best = std::max(best, fhts_q(omega, a, remaining));
  return best;
}

template <typename Scalar>
Scalar fhts_q(const HyperState<Scalar>& omega, Index a, int remaining) {
  const auto& belief = omega.belief;
  const Vector<Scalar> nu = marginal_next_state(belief, omega.state, a);
  Scalar future = 0;
  for (Index next = 0; next < belief.n_states(); ++next) {
    if (nu(next) <= Scalar(0)) continue;
    const HyperState<Scalar> child(next, update_posterior(belief, omega.state, a, next));
    future += nu(next) * fhts_value(child, remaining - 1);
  }
  return belief.discount() * (expected_reward(belief, omega.state, a) + future);
}

inline void check_fhts_budget(Index n_states, Index n_actions, int remaining, std::uint64_t node_budget) {
  const auto nodes = tree_size(static_cast<std::uint64_t>(n_states * n_actions), remaining);
  if (nodes > node_budget)
    throw NodeBudgetExceeded("fhts: " + std::to_string(nodes) + " nodes exceed budget " + std::to_string(node_budget));
}

}  // namespace detail

/// Exact Bayes-adaptive value by full expansion of the belief tree over every
/// action and next state, from `depth` down to `horizon`. Rewards along the way
/// are weighted gamma^1, gamma^2, ... relative to the node.
template <typename Scalar>
Scalar fhts(const HyperState<Scalar>& omega, int depth, int horizon, std::uint64_t node_budget = kDefaultNodeBudget) {
  if (depth < 0 || depth > horizon) throw std::invalid_argument("fhts: need 0 <= depth <= horizon");
  detail::check_fhts_budget(omega.belief.n_states(), omega.belief.n_actions(), horizon - depth, node_budget);
  return detail::fhts_value(omega, horizon - depth);
}

template <typename Scalar>
struct FhtsDecision {
  Index action;
  Vector<Scalar> q;
};

/// Root argmax of the exact tree, lowest-index tie-break.
template <typename Scalar>
FhtsDecision<Scalar> fhts_action(const HyperState<Scalar>& omega, int horizon, std::uint64_t node_budget = kDefaultNodeBudget) {
  if (horizon < 1) throw std::invalid_argument("fhts_action: horizon must be >= 1");
  detail::check_fhts_budget(omega.belief.n_states(), omega.belief.n_actions(), horizon, node_budget);
  Vector<Scalar> q(omega.belief.n_actions());
  for (Index a = 0; a < q.size(); ++a) q(a) = detail::fhts_q(omega, a, horizon);
  return {argmax_lowest(q), std::move(q)};
}

}  // namespace dss
