#pragma once

#include "dss/belief.hpp"
#include "dss/dss.hpp"
#include "dss/fhts.hpp"
#include "dss/policy_generator.hpp"

namespace dss {

/// Thompson sampling: solve one posterior draw and act greedily in it. Uses the
/// same stream as candidate 0 of dss_action, so it coincides with DSS at Np = 1.
template <typename Scalar>
Index thompson_action(const HyperState<Scalar>& omega, const PolicyGenerator& generator, const RandomSource& src) {
  return generate_policy_candidates(omega, 1, generator, src).front()(omega.state);
}

template <typename Scalar>
struct SparseSamplingDecision {
  Index action;
  Vector<Scalar> q;
  bool budget_exceeded = false;
};

namespace detail {

template <typename Scalar, typename Rng>
Scalar sparse_q(const HyperState<Scalar>& omega, Index a, int width, int remaining, Rng& rng);

template <typename Scalar, typename Rng>
Scalar sparse_value(const HyperState<Scalar>& omega, int width, int remaining, Rng& rng) {
  if (remaining == 0) return Scalar(0);
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  for (Index a = 0; a < omega.belief.n_actions(); ++a) best = std::max(best, sparse_q(omega, a, width, remaining, rng));
  return best;
}

template <typename Scalar, typename Rng>
Scalar sparse_q(const HyperState<Scalar>& omega, Index a, int width, int remaining, Rng& rng) {
  const auto& belief = omega.belief;
  Scalar future = 0;
  for (int c = 0; c < width; ++c) {
    const auto step = sample_transition(belief, omega.state, a, rng);
    const HyperState<Scalar> child(step.next, update_posterior(belief, omega.state, a, step.next));
    future += sparse_value(child, width, remaining - 1, rng);
  }
  return belief.discount() * (expected_reward(belief, omega.state, a) + future / static_cast<Scalar>(width));
}

}  // namespace detail

/// Kearns-style sparse sampling over the belief tree: every action, `width_c`
/// sampled next hyper-states per action, backed-up means. The deadline is
/// polled between root actions.
template <typename Scalar, typename Rng>
SparseSamplingDecision<Scalar> kearns_sparse_sampling(const HyperState<Scalar>& omega, int width_c, int horizon, Rng& rng,
                                                      std::uint64_t node_budget = kDefaultNodeBudget,
                                                      const Deadline& deadline = std::nullopt) {
  if (width_c < 1 || horizon < 1) throw std::invalid_argument("sparse sampling: width and horizon must be >= 1");
  const Index A = omega.belief.n_actions();
  const auto nodes = tree_size(static_cast<std::uint64_t>(A) * static_cast<std::uint64_t>(width_c), horizon);
  if (nodes > node_budget)
    throw NodeBudgetExceeded("sparse sampling: " + std::to_string(nodes) + " nodes exceed budget " + std::to_string(node_budget));
  Vector<Scalar> q = Vector<Scalar>::Constant(A, -std::numeric_limits<Scalar>::infinity());
  bool exceeded = false;
  for (Index a = 0; a < A; ++a) {
    if (a > 0 && deadline_passed(deadline)) {
      exceeded = true;
      break;
    }
    q(a) = detail::sparse_q(omega, a, width_c, horizon, rng);
  }
  return {argmax_lowest(q), std::move(q), exceeded};
}

}  // namespace dss
