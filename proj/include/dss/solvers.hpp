#pragma once

#include "dss/mdp.hpp"

#include <optional>
#include <random>
#include <stdexcept>

namespace dss {

inline constexpr double kDefaultValueTolerance = 1e-6;
inline constexpr double kDefaultPolicyEvalTolerance = 1e-4;
inline constexpr int kMaxPolicyIterations = 10'000;

/// Optimal values by value iteration. The returned table has Bellman residual
/// at most `tolerance`.
template <typename Scalar>
ValueTable<Scalar> value_iteration(const Mdp<Scalar>& mdp, Scalar tolerance = Scalar(kDefaultValueTolerance)) {
  if (!(tolerance > Scalar(0))) throw std::invalid_argument("value_iteration: tolerance must be positive");
  ValueTable<Scalar> v = ValueTable<Scalar>::Zero(mdp.n_states());
  for (;;) {
    ValueTable<Scalar> next = q_values(mdp, v).rowwise().maxCoeff();
    const Scalar change = (next - v).cwiseAbs().maxCoeff();
    v.swap(next);
    // residual(v_{k+1}) <= gamma * |v_{k+1} - v_k|
    if (mdp.discount() * change <= tolerance) return v;
  }
}

template <typename Scalar>
DeterministicPolicy greedy_policy(const Mdp<Scalar>& mdp, const ValueTable<Scalar>& v) {
  if (v.size() != mdp.n_states()) throw std::invalid_argument("greedy_policy: value table size mismatch");
  const Matrix<Scalar> q = q_values(mdp, v);
  DeterministicPolicy policy(mdp.n_states(), 0);
  for (Index s = 0; s < mdp.n_states(); ++s) policy[s] = argmax_lowest(q.row(s));
  return policy;
}

/// Kernel P_pi (S x S) and reward vector R_pi induced by a policy.
template <typename Scalar>
std::pair<Matrix<Scalar>, Vector<Scalar>> policy_chain(const Mdp<Scalar>& mdp, const DeterministicPolicy& policy) {
  const Index S = mdp.n_states();
  if (policy.n_states() != S) throw std::invalid_argument("policy size does not match the mdp");
  Matrix<Scalar> kernel(S, S);
  Vector<Scalar> reward(S);
  for (Index s = 0; s < S; ++s) {
    const Index a = policy(s);
    if (a < 0 || a >= mdp.n_actions()) throw std::invalid_argument("policy action out of range");
    kernel.row(s) = mdp.transition(s, a);
    reward(s) = mdp.reward(s, a);
  }
  return {std::move(kernel), std::move(reward)};
}

/// Evaluation horizon: a number of steps, or unbounded.
struct Horizon {
  std::optional<int> steps;

  static Horizon unbounded() { return {}; }
  static Horizon of(int n) {
    if (n < 0) throw std::invalid_argument("horizon must be non-negative");
    return {n};
  }
};

/// Value of a fixed policy.
///
/// Bounded horizon T: the exact T-step return sum_{k=1..T} gamma^k r_k, so the
/// first reward already carries one discount factor. Unbounded: the fixed point
/// of V = R_pi + gamma P_pi V (first reward undiscounted), which is what value
/// iteration computes. The two differ by exactly one factor of gamma in the limit.
template <typename Scalar>
ValueTable<Scalar> policy_value(const Mdp<Scalar>& mdp, const DeterministicPolicy& policy, Horizon horizon,
                                Scalar tolerance = Scalar(kDefaultValueTolerance)) {
  const auto [kernel, reward] = policy_chain(mdp, policy);
  const Scalar gamma = mdp.discount();
  const Index S = mdp.n_states();
  if (horizon.steps) {
    ValueTable<Scalar> v = ValueTable<Scalar>::Zero(S);
    for (int k = 0; k < *horizon.steps; ++k) v = gamma * (reward + kernel * v);
    return v;
  }
  if (!(tolerance > Scalar(0))) throw std::invalid_argument("policy_value: tolerance must be positive");
  const Matrix<Scalar> system = Matrix<Scalar>::Identity(S, S) - gamma * kernel;
  ValueTable<Scalar> v = system.partialPivLu().solve(reward);
  // polish the direct solve until the fixed-point residual is under tolerance
  for (int sweep = 0; sweep < 1000; ++sweep) {
    ValueTable<Scalar> next = reward + gamma * kernel * v;
    const Scalar residual = (next - v).cwiseAbs().maxCoeff();
    v.swap(next);
    if (residual <= tolerance) break;
  }
  return v;
}

/// Policy iteration. Evaluation is iterative and warm-started, stopping when the
/// evaluation residual drops below `eval_tolerance`; improvement switches an
/// action only when the current one is not (tie-)maximal, so the result is a
/// fixed point of the lowest-index greedy rule.
template <typename Scalar>
DeterministicPolicy policy_iteration(const Mdp<Scalar>& mdp, Scalar eval_tolerance = Scalar(kDefaultPolicyEvalTolerance)) {
  if (!(eval_tolerance > Scalar(0))) throw std::invalid_argument("policy_iteration: eval_tolerance must be positive");
  const Index S = mdp.n_states();
  const Scalar gamma = mdp.discount();
  DeterministicPolicy policy(S, 0);
  ValueTable<Scalar> v = ValueTable<Scalar>::Zero(S);
  ValueTable<Scalar> next(S);
  for (int iteration = 0; iteration < kMaxPolicyIterations; ++iteration) {
    const auto [kernel, reward] = policy_chain(mdp, policy);
    for (;;) {
      next.noalias() = gamma * kernel * v;
      next += reward;
      const Scalar residual = (next - v).cwiseAbs().maxCoeff();
      v.swap(next);
      if (residual <= eval_tolerance) break;
    }
    const Matrix<Scalar> q = q_values(mdp, v);
    bool stable = true;
    for (Index s = 0; s < S; ++s) {
      const Scalar best = q.row(s).maxCoeff();
      if (q(s, policy(s)) >= best - tie_tolerance(best)) continue;
      policy[s] = argmax_lowest(q.row(s));
      stable = false;
    }
    if (stable) break;
  }
  return policy;
}

/// Draws a next state from a probability row.
template <typename Row, typename Rng>
Index sample_index(const Row& probabilities, Rng& rng) {
  using Scalar = typename Row::Scalar;
  std::uniform_real_distribution<Scalar> uniform(Scalar(0), probabilities.sum());
  Scalar u = uniform(rng);
  const Index n = probabilities.size();
  Index last_positive = 0;
  for (Index i = 0; i < n; ++i) {
    if (probabilities(i) <= Scalar(0)) continue;
    last_positive = i;
    if (u < probabilities(i)) return i;
    u -= probabilities(i);
  }
  return last_positive;
}

/// Trajectory-based real-time dynamic programming. Runs `n_trajectories` greedy
/// rollouts of `depth` steps from `start_state`, backing up every visited state
/// against a value table that starts at zero. Visited states get the greedy
/// action of the final table; unvisited states keep action 0.
template <typename Scalar, typename Rng>
DeterministicPolicy rtdp_policy(const Mdp<Scalar>& mdp, int depth, Index start_state, int n_trajectories, Rng& rng) {
  if (depth < 1) throw std::invalid_argument("rtdp_policy: depth must be >= 1");
  if (n_trajectories < 1) throw std::invalid_argument("rtdp_policy: need at least one trajectory");
  if (start_state < 0 || start_state >= mdp.n_states()) throw std::invalid_argument("rtdp_policy: bad start state");
  const Index S = mdp.n_states();
  const Scalar gamma = mdp.discount();
  ValueTable<Scalar> v = ValueTable<Scalar>::Zero(S);
  std::vector<bool> visited(static_cast<std::size_t>(S), false);
  for (int trajectory = 0; trajectory < n_trajectories; ++trajectory) {
    Index s = start_state;
    for (int step = 0; step < depth; ++step) {
      const Vector<Scalar> q = mdp.rewards().row(s).transpose() + gamma * (mdp.transitions_from(s) * v);
      const Index a = argmax_lowest(q);
      v(s) = q(a);
      visited[static_cast<std::size_t>(s)] = true;
      s = sample_index(mdp.transition(s, a), rng);
    }
  }
  DeterministicPolicy policy(S, 0);
  for (Index s = 0; s < S; ++s) {
    if (!visited[static_cast<std::size_t>(s)]) continue;
    const Vector<Scalar> q = mdp.rewards().row(s).transpose() + gamma * (mdp.transitions_from(s) * v);
    policy[s] = argmax_lowest(q);
  }
  return policy;
}

/// max_{s,a} || P1(.|s,a) - P2(.|s,a) ||_1, in [0, 2].
template <typename Scalar>
Scalar mdp_distance(const Mdp<Scalar>& m1, const Mdp<Scalar>& m2) {
  if (m1.n_states() != m2.n_states() || m1.n_actions() != m2.n_actions())
    throw std::invalid_argument("mdp_distance: dimension mismatch");
  return (m1.transitions() - m2.transitions()).cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace dss
