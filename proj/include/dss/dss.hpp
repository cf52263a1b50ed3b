#pragma once

#include "dss/belief.hpp"
#include "dss/policy_generator.hpp"
#include "dss/random.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <optional>
#include <stdexcept>
#include <vector>

namespace dss {

using Clock = std::chrono::steady_clock;
using Deadline = std::optional<Clock::time_point>;

inline bool deadline_passed(const Deadline& deadline) { return deadline && Clock::now() > *deadline; }

/// Deeper, sparser sampling: the belief tree branches on Thompson-sampled
/// policies run for `steps_per_stage` steps instead of on primitive actions.
struct DssConfig {
  int n_stages = 1;              // H
  int steps_per_stage = 1;       // K
  int n_policies = 1;            // candidates per node
  int n_samples_per_policy = 1;  // rollouts per candidate
  PolicyGenerator generator{};
  std::uint64_t rng_seed = 0;
  /// Children of one candidate reuse a single candidate set generated at the
  /// first child instead of sampling their own.
  bool share_candidates = false;
  /// Evaluate root candidates on separate threads. Results match serial runs.
  bool parallel = false;

  int total_depth() const { return n_stages * steps_per_stage; }

  void validate() const {
    if (n_stages < 1 || steps_per_stage < 1) throw std::invalid_argument("dss: stages and steps per stage must be >= 1");
    if (n_policies < 1 || n_samples_per_policy < 1) throw std::invalid_argument("dss: need at least one policy and one sample");
  }
};

template <typename Scalar>
struct QEstimate {
  PolicyCandidate candidate;
  Scalar value;
  /// Mean L1 distance between the node belief and the belief after each
  /// rollout segment.
  Scalar belief_drift = 0;
};

template <typename Scalar>
struct RolloutResult {
  Scalar discounted_return;
  HyperState<Scalar> end;
};

/// Runs `policy` for k_steps under the evolving posterior predictive, updating
/// the belief after every transition. The j-th reward is weighted
/// discount_prefix * gamma^j.
template <typename Scalar, typename Rng>
RolloutResult<Scalar> rollout_policy(const HyperState<Scalar>& omega, const PolicyCandidate& policy, int k_steps,
                                     Scalar discount_prefix, Rng& rng) {
  if (k_steps < 1) throw std::invalid_argument("rollout_policy: k_steps must be >= 1");
  const Scalar gamma = omega.belief.discount();
  Index s = omega.state;
  DirichletBelief<Scalar> belief = omega.belief;
  Scalar weight = discount_prefix;
  Scalar total = 0;
  for (int k = 0; k < k_steps; ++k) {
    const Index a = policy(s);
    const auto step = sample_transition(belief, s, a, rng);
    weight *= gamma;
    total += weight * step.reward;
    belief = update_posterior(belief, s, a, step.next);
    s = step.next;
  }
  return {total, HyperState<Scalar>(s, std::move(belief))};
}

namespace detail {

using CandidateCache = std::optional<std::vector<PolicyCandidate>>;

template <typename Scalar>
Scalar dss_node(const HyperState<Scalar>& omega, int depth_h, const DssConfig& cfg, const RandomSource& src,
                CandidateCache* cache);

/// Q(omega, pi) averaged over Ns (rollout, recursive dss) samples.
template <typename Scalar>
QEstimate<Scalar> evaluate_candidate(const HyperState<Scalar>& omega, int depth_h, const DssConfig& cfg,
                                     const RandomSource& src, int index, PolicyCandidate candidate) {
  const Scalar prefix = std::pow(omega.belief.discount(), static_cast<Scalar>(depth_h));
  const int child_depth = depth_h + cfg.steps_per_stage;
  CandidateCache shared;
  Scalar q = 0;
  Scalar drift = 0;
  for (int j = 0; j < cfg.n_samples_per_policy; ++j) {
    const RandomSource branch = src.child({kRolloutStream, static_cast<std::uint64_t>(index), static_cast<std::uint64_t>(j)});
    Engine rng = branch.engine();
    auto rollout = rollout_policy(omega, candidate, cfg.steps_per_stage, prefix, rng);
    drift += belief_l1_distance(omega.belief, rollout.end.belief);
    q += rollout.discounted_return +
         dss_node(rollout.end, child_depth, cfg, branch.child(kChildNodeStream), cfg.share_candidates ? &shared : nullptr);
  }
  const auto n = static_cast<Scalar>(cfg.n_samples_per_policy);
  return {std::move(candidate), q / n, drift / n};
}

template <typename Scalar>
Scalar dss_node(const HyperState<Scalar>& omega, int depth_h, const DssConfig& cfg, const RandomSource& src,
                CandidateCache* cache) {
  if (depth_h >= cfg.total_depth()) return Scalar(0);
  std::vector<PolicyCandidate> candidates;
  if (cache && cache->has_value()) {
    candidates = **cache;
  } else {
    candidates = generate_policy_candidates(omega, cfg.n_policies, cfg.generator, src);
    if (cache) *cache = candidates;
  }
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i)
    best = std::max(best, evaluate_candidate(omega, depth_h, cfg, src, static_cast<int>(i), std::move(candidates[i])).value);
  return best;
}

inline void check_dss_depth(int depth_h, const DssConfig& cfg) {
  cfg.validate();
  if (depth_h < 0 || depth_h > cfg.total_depth() || depth_h % cfg.steps_per_stage != 0)
    throw std::invalid_argument("dss: depth must be a multiple of K no larger than K*H");
}

}  // namespace detail

/// Estimated utility of the best K-step policy tree below `omega`, carrying the
/// root discount prefix gamma^depth_h. Zero at depth K*H.
template <typename Scalar>
Scalar dss(const HyperState<Scalar>& omega, int depth_h, const DssConfig& cfg, const RandomSource& src) {
  detail::check_dss_depth(depth_h, cfg);
  return detail::dss_node(omega, depth_h, cfg, src, nullptr);
}

template <typename Scalar>
struct DssDecision {
  Index action;
  std::size_t best;
  Scalar value;
  std::vector<QEstimate<Scalar>> estimates;
  /// The deadline tripped before every root candidate was evaluated.
  bool budget_exceeded = false;
};

/// Root decision: evaluates each candidate (polling `deadline` between
/// candidates; the first is always evaluated) and plays the best candidate's
/// action at the current state.
template <typename Scalar>
DssDecision<Scalar> dss_action(const HyperState<Scalar>& omega, const DssConfig& cfg, const RandomSource& src,
                               const Deadline& deadline = std::nullopt) {
  detail::check_dss_depth(0, cfg);
  std::vector<PolicyCandidate> candidates = generate_policy_candidates(omega, cfg.n_policies, cfg.generator, src);
  std::vector<QEstimate<Scalar>> estimates;
  estimates.reserve(candidates.size());
  bool exceeded = false;
  if (cfg.parallel) {
    std::vector<std::future<QEstimate<Scalar>>> pending;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      pending.push_back(std::async(std::launch::async, [&, i] {
        return detail::evaluate_candidate(omega, 0, cfg, src, static_cast<int>(i), candidates[i]);
      }));
    }
    for (auto& f : pending) estimates.push_back(f.get());
  } else {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (i > 0 && deadline_passed(deadline)) {
        exceeded = true;
        break;
      }
      estimates.push_back(detail::evaluate_candidate(omega, 0, cfg, src, static_cast<int>(i), candidates[i]));
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < estimates.size(); ++i) {
    if (estimates[i].value > estimates[best].value + tie_tolerance(estimates[best].value)) best = i;
  }
  const Index action = estimates[best].candidate(omega.state);
  const Scalar value = estimates[best].value;
  return {action, best, value, std::move(estimates), exceeded};
}

template <typename Scalar>
DssDecision<Scalar> dss_action(const HyperState<Scalar>& omega, const DssConfig& cfg) {
  return dss_action(omega, cfg, RandomSource(cfg.rng_seed));
}

}  // namespace dss
