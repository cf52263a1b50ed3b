#pragma once

#include "dss/belief.hpp"
#include "dss/random.hpp"
#include "dss/solvers.hpp"

#include <vector>

namespace dss {

/// A deterministic policy obtained by solving one posterior sample.
using PolicyCandidate = DeterministicPolicy;

enum class GeneratorKind { PolicyIteration, Rtdp };

/// Maps a sampled MDP to a policy.
struct PolicyGenerator {
  GeneratorKind kind = GeneratorKind::PolicyIteration;
  double eval_tolerance = kDefaultPolicyEvalTolerance;
  int rtdp_depth = 15;
  int rtdp_trajectories = 10;

  static PolicyGenerator policy_iteration(double eval_tolerance = kDefaultPolicyEvalTolerance) {
    return {GeneratorKind::PolicyIteration, eval_tolerance, 15, 10};
  }
  static PolicyGenerator rtdp(int depth, int trajectories = 10) {
    return {GeneratorKind::Rtdp, kDefaultPolicyEvalTolerance, depth, trajectories};
  }
};

template <typename Scalar, typename Rng>
PolicyCandidate apply_generator(const PolicyGenerator& generator, const Mdp<Scalar>& mdp, Index start_state, Rng& rng) {
  switch (generator.kind) {
    case GeneratorKind::PolicyIteration:
      return policy_iteration(mdp, static_cast<Scalar>(generator.eval_tolerance));
    case GeneratorKind::Rtdp:
      return rtdp_policy(mdp, generator.rtdp_depth, start_state, generator.rtdp_trajectories, rng);
  }
  throw std::logic_error("unknown policy generator");
}

/// Stream tags used when deriving per-branch random sources.
inline constexpr std::uint64_t kCandidateStream = 1;
inline constexpr std::uint64_t kRolloutStream = 2;
inline constexpr std::uint64_t kChildNodeStream = 3;

/// n Thompson-sampled candidates: candidate i solves the i-th posterior draw,
/// using stream src/{candidate, i}. Duplicates are kept.
template <typename Scalar>
std::vector<PolicyCandidate> generate_policy_candidates(const HyperState<Scalar>& omega, int n,
                                                        const PolicyGenerator& generator, const RandomSource& src) {
  if (n < 1) throw std::invalid_argument("generate_policy_candidates: n must be >= 1");
  std::vector<PolicyCandidate> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Engine rng = src.child({kCandidateStream, static_cast<std::uint64_t>(i)}).engine();
    const Mdp<Scalar> sampled = sample_mdp(omega.belief, rng);
    out.push_back(apply_generator(generator, sampled, omega.state, rng));
  }
  return out;
}

}  // namespace dss
