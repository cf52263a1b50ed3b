#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace dss {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// V(s) for every state.
template <typename Scalar>
using ValueTable = Vector<Scalar>;

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Largest gap between two Q-values that still counts as a tie. Ties go to the
/// lowest action index everywhere in the library.
template <typename Scalar>
Scalar tie_tolerance(Scalar magnitude) {
  return Scalar(64) * std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), std::abs(magnitude));
}

/// Markov deterministic policy: one action per state.
class DeterministicPolicy {
 public:
  DeterministicPolicy() = default;
  DeterministicPolicy(Index n_states, Index action) : action_of_(static_cast<std::size_t>(n_states), action) {}
  explicit DeterministicPolicy(std::vector<Index> action_of) : action_of_(std::move(action_of)) {}

  Index operator()(Index s) const { return action_of_[static_cast<std::size_t>(s)]; }
  Index& operator[](Index s) { return action_of_[static_cast<std::size_t>(s)]; }
  Index n_states() const { return static_cast<Index>(action_of_.size()); }
  const std::vector<Index>& actions() const { return action_of_; }

  friend bool operator==(const DeterministicPolicy&, const DeterministicPolicy&) = default;

 private:
  std::vector<Index> action_of_;
};

/// Fully specified tabular MDP. The kernel is stored as an (S*A) x S row-major
/// matrix whose row s*A + a is P(.|s,a); rewards are expected values R(s,a).
template <typename Scalar>
class Mdp {
 public:
  using Kernel = Matrix<Scalar>;
  using RewardTable = Matrix<Scalar>;

  Mdp(Kernel transitions, RewardTable rewards, Scalar discount)
      : transitions_(std::move(transitions)), rewards_(std::move(rewards)), discount_(discount) {
    validate();
  }

  Index n_states() const { return rewards_.rows(); }
  Index n_actions() const { return rewards_.cols(); }
  Scalar discount() const { return discount_; }

  const Kernel& transitions() const { return transitions_; }
  const RewardTable& rewards() const { return rewards_; }

  auto transition(Index s, Index a) const { return transitions_.row(s * n_actions() + a); }
  Scalar transition(Index s, Index a, Index next) const { return transitions_(s * n_actions() + a, next); }
  Scalar reward(Index s, Index a) const { return rewards_(s, a); }

  /// Rows s*A .. s*A + A-1 of the kernel, i.e. P(.|s,.) as an A x S block.
  auto transitions_from(Index s) const { return transitions_.middleRows(s * n_actions(), n_actions()); }

 private:
  void validate() const {
    const Index S = rewards_.rows();
    const Index A = rewards_.cols();
    if (S <= 0 || A <= 0) throw ModelError("mdp: need at least one state and one action");
    if (transitions_.rows() != S * A || transitions_.cols() != S)
      throw ModelError("mdp: kernel must be (S*A) x S, got " + std::to_string(transitions_.rows()) + "x" +
                       std::to_string(transitions_.cols()));
    if (!(discount_ > Scalar(0) && discount_ < Scalar(1))) throw ModelError("mdp: discount must lie in (0,1)");
    if (!transitions_.allFinite() || !rewards_.allFinite()) throw ModelError("mdp: non-finite entry");
    if (transitions_.minCoeff() < Scalar(0) || transitions_.maxCoeff() > Scalar(1))
      throw ModelError("mdp: transition probability outside [0,1]");
    if (rewards_.minCoeff() < Scalar(0) || rewards_.maxCoeff() > Scalar(1))
      throw ModelError("mdp: reward outside [0,1]");
    const Scalar row_tol = std::max<Scalar>(Scalar(1e-9), Scalar(16) * std::numeric_limits<Scalar>::epsilon() * S);
    for (Index row = 0; row < S * A; ++row) {
      if (std::abs(transitions_.row(row).sum() - Scalar(1)) > row_tol)
        throw ModelError("mdp: transition row " + std::to_string(row) + " does not sum to 1");
    }
  }

  Kernel transitions_;
  RewardTable rewards_;
  Scalar discount_;
};

/// Q(s,a) = R(s,a) + gamma * sum_s' P(s'|s,a) v(s'), as an S x A matrix.
template <typename Scalar>
Matrix<Scalar> q_values(const Mdp<Scalar>& mdp, const ValueTable<Scalar>& v) {
  const Vector<Scalar> next = mdp.transitions() * v;
  return mdp.rewards() + mdp.discount() * Eigen::Map<const Matrix<Scalar>>(next.data(), mdp.n_states(), mdp.n_actions());
}

/// Lowest index among the maximal entries of a row (within tie_tolerance).
template <typename Derived>
Index argmax_lowest(const Eigen::DenseBase<Derived>& row) {
  using Scalar = typename Derived::Scalar;
  const Scalar best = row.maxCoeff();
  const Scalar tol = tie_tolerance(best);
  for (Index a = 0; a < row.size(); ++a) {
    if (row(a) >= best - tol) return a;
  }
  return 0;
}

}  // namespace dss
