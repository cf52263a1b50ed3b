#pragma once

#include "dss/mdp.hpp"
#include "dss/solvers.hpp"

#include <charconv>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace dss {

/// Product-of-Dirichlets posterior over transition kernels, with a known
/// reward table. Rows are immutable and shared: updating one (s,a) row copies
/// only that row, so sibling beliefs in a search tree stay cheap.
template <typename Scalar>
class DirichletBelief {
 public:
  using RewardTable = Matrix<Scalar>;
  using Counts = Matrix<Scalar>;

  struct Row {
    Vector<Scalar> counts;
    Scalar total;
  };

  /// Symmetric prior: every alpha(s,a,s') = prior_strength.
  static DirichletBelief symmetric(RewardTable rewards, Scalar discount, Scalar prior_strength) {
    const Index S = rewards.rows();
    const Index A = rewards.cols();
    if (!(prior_strength > Scalar(0))) throw ModelError("belief: prior strength must be positive");
    auto model = make_model(std::move(rewards), discount, prior_strength);
    auto row = std::make_shared<const Row>(Row{Vector<Scalar>::Constant(S, prior_strength), prior_strength * S});
    return DirichletBelief(std::move(model), std::vector<std::shared_ptr<const Row>>(static_cast<std::size_t>(S * A), row), 0);
  }

  /// Arbitrary pseudo-counts, one (S*A) x S matrix laid out like Mdp::transitions().
  /// `observations` is the number of transitions these counts already include.
  static DirichletBelief from_counts(const Counts& counts, RewardTable rewards, Scalar discount, Scalar prior_strength,
                                     std::uint64_t observations = 0) {
    const Index S = rewards.rows();
    const Index A = rewards.cols();
    if (counts.rows() != S * A || counts.cols() != S) throw ModelError("belief: counts must be (S*A) x S");
    if (!counts.allFinite() || !(counts.minCoeff() > Scalar(0))) throw ModelError("belief: counts must be positive");
    auto model = make_model(std::move(rewards), discount, prior_strength);
    std::vector<std::shared_ptr<const Row>> rows;
    rows.reserve(static_cast<std::size_t>(S * A));
    for (Index r = 0; r < S * A; ++r) {
      Vector<Scalar> c = counts.row(r).transpose();
      const Scalar total = c.sum();
      rows.push_back(std::make_shared<const Row>(Row{std::move(c), total}));
    }
    return DirichletBelief(std::move(model), std::move(rows), observations);
  }

  /// A belief concentrated on `mdp`: alpha = prior_strength + strength * P.
  static DirichletBelief concentrated(const Mdp<Scalar>& mdp, Scalar strength, Scalar prior_strength) {
    const Counts counts = (strength * mdp.transitions()).array() + prior_strength;
    return from_counts(counts, mdp.rewards(), mdp.discount(), prior_strength);
  }

  Index n_states() const { return model_->rewards.rows(); }
  Index n_actions() const { return model_->rewards.cols(); }
  Scalar discount() const { return model_->discount; }
  Scalar prior_strength() const { return model_->prior_strength; }
  const RewardTable& rewards() const { return model_->rewards; }

  /// Number of transitions fed through update_posterior since the prior.
  std::uint64_t observations() const { return observations_; }

  const Row& row(Index s, Index a) const {
    check_pair(s, a);
    return *rows_[static_cast<std::size_t>(s * n_actions() + a)];
  }
  Scalar count(Index s, Index a, Index next) const { return row(s, a).counts(next); }

  Counts counts() const {
    Counts out(n_states() * n_actions(), n_states());
    for (Index r = 0; r < out.rows(); ++r) out.row(r) = rows_[static_cast<std::size_t>(r)]->counts.transpose();
    return out;
  }

  /// True when both beliefs share the same row object for (s,a).
  bool shares_row(const DirichletBelief& other, Index s, Index a) const {
    const auto i = static_cast<std::size_t>(s * n_actions() + a);
    return rows_[i] == other.rows_[i];
  }

  void check_pair(Index s, Index a) const {
    if (s < 0 || s >= n_states() || a < 0 || a >= n_actions()) throw std::out_of_range("belief: (s,a) out of range");
  }

  DirichletBelief observe(Index s, Index a, Index next) const {
    check_pair(s, a);
    if (next < 0 || next >= n_states()) throw std::out_of_range("belief: next state out of range");
    const auto i = static_cast<std::size_t>(s * n_actions() + a);
    Row updated = *rows_[i];
    updated.counts(next) += Scalar(1);
    updated.total += Scalar(1);
    std::vector<std::shared_ptr<const Row>> rows = rows_;
    rows[i] = std::make_shared<const Row>(std::move(updated));
    return DirichletBelief(model_, std::move(rows), observations_ + 1);
  }

 private:
  struct Model {
    RewardTable rewards;
    Scalar discount;
    Scalar prior_strength;
  };

  static std::shared_ptr<const Model> make_model(RewardTable rewards, Scalar discount, Scalar prior_strength) {
    if (rewards.rows() <= 0 || rewards.cols() <= 0) throw ModelError("belief: empty reward table");
    if (!(discount > Scalar(0) && discount < Scalar(1))) throw ModelError("belief: discount must lie in (0,1)");
    if (rewards.minCoeff() < Scalar(0) || rewards.maxCoeff() > Scalar(1)) throw ModelError("belief: reward outside [0,1]");
    return std::make_shared<const Model>(Model{std::move(rewards), discount, prior_strength});
  }

  DirichletBelief(std::shared_ptr<const Model> model, std::vector<std::shared_ptr<const Row>> rows, std::uint64_t observations)
      : model_(std::move(model)), rows_(std::move(rows)), observations_(observations) {}

  std::shared_ptr<const Model> model_;
  std::vector<std::shared_ptr<const Row>> rows_;
  std::uint64_t observations_ = 0;
};

/// Environment state paired with the current posterior.
template <typename Scalar>
struct HyperState {
  HyperState(Index s, DirichletBelief<Scalar> b) : state(s), belief(std::move(b)) {
    if (state < 0 || state >= belief.n_states()) throw std::out_of_range("hyper-state: state out of range");
  }

  Index state;
  DirichletBelief<Scalar> belief;
};

/// Conjugate update after observing s --a--> next. The input is untouched.
template <typename Scalar>
DirichletBelief<Scalar> update_posterior(const DirichletBelief<Scalar>& belief, Index s, Index a, Index next) {
  return belief.observe(s, a, next);
}

/// Posterior predictive nu(.|s,a) = alpha(s,a,.) / sum alpha(s,a,.).
template <typename Scalar>
Vector<Scalar> marginal_next_state(const DirichletBelief<Scalar>& belief, Index s, Index a) {
  const auto& row = belief.row(s, a);
  return row.counts / row.total;
}

/// Rewards are known, so the reward marginal collapses to the table entry.
template <typename Scalar>
Scalar expected_reward(const DirichletBelief<Scalar>& belief, Index s, Index a) {
  belief.check_pair(s, a);
  return belief.rewards()(s, a);
}

/// Draws x ~ Dirichlet(alpha) into `out`.
template <typename Scalar, typename Rng>
void sample_dirichlet(const Vector<Scalar>& alpha, Rng& rng, Eigen::Ref<Vector<Scalar>> out) {
  Scalar total = 0;
  for (Index i = 0; i < alpha.size(); ++i) {
    std::gamma_distribution<Scalar> gamma(alpha(i), Scalar(1));
    out(i) = gamma(rng);
    total += out(i);
  }
  if (total > Scalar(0) && std::isfinite(total)) {
    out /= total;
    return;
  }
  // every gamma draw underflowed (tiny alphas): fall back to a one-hot draw
  out.setZero();
  out(sample_index(alpha, rng)) = Scalar(1);
}

/// One MDP drawn from the posterior; rewards and discount are copied.
template <typename Scalar, typename Rng>
Mdp<Scalar> sample_mdp(const DirichletBelief<Scalar>& belief, Rng& rng) {
  const Index S = belief.n_states();
  const Index A = belief.n_actions();
  Matrix<Scalar> kernel(S * A, S);
  Vector<Scalar> row(S);
  for (Index s = 0; s < S; ++s) {
    for (Index a = 0; a < A; ++a) {
      sample_dirichlet<Scalar>(belief.row(s, a).counts, rng, row);
      kernel.row(s * A + a) = row.transpose();
    }
  }
  return Mdp<Scalar>(std::move(kernel), belief.rewards(), belief.discount());
}

template <typename Scalar>
struct SampledTransition {
  Index next;
  Scalar reward;
};

/// Next state from the posterior predictive, reward from the known table.
template <typename Scalar, typename Rng>
SampledTransition<Scalar> sample_transition(const DirichletBelief<Scalar>& belief, Index s, Index a, Rng& rng) {
  const auto& row = belief.row(s, a);
  return {sample_index(row.counts, rng), belief.rewards()(s, a)};
}

/// The MDP whose kernel is the posterior predictive everywhere.
template <typename Scalar>
Mdp<Scalar> mean_mdp(const DirichletBelief<Scalar>& belief) {
  const Index S = belief.n_states();
  const Index A = belief.n_actions();
  Matrix<Scalar> kernel(S * A, S);
  for (Index s = 0; s < S; ++s)
    for (Index a = 0; a < A; ++a) kernel.row(s * A + a) = marginal_next_state(belief, s, a).transpose();
  return Mdp<Scalar>(std::move(kernel), belief.rewards(), belief.discount());
}

/// max_{s,a} || nu1(.|s,a) - nu2(.|s,a) ||_1 between predictive kernels.
template <typename Scalar>
Scalar belief_l1_distance(const DirichletBelief<Scalar>& b1, const DirichletBelief<Scalar>& b2) {
  if (b1.n_states() != b2.n_states() || b1.n_actions() != b2.n_actions())
    throw std::invalid_argument("belief_l1_distance: dimension mismatch");
  Scalar worst = 0;
  for (Index s = 0; s < b1.n_states(); ++s) {
    for (Index a = 0; a < b1.n_actions(); ++a) {
      if (b1.shares_row(b2, s, a)) continue;
      worst = std::max(worst, (marginal_next_state(b1, s, a) - marginal_next_state(b2, s, a)).cwiseAbs().sum());
    }
  }
  return worst;
}

namespace detail {

template <typename Scalar>
void write_real(std::ostream& out, Scalar x) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), x);
  out.write(buf, result.ptr - buf);
}

template <typename T>
T parse_token(const std::string& token, const char* what) {
  T value{};
  const char* end = token.data() + token.size();
  const auto result = std::from_chars(token.data(), end, value);
  if (result.ec != std::errc() || result.ptr != end) throw ModelError(std::string("belief snapshot: bad ") + what + " '" + token + "'");
  return value;
}

}  // namespace detail

/// Snapshot format:
///   dirichlet <S> <A> <gamma> <prior_strength>
///   <s> <a> <c_0> ... <c_{S-1}>      (one line per (s,a), row-major)
/// Reals are written in shortest round-trip form. Rewards are not part of the
/// snapshot; the reader takes them from the caller.
template <typename Scalar>
void write_belief(std::ostream& out, const DirichletBelief<Scalar>& belief) {
  out << "dirichlet " << belief.n_states() << ' ' << belief.n_actions() << ' ';
  detail::write_real(out, belief.discount());
  out << ' ';
  detail::write_real(out, belief.prior_strength());
  out << '\n';
  for (Index s = 0; s < belief.n_states(); ++s) {
    for (Index a = 0; a < belief.n_actions(); ++a) {
      out << s << ' ' << a;
      const auto& counts = belief.row(s, a).counts;
      for (Index j = 0; j < counts.size(); ++j) {
        out << ' ';
        detail::write_real(out, counts(j));
      }
      out << '\n';
    }
  }
}

template <typename Scalar>
DirichletBelief<Scalar> read_belief(std::istream& in, Matrix<Scalar> rewards) {
  std::string line;
  if (!std::getline(in, line)) throw ModelError("belief snapshot: missing header");
  std::istringstream header(line);
  std::string tag, s_tok, a_tok, g_tok, p_tok, extra;
  if (!(header >> tag >> s_tok >> a_tok >> g_tok >> p_tok) || (header >> extra) || tag != "dirichlet")
    throw ModelError("belief snapshot: malformed header");
  const auto S = detail::parse_token<Index>(s_tok, "state count");
  const auto A = detail::parse_token<Index>(a_tok, "action count");
  const auto gamma = detail::parse_token<Scalar>(g_tok, "discount");
  const auto prior = detail::parse_token<Scalar>(p_tok, "prior strength");
  if (S <= 0 || A <= 0) throw ModelError("belief snapshot: non-positive dimensions");
  if (rewards.rows() != S || rewards.cols() != A) throw ModelError("belief snapshot: reward table does not match header");
  Matrix<Scalar> counts(S * A, S);
  std::vector<bool> seen(static_cast<std::size_t>(S * A), false);
  for (Index row = 0; row < S * A; ++row) {
    if (!std::getline(in, line)) throw ModelError("belief snapshot: missing row");
    std::istringstream fields(line);
    std::string token;
    std::vector<std::string> tokens;
    while (fields >> token) tokens.push_back(token);
    if (static_cast<Index>(tokens.size()) != S + 2) throw ModelError("belief snapshot: wrong field count");
    const auto s = detail::parse_token<Index>(tokens[0], "state");
    const auto a = detail::parse_token<Index>(tokens[1], "action");
    if (s < 0 || s >= S || a < 0 || a >= A) throw ModelError("belief snapshot: index out of range");
    const auto slot = static_cast<std::size_t>(s * A + a);
    if (seen[slot]) throw ModelError("belief snapshot: duplicate row");
    seen[slot] = true;
    for (Index j = 0; j < S; ++j) counts(s * A + a, j) = detail::parse_token<Scalar>(tokens[static_cast<std::size_t>(j + 2)], "count");
  }
  const Scalar excess = counts.sum() - prior * Scalar(S * S * A);
  const auto observations = excess > Scalar(0) ? static_cast<std::uint64_t>(std::llround(excess)) : 0;
  return DirichletBelief<Scalar>::from_counts(counts, std::move(rewards), gamma, prior, observations);
}

}  // namespace dss
