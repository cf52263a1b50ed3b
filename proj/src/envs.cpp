#include "dss/envs.hpp"

#include "dss/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace dss::envs {
namespace {

struct RewardRange {
  double floor;
  double span;
};

RewardRange reward_range(const std::vector<std::vector<Outcome>>& outcomes) {
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& list : outcomes) {
    for (const auto& o : list) {
      lo = std::min(lo, o.raw_reward);
      hi = std::max(hi, o.raw_reward);
    }
  }
  return {lo, hi > lo ? hi - lo : 1.0};
}

Mdp<double> build_model(Index S, Index A, const std::vector<std::vector<Outcome>>& outcomes, RewardRange range,
                        double discount, Matrix<double>& raw_rewards) {
  if (static_cast<Index>(outcomes.size()) != S * A) throw ModelError("environment: need one outcome list per (s,a)");
  Matrix<double> kernel = Matrix<double>::Zero(S * A, S);
  Matrix<double> rewards = Matrix<double>::Zero(S, A);
  raw_rewards = Matrix<double>::Zero(S, A);
  for (Index s = 0; s < S; ++s) {
    for (Index a = 0; a < A; ++a) {
      const auto& list = outcomes[static_cast<std::size_t>(s * A + a)];
      if (list.empty()) throw ModelError("environment: empty outcome list");
      for (const auto& o : list) {
        if (o.next < 0 || o.next >= S) throw ModelError("environment: outcome leads outside the state space");
        kernel(s * A + a, o.next) += o.probability;
        raw_rewards(s, a) += o.probability * o.raw_reward;
        rewards(s, a) += o.probability * (o.raw_reward - range.floor) / range.span;
      }
    }
  }
  // expected rewards can drift a few ulps outside [0,1]
  rewards = rewards.cwiseMax(0.0).cwiseMin(1.0);
  return Mdp<double>(std::move(kernel), std::move(rewards), discount);
}

/// Adds `o` to `list`, merging with an existing outcome of the same next state and reward.
void add_outcome(std::vector<Outcome>& list, Outcome o) {
  if (o.probability <= 0.0) return;
  for (auto& existing : list) {
    if (existing.next == o.next && existing.raw_reward == o.raw_reward) {
      existing.probability += o.probability;
      return;
    }
  }
  list.push_back(o);
}

}  // namespace

Environment::Environment(std::string name, Index n_states, Index n_actions, Index start_state,
                         std::vector<std::vector<Outcome>> outcomes, double discount, bool reset_on_goal,
                         std::optional<int> episode_length)
    : name_(std::move(name)),
      n_states_(n_states),
      n_actions_(n_actions),
      start_state_(start_state),
      outcomes_(std::move(outcomes)),
      reset_on_goal_(reset_on_goal),
      episode_length_(episode_length),
      true_model_(build_model(n_states, n_actions, outcomes_, reward_range(outcomes_), discount, raw_rewards_)) {
  const auto range = reward_range(outcomes_);
  reward_floor_ = range.floor;
  reward_span_ = range.span;
  if (start_state_ < 0 || start_state_ >= n_states_) throw ModelError("environment: start state out of range");
}

Environment make_chain(double discount, ChainParams params) {
  const int n = params.length;
  if (n < 2) throw std::invalid_argument("chain: need at least two states");
  if (!(params.slip >= 0.0 && params.slip <= 1.0)) throw std::invalid_argument("chain: slip must be a probability");
  auto forward = [&](Index s) -> Outcome {
    return s == n - 1 ? Outcome{s, 0, params.far_reward} : Outcome{s + 1, 0, 0.0};
  };
  auto back = [&](Index) -> Outcome { return Outcome{0, 0, params.back_reward}; };
  std::vector<std::vector<Outcome>> outcomes(static_cast<std::size_t>(n * 2));
  for (Index s = 0; s < n; ++s) {
    Outcome f = forward(s);
    Outcome b = back(s);
    auto& advance = outcomes[static_cast<std::size_t>(s * 2 + 0)];
    add_outcome(advance, {f.next, 1.0 - params.slip, f.raw_reward});
    add_outcome(advance, {b.next, params.slip, b.raw_reward});
    auto& retreat = outcomes[static_cast<std::size_t>(s * 2 + 1)];
    add_outcome(retreat, {b.next, 1.0 - params.slip, b.raw_reward});
    add_outcome(retreat, {f.next, params.slip, f.raw_reward});
  }
  return Environment("chain", n, 2, 0, std::move(outcomes), discount, false);
}

Environment make_double_loop(double discount) {
  // 0 = start, 1..4 = right loop, 5..8 = left loop
  constexpr Index S = 9;
  constexpr Index A = 2;
  std::vector<std::vector<Outcome>> outcomes(static_cast<std::size_t>(S * A));
  auto set = [&](Index s, Index a, Index next, double reward) {
    outcomes[static_cast<std::size_t>(s * A + a)] = {Outcome{next, 1.0, reward}};
  };
  set(0, 0, 1, 0.0);
  set(0, 1, 5, 0.0);
  for (Index s = 1; s <= 4; ++s) {
    const Index next = s == 4 ? 0 : s + 1;
    const double reward = s == 4 ? 1.0 : 0.0;
    set(s, 0, next, reward);
    set(s, 1, next, reward);
  }
  for (Index s = 5; s <= 8; ++s) {
    set(s, 0, 0, 0.0);
    set(s, 1, s == 8 ? 0 : s + 1, s == 8 ? 2.0 : 0.0);
  }
  return Environment("doubleloop", S, A, 0, std::move(outcomes), discount, false);
}

Environment make_grid(int n, double discount) {
  if (n < 2) throw std::invalid_argument("grid: size must be >= 2");
  const Index S = Index(n) * n;
  constexpr Index A = 4;
  constexpr int dr[A] = {-1, 0, 1, 0};
  constexpr int dc[A] = {0, 1, 0, -1};
  const Index start = 0;
  const Index goal = S - 1;
  std::vector<std::vector<Outcome>> outcomes(static_cast<std::size_t>(S * A));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const Index s = Index(r) * n + c;
      for (Index a = 0; a < A; ++a) {
        const int nr = r + dr[a];
        const int nc = c + dc[a];
        Index next = (nr < 0 || nr >= n || nc < 0 || nc >= n) ? s : Index(nr) * n + nc;
        double reward = 0.0;
        if (next == goal) {
          next = start;
          reward = 1.0;
        }
        outcomes[static_cast<std::size_t>(s * A + a)] = {Outcome{next, 1.0, reward}};
      }
    }
  }
  return Environment("grid" + std::to_string(n), S, A, start, std::move(outcomes), discount, true);
}

Environment make_deep_sea(int l, double discount, DeepSeaParams params) {
  if (l < 2) throw std::invalid_argument("deep sea: size must be >= 2");
  const Index S = Index(l) * l;
  constexpr Index A = 2;
  const double cost = params.move_cost_scale / l;
  std::vector<std::vector<Outcome>> outcomes(static_cast<std::size_t>(S * A));
  for (int row = 0; row < l; ++row) {
    for (int col = 0; col < l; ++col) {
      const Index s = Index(row) * l + col;
      for (Index a = 0; a < A; ++a) {
        const int next_col = a == 1 ? std::min(col + 1, l - 1) : std::max(col - 1, 0);
        double reward = a == 1 ? -cost : 0.0;
        Index next;
        if (row == l - 1) {
          if (next_col == l - 1) reward += params.treasure;
          next = 0;
        } else {
          next = Index(row + 1) * l + next_col;
        }
        outcomes[static_cast<std::size_t>(s * A + a)] = {Outcome{next, 1.0, reward}};
      }
    }
  }
  return Environment("deepsea" + std::to_string(l), S, A, 0, std::move(outcomes), discount, true, l);
}

StepResult env_step(const Environment& env, EnvState state, Index a, Engine& rng) {
  if (state.current < 0 || state.current >= env.n_states() || a < 0 || a >= env.n_actions())
    throw std::out_of_range("env_step: state or action out of range");
  const auto& list = env.outcomes(state.current, a);
  if (list.size() == 1) return {EnvState{list.front().next}, list.front().raw_reward};
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double u = uniform(rng);
  for (const auto& o : list) {
    if (u < o.probability) return {EnvState{o.next}, o.raw_reward};
    u -= o.probability;
  }
  return {EnvState{list.back().next}, list.back().raw_reward};
}

const Mdp<double>& true_mdp(const Environment& env) { return env.true_model(); }

Environment make_environment(std::string_view name, std::optional<int> size, double discount) {
  if (name == "chain") return make_chain(discount);
  if (name == "doubleloop") return make_double_loop(discount);
  if (name == "grid5") return make_grid(5, discount);
  if (name == "grid10") return make_grid(10, discount);
  if (name == "grid") return make_grid(size.value_or(5), discount);
  if (name == "maze") return make_maze(kDefaultMazeLayout, discount);
  if (name == "deepsea") return make_deep_sea(size.value_or(10), discount);
  throw std::invalid_argument("unknown environment '" + std::string(name) + "'");
}

}  // namespace dss::envs
