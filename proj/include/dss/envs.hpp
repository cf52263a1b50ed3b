#pragma once

#include "dss/mdp.hpp"
#include "dss/random.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dss::envs {

/// One possible result of taking an action.
struct Outcome {
  Index next;
  double probability;
  double raw_reward;
};

struct EnvState {
  Index current;
};

struct StepResult {
  EnvState next;
  double reward;  // raw, unscaled
};

/// Generative benchmark with a known ground-truth model. Raw rewards are what
/// the harness logs; the planner-facing model sees them mapped affinely into
/// [0,1] via (r - reward_floor) / reward_span.
class Environment {
 public:
  Environment(std::string name, Index n_states, Index n_actions, Index start_state,
              std::vector<std::vector<Outcome>> outcomes, double discount, bool reset_on_goal,
              std::optional<int> episode_length = std::nullopt);

  const std::string& name() const { return name_; }
  Index n_states() const { return n_states_; }
  Index n_actions() const { return n_actions_; }
  Index start_state() const { return start_state_; }
  bool reset_on_goal() const { return reset_on_goal_; }
  std::optional<int> episode_length() const { return episode_length_; }
  double discount() const { return true_model_.discount(); }

  const std::vector<Outcome>& outcomes(Index s, Index a) const { return outcomes_[static_cast<std::size_t>(s * n_actions_ + a)]; }

  /// Planner-scale rewards in [0,1].
  double normalize(double raw) const { return (raw - reward_floor_) / reward_span_; }
  double reward_floor() const { return reward_floor_; }
  double reward_span() const { return reward_span_; }
  double max_raw_reward() const { return reward_floor_ + reward_span_; }

  /// Ground truth in planner scale. Oracles and regret only; never hand this to a planner.
  const Mdp<double>& true_model() const { return true_model_; }
  /// Expected raw reward R(s,a).
  const Matrix<double>& raw_rewards() const { return raw_rewards_; }

 private:
  std::string name_;
  Index n_states_;
  Index n_actions_;
  Index start_state_;
  std::vector<std::vector<Outcome>> outcomes_;
  bool reset_on_goal_;
  std::optional<int> episode_length_;
  double reward_floor_ = 0;
  double reward_span_ = 1;
  Matrix<double> raw_rewards_;
  Mdp<double> true_model_;
};

inline constexpr double kDefaultDiscount = 0.95;

struct ChainParams {
  int length = 5;
  double slip = 0.2;
  double far_reward = 1.0;
  double back_reward = 0.2;
};

/// Linear chain. Action 0 advances (self-loop with the big reward at the far
/// end), action 1 returns to the start with a small reward; with probability
/// `slip` the other action's effect happens instead.
Environment make_chain(double discount = kDefaultDiscount, ChainParams params = {});

/// Two deterministic 5-step loops through a shared start state (state 0).
/// Action 0 at the start enters the right loop (any action then advances,
/// reward 1 on closing it). Action 1 enters the left loop, which needs action 1
/// at every step (reward 2 on closing it); action 0 there drops back to the start.
Environment make_double_loop(double discount = kDefaultDiscount);

/// n x n grid, start at the top-left corner, goal at the bottom-right. Actions
/// up/right/down/left; walls absorb; entering the goal pays 1 and teleports to
/// the start.
Environment make_grid(int n, double discount = kDefaultDiscount);

inline constexpr std::string_view kDefaultMazeLayout =
    "S#....F\n"
    "...##.#\n"
    "...#...\n"
    "F....#.\n"
    "...#.#.\n"
    "..F#..G\n";

struct MazeParams {
  /// Probability mass moved to each perpendicular direction.
  double perpendicular_slip = 0.05;
};

/// Flag-collecting maze. State = cell * 2^flags + collected-mask. Entering the
/// goal pays the number of collected flags and resets to the start with no
/// flags. Throws ModelError on a malformed layout.
Environment make_maze(std::string_view layout = kDefaultMazeLayout, double discount = kDefaultDiscount, MazeParams params = {});

/// Cell/flag coordinates of a maze state.
struct MazeCoordinates {
  Index cell;
  unsigned flags;
};
MazeCoordinates maze_decode(Index state, int n_flags);
Index maze_encode(MazeCoordinates coords, int n_flags);

struct DeepSeaParams {
  double treasure = 1.0;
  double move_cost_scale = 0.01;  // cost of one right move is scale / L
};

/// L x L descending grid. Every step goes one row down; action 1 moves right
/// (paying a small cost), action 0 moves left. After L steps the episode resets
/// to the top-left; arriving in the bottom-right corner pays the treasure.
Environment make_deep_sea(int l, double discount = kDefaultDiscount, DeepSeaParams params = {});

/// Samples one transition of the true model. Reward is raw.
StepResult env_step(const Environment& env, EnvState state, Index a, Engine& rng);

/// Ground-truth model in planner scale.
const Mdp<double>& true_mdp(const Environment& env);

/// Builds a benchmark by name: chain, doubleloop, grid5, grid10, grid (with size), maze, deepsea (with size).
Environment make_environment(std::string_view name, std::optional<int> size = std::nullopt, double discount = kDefaultDiscount);

}  // namespace dss::envs
