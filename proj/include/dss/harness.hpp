#pragma once

#include "dss/belief.hpp"
#include "dss/dss.hpp"
#include "dss/envs.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dss::harness {

enum class Algorithm { SparserPi, SparserRtdp, Thompson, SparseSampling, Fhts };

std::string to_string(Algorithm algo);
Algorithm parse_algorithm(const std::string& name);

/// Configuration error (unknown key, bad value). The CLI maps it to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Everything needed to reproduce a batch of runs.
struct ExperimentConfig {
  std::string env = "chain";
  std::optional<int> size;
  Algorithm algo = Algorithm::SparserPi;

  // Sparser: (Np, Ns, K, H)
  int n_policies = 4;
  int n_samples = 4;
  int steps_per_stage = 5;
  int n_stages = 2;
  int rtdp_depth = 15;
  int rtdp_trajectories = 10;
  double pi_tolerance = kDefaultPolicyEvalTolerance;

  // sparse sampling width / lookahead depth (also the fhts horizon)
  int width = 2;
  int depth = 3;

  int horizon = 1000;  // T
  double discount = envs::kDefaultDiscount;
  std::optional<double> prior_strength;  // default 1/|S|
  double time_limit_ms = 250;
  bool record_timing = true;
  int n_runs = 1;
  std::uint64_t base_seed = 0;
  int jobs = 1;
  std::string output;

  /// Stable key=value rendering of everything that affects results.
  std::string canonical() const;
  /// FNV-1a of canonical().
  std::uint64_t hash() const;

  DssConfig dss_config() const;
};

/// Paper protocol defaults for an environment: horizon, per-step budget, the
/// tuned Sparser parameters, and RTDP depth.
ExperimentConfig default_config(const std::string& env, Algorithm algo, std::optional<int> size = std::nullopt);

/// Applies one key=value setting (keys are the CLI flag names without dashes).
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Defaults for the env/algo named in `settings`, then every other setting on top.
ExperimentConfig build_config(const std::map<std::string, std::string>& settings);

/// Parses "key=value key=value ..." into a settings map.
std::map<std::string, std::string> parse_settings_line(const std::string& line);

struct StepRecord {
  int t;
  Index state;
  Index action;
  double reward;      // raw
  double cum_reward;  // raw prefix sum
  double step_ms;  // planning wall-clock, 0 when timing is off

  bool operator==(const StepRecord&) const = default;
};

struct RunLog {
  int run_id = 0;
  std::uint64_t config_hash = 0;
  std::vector<StepRecord> steps;

  double total_reward() const { return steps.empty() ? 0.0 : steps.back().cum_reward; }
  double total_seconds() const;
  /// Steps whose planning time exceeded `limit_ms`.
  int over_budget_steps(double limit_ms) const;

  bool operator==(const RunLog&) const = default;
};

struct PlannerDecision {
  Index action;
  bool over_budget = false;
};

/// Chooses an action from a hyper-state. Implementations are stateless between
/// calls; all randomness comes from the supplied source.
class Planner {
 public:
  virtual ~Planner() = default;
  virtual PlannerDecision choose(const HyperState<double>& omega, const RandomSource& src, const Deadline& deadline) const = 0;
};

std::unique_ptr<Planner> make_planner(const ExperimentConfig& cfg, Index n_states);

envs::Environment make_environment(const ExperimentConfig& cfg);

/// Uninformed prior for `env`: symmetric Dirichlet, known (normalized) rewards.
DirichletBelief<double> initial_belief(const ExperimentConfig& cfg, const envs::Environment& env);

/// One seeded run of T steps: plan, act in the true environment, update the
/// posterior, record. `prior` overrides the default uninformed belief.
RunLog run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, int run_id = 0,
                      const std::optional<DirichletBelief<double>>& prior = std::nullopt);

/// Runs `n` experiments with seeds first_seed + i; uses cfg.jobs threads.
/// Logs are returned in run-id order.
std::vector<RunLog> run_batch(const ExperimentConfig& cfg, std::uint64_t first_seed, int n);

struct SummaryStats {
  double mean_total = 0;
  double stderr_total = 0;  // sample stddev / sqrt(n); 0 for a single run
  double sec_per_episode = 0;
  int n_runs = 0;
};

SummaryStats summarize(const std::vector<RunLog>& logs);

struct Evaluation {
  SummaryStats stats;
  std::vector<RunLog> logs;
};

/// Evaluation seeds are base_seed + i; tuning seeds live at a disjoint offset.
inline constexpr std::uint64_t kTuningSeedOffset = std::uint64_t(1) << 40;

Evaluation evaluate(const ExperimentConfig& cfg, int n_eval_runs = 100);

struct TuningResult {
  std::size_t selected;
  ExperimentConfig config;
  std::vector<double> total_reward;  // summed over tuning runs, per candidate
  std::vector<double> mean_step_ms;
  std::vector<bool> excluded;
};

/// Picks the candidate with the largest reward summed over `n_tuning_runs`
/// runs, skipping candidates whose mean step time exceeds their budget. Ties
/// go to the lowest index. Throws ConfigError when the grid is empty or every
/// candidate was excluded.
TuningResult tune_hyperparameters(const std::vector<ExperimentConfig>& grid, int n_tuning_runs = 10);

/// Trailing mean over the last `window` rewards (partial at the head).
std::vector<double> moving_average(const RunLog& log, int window);

/// Long-run average raw reward of the true model's optimal policy.
double optimal_average_reward(const envs::Environment& env);

/// Cumulative regret t * rho* - sum_{k<=t} r_k.
std::vector<double> regret_series(const RunLog& log, const envs::Environment& env);
std::vector<double> regret_series(const RunLog& log, double rho_star);

}  // namespace dss::harness
