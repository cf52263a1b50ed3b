#include "dss/harness.hpp"

#include "dss/baselines.hpp"
#include "dss/fhts.hpp"
#include "dss/solvers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace dss::harness {
namespace {

constexpr std::uint64_t kPlannerStream = 11;
constexpr std::uint64_t kEnvStream = 12;

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto result = std::from_chars(value.data(), end, out);
  if (value.empty() || result.ec != std::errc() || result.ptr != end)
    throw ConfigError("invalid value '" + value + "' for " + key);
  return out;
}

int parse_positive(const std::string& key, const std::string& value) {
  const int v = parse_number<int>(key, value);
  if (v < 1) throw ConfigError(key + " must be >= 1");
  return v;
}

class SparserPlanner final : public Planner {
 public:
  explicit SparserPlanner(DssConfig cfg) : cfg_(std::move(cfg)) {}
  PlannerDecision choose(const HyperState<double>& omega, const RandomSource& src, const Deadline& deadline) const override {
    const auto decision = dss_action(omega, cfg_, src, deadline);
    return {decision.action, decision.budget_exceeded};
  }

 private:
  DssConfig cfg_;
};

class ThompsonPlanner final : public Planner {
 public:
  explicit ThompsonPlanner(PolicyGenerator generator) : generator_(generator) {}
  PlannerDecision choose(const HyperState<double>& omega, const RandomSource& src, const Deadline&) const override {
    return {thompson_action(omega, generator_, src)};
  }

 private:
  PolicyGenerator generator_;
};

class SparseSamplingPlanner final : public Planner {
 public:
  SparseSamplingPlanner(int width, int depth) : width_(width), depth_(depth) {}
  PlannerDecision choose(const HyperState<double>& omega, const RandomSource& src, const Deadline& deadline) const override {
    Engine rng = src.engine();
    const auto decision = kearns_sparse_sampling(omega, width_, depth_, rng, kDefaultNodeBudget, deadline);
    return {decision.action, decision.budget_exceeded};
  }

 private:
  int width_;
  int depth_;
};

class FhtsPlanner final : public Planner {
 public:
  explicit FhtsPlanner(int depth) : depth_(depth) {}
  PlannerDecision choose(const HyperState<double>& omega, const RandomSource&, const Deadline&) const override {
    return {fhts_action(omega, depth_).action};
  }

 private:
  int depth_;
};

/// Gain-optimal policy proxy: policy iteration with exact evaluation at a
/// discount close to one, warm-started from the discounted optimum.
DeterministicPolicy long_run_optimal_policy(const Mdp<double>& model) {
  const Mdp<double> patient(model.transitions(), model.rewards(), 0.999);
  DeterministicPolicy policy = greedy_policy(model, value_iteration(model));
  for (int iteration = 0; iteration < 1000; ++iteration) {
    const ValueTable<double> v = policy_value(patient, policy, Horizon::unbounded(), 1e-9);
    const Matrix<double> q = q_values(patient, v);
    bool stable = true;
    for (Index s = 0; s < model.n_states(); ++s) {
      const double best = q.row(s).maxCoeff();
      if (q(s, policy(s)) >= best - 1e-9 * std::max(1.0, std::abs(best))) continue;
      policy[s] = argmax_lowest(q.row(s));
      stable = false;
    }
    if (stable) break;
  }
  return policy;
}

}  // namespace

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::SparserPi: return "sparser-pi";
    case Algorithm::SparserRtdp: return "sparser-rtdp";
    case Algorithm::Thompson: return "thompson";
    case Algorithm::SparseSampling: return "sparse-sampling";
    case Algorithm::Fhts: return "fhts";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  for (auto algo : {Algorithm::SparserPi, Algorithm::SparserRtdp, Algorithm::Thompson, Algorithm::SparseSampling, Algorithm::Fhts})
    if (to_string(algo) == name) return algo;
  throw ConfigError("unknown algorithm '" + name + "'");
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream out;
  out.precision(17);
  out << "env=" << env;
  if (size) out << " size=" << *size;
  out << " algo=" << to_string(algo) << " T=" << horizon << " gamma=" << discount;
  if (prior_strength) out << " prior=" << *prior_strength;
  switch (algo) {
    case Algorithm::SparserPi:
    case Algorithm::SparserRtdp:
      out << " Np=" << n_policies << " Ns=" << n_samples << " K=" << steps_per_stage << " H=" << n_stages;
      if (algo == Algorithm::SparserRtdp) out << " rtdp-depth=" << rtdp_depth << " rtdp-trajectories=" << rtdp_trajectories;
      else out << " pi-tolerance=" << pi_tolerance;
      break;
    case Algorithm::Thompson:
      out << " pi-tolerance=" << pi_tolerance;
      break;
    case Algorithm::SparseSampling:
      out << " width=" << width << " depth=" << depth;
      break;
    case Algorithm::Fhts:
      out << " depth=" << depth;
      break;
  }
  out << " time-limit-ms=" << time_limit_ms << " timing=" << (record_timing ? "wall" : "off");
  return out.str();
}

std::uint64_t ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

DssConfig ExperimentConfig::dss_config() const {
  DssConfig cfg;
  cfg.n_stages = n_stages;
  cfg.steps_per_stage = steps_per_stage;
  cfg.n_policies = n_policies;
  cfg.n_samples_per_policy = n_samples;
  cfg.generator = algo == Algorithm::SparserRtdp ? PolicyGenerator::rtdp(rtdp_depth, rtdp_trajectories)
                                                 : PolicyGenerator::policy_iteration(pi_tolerance);
  cfg.rng_seed = base_seed;
  return cfg;
}

ExperimentConfig default_config(const std::string& env, Algorithm algo, std::optional<int> size) {
  ExperimentConfig cfg;
  cfg.env = env;
  cfg.size = size;
  cfg.algo = algo;
  const bool rtdp = algo == Algorithm::SparserRtdp;
  auto sparser = [&](int np, int ns, int k, int h) {
    cfg.n_policies = np;
    cfg.n_samples = ns;
    cfg.steps_per_stage = k;
    cfg.n_stages = h;
  };
  // budgets, horizons and tuned (Np, Ns, K, H) from the published protocol
  if (env == "chain") {
    cfg.horizon = 1000;
    cfg.time_limit_ms = 250;
    rtdp ? sparser(8, 4, 10, 2) : sparser(4, 4, 5, 2);
  } else if (env == "doubleloop") {
    cfg.horizon = 1000;
    cfg.time_limit_ms = 250;
    sparser(4, 4, 18, 2);
  } else if (env == "grid5" || (env == "grid" && size.value_or(5) <= 5)) {
    cfg.horizon = 1000;
    cfg.time_limit_ms = 1000;
    rtdp ? sparser(4, 2, 50, 1) : sparser(2, 2, 25, 1);
  } else if (env == "grid10" || env == "grid") {
    cfg.horizon = 2000;
    cfg.time_limit_ms = 1000;
    rtdp ? sparser(4, 2, 200, 2) : sparser(2, 2, 100, 2);
  } else if (env == "maze") {
    cfg.horizon = 20000;
    cfg.time_limit_ms = 1500;
    rtdp ? sparser(4, 4, 500, 1) : sparser(4, 2, 100, 1);
  } else if (env == "deepsea") {
    cfg.horizon = 2000;
    cfg.time_limit_ms = 1000;
    sparser(4, 2, size.value_or(10), 2);
  } else {
    throw ConfigError("unknown environment '" + env + "'");
  }
  const auto n_states = envs::make_environment(env, size).n_states();
  cfg.rtdp_depth = n_states > 50 ? 50 : 15;
  return cfg;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "env") cfg.env = value;
  else if (key == "size") cfg.size = parse_positive(key, value);
  else if (key == "algo") cfg.algo = parse_algorithm(value);
  else if (key == "T") cfg.horizon = parse_positive(key, value);
  else if (key == "gamma") {
    cfg.discount = parse_number<double>(key, value);
    if (!(cfg.discount > 0.0 && cfg.discount < 1.0)) throw ConfigError("gamma must lie in (0,1)");
  } else if (key == "prior") {
    cfg.prior_strength = parse_number<double>(key, value);
    if (!(*cfg.prior_strength > 0.0)) throw ConfigError("prior must be positive");
  } else if (key == "K") cfg.steps_per_stage = parse_positive(key, value);
  else if (key == "H") cfg.n_stages = parse_positive(key, value);
  else if (key == "Np") cfg.n_policies = parse_positive(key, value);
  else if (key == "Ns") cfg.n_samples = parse_positive(key, value);
  else if (key == "width") cfg.width = parse_positive(key, value);
  else if (key == "depth") cfg.depth = parse_positive(key, value);
  else if (key == "rtdp-depth") cfg.rtdp_depth = parse_positive(key, value);
  else if (key == "rtdp-trajectories") cfg.rtdp_trajectories = parse_positive(key, value);
  else if (key == "pi-tolerance") {
    cfg.pi_tolerance = parse_number<double>(key, value);
    if (!(cfg.pi_tolerance > 0.0)) throw ConfigError("pi-tolerance must be positive");
  } else if (key == "time-limit-ms") {
    cfg.time_limit_ms = parse_number<double>(key, value);
    if (!(cfg.time_limit_ms > 0.0)) throw ConfigError("time-limit-ms must be positive");
  } else if (key == "timing") {
    if (value != "wall" && value != "off") throw ConfigError("timing must be 'wall' or 'off'");
    cfg.record_timing = value == "wall";
  } else if (key == "runs") cfg.n_runs = parse_positive(key, value);
  else if (key == "seed") cfg.base_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "jobs") cfg.jobs = parse_positive(key, value);
  else if (key == "out") cfg.output = value;
  else throw ConfigError("unknown setting '" + key + "'");
}

ExperimentConfig build_config(const std::map<std::string, std::string>& settings) {
  auto find = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = settings.find(key);
    return it == settings.end() ? std::nullopt : std::optional(it->second);
  };
  const auto env = find("env");
  if (!env) throw ConfigError("missing env");
  const Algorithm algo = parse_algorithm(find("algo").value_or("sparser-pi"));
  std::optional<int> size;
  if (const auto s = find("size")) size = parse_positive("size", *s);
  ExperimentConfig cfg = default_config(*env, algo, size);
  for (const auto& [key, value] : settings) {
    if (key == "env" || key == "algo" || key == "size") continue;
    apply_setting(cfg, key, value);
  }
  return cfg;
}

std::map<std::string, std::string> parse_settings_line(const std::string& line) {
  std::map<std::string, std::string> out;
  std::istringstream in(line);
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + token + "'");
    std::string key = token.substr(0, eq);
    while (key.rfind("--", 0) == 0) key.erase(0, 2);
    out[key] = token.substr(eq + 1);
  }
  return out;
}

double RunLog::total_seconds() const {
  double ms = 0;
  for (const auto& step : steps) ms += step.step_ms;
  return ms / 1000.0;
}

int RunLog::over_budget_steps(double limit_ms) const {
  return static_cast<int>(std::count_if(steps.begin(), steps.end(), [&](const StepRecord& r) { return r.step_ms > limit_ms; }));
}

std::unique_ptr<Planner> make_planner(const ExperimentConfig& cfg, Index n_states) {
  switch (cfg.algo) {
    case Algorithm::SparserPi:
    case Algorithm::SparserRtdp:
      return std::make_unique<SparserPlanner>(cfg.dss_config());
    case Algorithm::Thompson:
      return std::make_unique<ThompsonPlanner>(PolicyGenerator::policy_iteration(cfg.pi_tolerance));
    case Algorithm::SparseSampling:
      return std::make_unique<SparseSamplingPlanner>(cfg.width, cfg.depth);
    case Algorithm::Fhts:
      (void)n_states;
      return std::make_unique<FhtsPlanner>(cfg.depth);
  }
  throw ConfigError("unknown algorithm");
}

envs::Environment make_environment(const ExperimentConfig& cfg) {
  try {
    return envs::make_environment(cfg.env, cfg.size, cfg.discount);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

DirichletBelief<double> initial_belief(const ExperimentConfig& cfg, const envs::Environment& env) {
  const double prior = cfg.prior_strength.value_or(1.0 / static_cast<double>(env.n_states()));
  return DirichletBelief<double>::symmetric(env.true_model().rewards(), cfg.discount, prior);
}

RunLog run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, int run_id,
                      const std::optional<DirichletBelief<double>>& prior) {
  if (cfg.horizon < 1) throw ConfigError("T must be >= 1");
  const envs::Environment env = make_environment(cfg);
  const auto planner = make_planner(cfg, env.n_states());
  DirichletBelief<double> belief = prior ? *prior : initial_belief(cfg, env);
  if (belief.n_states() != env.n_states() || belief.n_actions() != env.n_actions())
    throw ConfigError("prior belief does not match the environment");

  const RandomSource root(seed);
  const RandomSource planner_src = root.child(kPlannerStream);
  Engine env_rng = root.child(kEnvStream).engine();
  const auto budget = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double, std::milli>(cfg.time_limit_ms));

  RunLog log;
  log.run_id = run_id;
  log.config_hash = cfg.hash();
  log.steps.reserve(static_cast<std::size_t>(cfg.horizon));
  envs::EnvState state{env.start_state()};
  double cumulative = 0;
  for (int t = 1; t <= cfg.horizon; ++t) {
    const auto started = Clock::now();
    const Deadline deadline = cfg.record_timing ? Deadline(started + budget) : std::nullopt;
    const PlannerDecision decision =
        planner->choose(HyperState<double>(state.current, belief), planner_src.child(static_cast<std::uint64_t>(t)), deadline);
    const double elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - started).count();

    const auto step = envs::env_step(env, state, decision.action, env_rng);
    belief = update_posterior(belief, state.current, decision.action, step.next.current);
    cumulative += step.reward;
    // an early return on the deadline always lands past the limit, so step_ms alone flags overruns
    log.steps.push_back({t, state.current, decision.action, step.reward, cumulative, cfg.record_timing ? elapsed_ms : 0.0});
    state = step.next;
  }
  return log;
}

std::vector<RunLog> run_batch(const ExperimentConfig& cfg, std::uint64_t first_seed, int n) {
  std::vector<RunLog> logs(static_cast<std::size_t>(n));
  const int jobs = std::max(1, std::min(cfg.jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) logs[static_cast<std::size_t>(i)] = run_experiment(cfg, first_seed + static_cast<std::uint64_t>(i), i);
    return logs;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += jobs)
          logs[static_cast<std::size_t>(i)] = run_experiment(cfg, first_seed + static_cast<std::uint64_t>(i), i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& worker : workers) worker.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return logs;
}

SummaryStats summarize(const std::vector<RunLog>& logs) {
  SummaryStats stats;
  stats.n_runs = static_cast<int>(logs.size());
  if (logs.empty()) return stats;
  const double n = static_cast<double>(logs.size());
  double total = 0;
  double seconds = 0;
  for (const auto& log : logs) {
    total += log.total_reward();
    seconds += log.total_seconds();
  }
  stats.mean_total = total / n;
  stats.sec_per_episode = seconds / n;
  if (logs.size() >= 2) {
    double squares = 0;
    for (const auto& log : logs) squares += (log.total_reward() - stats.mean_total) * (log.total_reward() - stats.mean_total);
    stats.stderr_total = std::sqrt(squares / (n - 1.0)) / std::sqrt(n);
  }
  return stats;
}

Evaluation evaluate(const ExperimentConfig& cfg, int n_eval_runs) {
  if (n_eval_runs < 2) throw ConfigError("evaluation needs at least two runs");
  Evaluation result;
  result.logs = run_batch(cfg, cfg.base_seed, n_eval_runs);
  result.stats = summarize(result.logs);
  return result;
}

TuningResult tune_hyperparameters(const std::vector<ExperimentConfig>& grid, int n_tuning_runs) {
  if (grid.empty()) throw ConfigError("tuning grid is empty");
  if (n_tuning_runs < 1) throw ConfigError("need at least one tuning run");
  TuningResult result{0, grid.front(), {}, {}, {}};
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& candidate = grid[i];
    const auto logs = run_batch(candidate, candidate.base_seed + kTuningSeedOffset, n_tuning_runs);
    double total = 0;
    double ms = 0;
    std::size_t steps = 0;
    for (const auto& log : logs) {
      total += log.total_reward();
      ms += log.total_seconds() * 1000.0;
      steps += log.steps.size();
    }
    const double mean_ms = steps ? ms / static_cast<double>(steps) : 0.0;
    const bool excluded = candidate.record_timing && mean_ms > candidate.time_limit_ms;
    result.total_reward.push_back(total);
    result.mean_step_ms.push_back(mean_ms);
    result.excluded.push_back(excluded);
    if (!excluded && (!best || total > result.total_reward[*best])) best = i;
  }
  if (!best) throw ConfigError("every tuning candidate exceeded its time budget");
  result.selected = *best;
  result.config = grid[*best];
  return result;
}

std::vector<double> moving_average(const RunLog& log, int window) {
  const int T = static_cast<int>(log.steps.size());
  if (window < 1 || window > std::max(T, 1)) throw std::invalid_argument("moving_average: need 1 <= window <= T");
  std::vector<double> out(static_cast<std::size_t>(T));
  // differences of cumulative sums; cum_reward is the raw prefix sum
  for (int t = 0; t < T; ++t) {
    const int first = std::max(0, t - window + 1);
    const double before = first == 0 ? 0.0 : log.steps[static_cast<std::size_t>(first - 1)].cum_reward;
    out[static_cast<std::size_t>(t)] = (log.steps[static_cast<std::size_t>(t)].cum_reward - before) / (t - first + 1);
  }
  return out;
}

double optimal_average_reward(const envs::Environment& env) {
  const Mdp<double>& model = env.true_model();
  const DeterministicPolicy policy = long_run_optimal_policy(model);
  const auto [kernel, unused] = policy_chain(model, policy);
  Vector<double> raw(model.n_states());
  for (Index s = 0; s < model.n_states(); ++s) raw(s) = env.raw_rewards()(s, policy(s));
  const int period = env.episode_length().value_or(1);
  const int steps = period * ((20000 + period - 1) / period);
  Eigen::RowVectorXd distribution = Eigen::RowVectorXd::Zero(model.n_states());
  distribution(env.start_state()) = 1.0;
  double total = 0;
  for (int t = 0; t < steps; ++t) {
    total += distribution.dot(raw);
    distribution = distribution * kernel;
  }
  return total / steps;
}

std::vector<double> regret_series(const RunLog& log, double rho_star) {
  std::vector<double> out;
  out.reserve(log.steps.size());
  for (const auto& step : log.steps) out.push_back(step.t * rho_star - step.cum_reward);
  return out;
}

std::vector<double> regret_series(const RunLog& log, const envs::Environment& env) {
  return regret_series(log, optimal_average_reward(env));
}

}  // namespace dss::harness
