#include "dss/csv.hpp"
#include "dss/harness.hpp"
#include "dss/solvers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace dss;
using namespace dss::harness;

namespace {

RunLog make_log(const std::vector<double>& rewards, int run_id = 0) {
  RunLog log;
  log.run_id = run_id;
  double cum = 0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    cum += rewards[i];
    log.steps.push_back({static_cast<int>(i) + 1, 0, 0, rewards[i], cum, 0.5});
  }
  return log;
}

ExperimentConfig quick(const std::string& env, Algorithm algo, int T) {
  auto cfg = default_config(env, algo);
  cfg.horizon = T;
  cfg.record_timing = false;
  return cfg;
}

// Stationary mean reward of always-forward on the chain, from pi P = pi.
double chain_forward_average() {
  const auto env = envs::make_chain();
  Eigen::MatrixXd P(5, 5);
  Eigen::VectorXd r(5);
  for (Index s = 0; s < 5; ++s) {
    for (Index j = 0; j < 5; ++j) P(s, j) = env.true_model().transition(s, 0, j);
    r(s) = env.raw_rewards()(s, 0);
  }
  Eigen::MatrixXd system = (Eigen::MatrixXd::Identity(5, 5) - P).transpose();
  system.row(4).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(5);
  rhs(4) = 1;
  const Eigen::VectorXd pi = system.fullPivLu().solve(rhs);
  return pi.dot(r);
}

}  // namespace

TEST(Config, ProtocolDefaultsPerEnvironment) {
  const auto chain = default_config("chain", Algorithm::SparserPi);
  EXPECT_EQ(chain.horizon, 1000);
  EXPECT_EQ(chain.time_limit_ms, 250);
  EXPECT_EQ(std::tie(chain.n_policies, chain.n_samples, chain.steps_per_stage, chain.n_stages), std::make_tuple(4, 4, 5, 2));
  const auto loop = default_config("doubleloop", Algorithm::SparserRtdp);
  EXPECT_EQ(loop.time_limit_ms, 250);
  EXPECT_EQ(std::tie(loop.n_policies, loop.n_samples, loop.steps_per_stage, loop.n_stages), std::make_tuple(4, 4, 18, 2));
  EXPECT_EQ(loop.rtdp_depth, 15);
  const auto grid5 = default_config("grid5", Algorithm::SparserPi);
  EXPECT_EQ(grid5.horizon, 1000);
  EXPECT_EQ(grid5.time_limit_ms, 1000);
  const auto grid10 = default_config("grid10", Algorithm::SparserRtdp);
  EXPECT_EQ(grid10.horizon, 2000);
  EXPECT_EQ(grid10.rtdp_depth, 50);
  EXPECT_EQ(std::tie(grid10.n_policies, grid10.n_samples, grid10.steps_per_stage, grid10.n_stages), std::make_tuple(4, 2, 200, 2));
  const auto maze = default_config("maze", Algorithm::SparserPi);
  EXPECT_EQ(maze.horizon, 20000);
  EXPECT_EQ(maze.time_limit_ms, 1500);
  EXPECT_EQ(std::tie(maze.n_policies, maze.n_samples, maze.steps_per_stage, maze.n_stages), std::make_tuple(4, 2, 100, 1));
  EXPECT_THROW(default_config("pong", Algorithm::Fhts), ConfigError);
}

TEST(Config, SettingsOverrideDefaultsAndValidate) {
  auto cfg = build_config({{"env", "grid5"}, {"algo", "sparse-sampling"}, {"width", "3"}, {"T", "50"}, {"prior", "0.5"}});
  EXPECT_EQ(cfg.algo, Algorithm::SparseSampling);
  EXPECT_EQ(cfg.width, 3);
  EXPECT_EQ(cfg.horizon, 50);
  EXPECT_EQ(cfg.prior_strength, 0.5);
  EXPECT_EQ(cfg.time_limit_ms, 1000);
  EXPECT_THROW(build_config({{"algo", "fhts"}}), ConfigError);
  EXPECT_THROW(build_config({{"env", "chain"}, {"algo", "bamcp"}}), ConfigError);
  for (const auto& [key, value] : std::vector<std::pair<std::string, std::string>>{
           {"T", "0"}, {"T", "ten"}, {"T", "5x"}, {"gamma", "1"}, {"prior", "-1"}, {"time-limit-ms", "0"},
           {"timing", "cpu"}, {"K", "0"}, {"Np", ""}, {"colour", "red"}}) {
    ExperimentConfig c;
    EXPECT_THROW(apply_setting(c, key, value), ConfigError) << key << '=' << value;
  }
}

TEST(Config, SettingsLineParsing) {
  const auto settings = parse_settings_line("  K=10 --H=2\tNp=8 ");
  EXPECT_EQ(settings.size(), 3u);
  EXPECT_EQ(settings.at("K"), "10");
  EXPECT_EQ(settings.at("H"), "2");
  EXPECT_THROW(parse_settings_line("K 10"), ConfigError);
  EXPECT_THROW(parse_settings_line("=3"), ConfigError);
}

TEST(Config, HashTracksResultAffectingFieldsOnly) {
  auto a = default_config("chain", Algorithm::SparserPi);
  auto b = a;
  b.output = "elsewhere.csv";
  b.n_runs = 7;
  b.jobs = 3;
  EXPECT_EQ(a.hash(), b.hash());
  b.steps_per_stage = 6;
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.canonical(), default_config("chain", Algorithm::SparserPi).canonical());
}

TEST(RunExperiment, RecordsEveryStepWithPrefixSums) {
  const auto cfg = quick("chain", Algorithm::SparserPi, 40);
  const auto log = run_experiment(cfg, 3, 5);
  ASSERT_EQ(log.steps.size(), 40u);
  EXPECT_EQ(log.run_id, 5);
  EXPECT_EQ(log.config_hash, cfg.hash());
  double cum = 0;
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    EXPECT_EQ(log.steps[i].t, static_cast<int>(i) + 1);
    cum += log.steps[i].reward;
    EXPECT_NEAR(log.steps[i].cum_reward, cum, 1e-9);
    EXPECT_EQ(log.steps[i].step_ms, 0.0);
    EXPECT_TRUE(log.steps[i].action == 0 || log.steps[i].action == 1);
  }
  EXPECT_EQ(log.steps.front().state, 0);
}

TEST(RunExperiment, SameSeedSameLog) {
  for (auto algo : {Algorithm::SparserPi, Algorithm::SparserRtdp, Algorithm::Thompson, Algorithm::SparseSampling, Algorithm::Fhts}) {
    auto cfg = quick("doubleloop", algo, 25);
    cfg.depth = 2;
    EXPECT_EQ(run_experiment(cfg, 11), run_experiment(cfg, 11)) << to_string(algo);
  }
  const auto cfg = quick("grid5", Algorithm::Thompson, 60);
  EXPECT_NE(run_experiment(cfg, 1), run_experiment(cfg, 2));
}

TEST(RunExperiment, SingleStepWithoutRewardIsZero) {
  const auto log = run_experiment(quick("grid5", Algorithm::SparserPi, 1), 0);
  ASSERT_EQ(log.steps.size(), 1u);
  EXPECT_EQ(log.total_reward(), 0.0);
}

TEST(RunExperiment, ThompsonOnPinnedChainIsNearOptimal) {
  const auto env = envs::make_chain();
  const auto cfg = quick("chain", Algorithm::Thompson, 1000);
  const auto prior = DirichletBelief<double>::concentrated(env.true_model(), 1e6, 1.0 / 5);
  const auto log = run_experiment(cfg, 17, 0, prior);
  const double rho = optimal_average_reward(env);
  EXPECT_NEAR(log.total_reward() / 1000, rho, 0.05 * rho);
}

TEST(RunExperiment, OverBudgetStepsAreFlaggedNotFatal) {
  auto cfg = default_config("chain", Algorithm::SparserPi);
  cfg.horizon = 5;
  cfg.time_limit_ms = 1e-6;
  const auto log = run_experiment(cfg, 0);
  ASSERT_EQ(log.steps.size(), 5u);
  EXPECT_EQ(log.over_budget_steps(cfg.time_limit_ms), 5);
  EXPECT_EQ(log.over_budget_steps(1e9), 0);
}

TEST(RunExperiment, RejectsMismatchedPrior) {
  const auto cfg = quick("chain", Algorithm::Thompson, 3);
  const auto wrong = DirichletBelief<double>::symmetric(Matrix<double>::Zero(3, 2), 0.95, 1.0);
  EXPECT_THROW(run_experiment(cfg, 0, 0, wrong), ConfigError);
}

TEST(Batch, ThreadedMatchesSerialInRunOrder) {
  auto cfg = quick("doubleloop", Algorithm::Thompson, 30);
  const auto serial = run_batch(cfg, 100, 4);
  cfg.jobs = 3;
  const auto threaded = run_batch(cfg, 100, 4);
  EXPECT_EQ(serial, threaded);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(serial[static_cast<std::size_t>(i)].run_id, i);
    EXPECT_EQ(serial[static_cast<std::size_t>(i)], run_experiment(cfg, 100 + static_cast<std::uint64_t>(i), i));
  }
}

TEST(Summary, ConstantAndZeroRewards) {
  const auto ones = std::vector<RunLog>{make_log(std::vector<double>(10, 1.0), 0), make_log(std::vector<double>(10, 1.0), 1)};
  const auto s = summarize(ones);
  EXPECT_EQ(s.mean_total, 10.0);
  EXPECT_EQ(s.stderr_total, 0.0);
  EXPECT_EQ(s.n_runs, 2);
  const auto zeros = summarize({make_log(std::vector<double>(5, 0.0)), make_log(std::vector<double>(5, 0.0))});
  EXPECT_EQ(zeros.mean_total, 0.0);
  EXPECT_EQ(zeros.stderr_total, 0.0);
}

TEST(Summary, StandardErrorAndTimeAccounting) {
  const std::vector<RunLog> logs = {make_log({1, 2}), make_log({0, 0}), make_log({4, 1, 1})};
  const auto s = summarize(logs);
  const double mean = (3.0 + 0.0 + 6.0) / 3;
  const double var = ((3 - mean) * (3 - mean) + mean * mean + (6 - mean) * (6 - mean)) / 2;
  EXPECT_NEAR(s.mean_total, mean, 1e-12);
  EXPECT_NEAR(s.stderr_total, std::sqrt(var / 3), 1e-12);
  EXPECT_NEAR(s.sec_per_episode, (2 + 2 + 3) * 0.5 / 1000 / 3, 1e-15);
}

TEST(Evaluate, UsesBaseSeedsAndNeedsTwoRuns) {
  auto cfg = quick("doubleloop", Algorithm::Thompson, 20);
  cfg.base_seed = 40;
  EXPECT_THROW(evaluate(cfg, 1), ConfigError);
  const auto result = evaluate(cfg, 3);
  ASSERT_EQ(result.logs.size(), 3u);
  EXPECT_EQ(result.logs[2], run_experiment(cfg, 42, 2));
  EXPECT_NEAR(result.stats.mean_total, summarize(result.logs).mean_total, 0);
}

TEST(Tune, SingletonAndTies) {
  const auto cfg = quick("doubleloop", Algorithm::Thompson, 20);
  EXPECT_EQ(tune_hyperparameters({cfg}, 2).selected, 0u);
  const auto tie = tune_hyperparameters({cfg, cfg, cfg}, 2);
  EXPECT_EQ(tie.selected, 0u);
  EXPECT_EQ(tie.total_reward[0], tie.total_reward[2]);
  EXPECT_THROW(tune_hyperparameters({}, 2), ConfigError);
}

TEST(Tune, UsesSeedsDisjointFromEvaluation) {
  auto cfg = quick("grid5", Algorithm::Thompson, 30);
  const auto tuned = tune_hyperparameters({cfg}, 2);
  const double expect = run_experiment(cfg, kTuningSeedOffset).total_reward() + run_experiment(cfg, kTuningSeedOffset + 1).total_reward();
  EXPECT_EQ(tuned.total_reward[0], expect);
}

TEST(Tune, ExcludesOverBudgetCandidates) {
  auto fast = default_config("doubleloop", Algorithm::Thompson);
  fast.horizon = 10;
  auto slow = default_config("doubleloop", Algorithm::SparserPi);
  slow.horizon = 10;
  slow.time_limit_ms = 1e-6;
  const auto tuned = tune_hyperparameters({slow, fast}, 2);
  EXPECT_TRUE(tuned.excluded[0]);
  EXPECT_FALSE(tuned.excluded[1]);
  EXPECT_EQ(tuned.selected, 1u);
  EXPECT_THROW(tune_hyperparameters({slow}, 1), ConfigError);
}

TEST(Tune, DominatedShortLookaheadIsNotSelected) {
  // same planner on DeepSea; a one-step lookahead never sees the treasure
  auto deep = default_config("deepsea", Algorithm::SparserPi, 5);
  deep.horizon = 60;
  deep.record_timing = false;
  deep.n_policies = 2;
  deep.n_samples = 1;
  deep.n_stages = 1;
  deep.steps_per_stage = 5;
  auto myopic = deep;
  myopic.steps_per_stage = 1;
  int dominated = 0;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    deep.base_seed = myopic.base_seed = rep * 1000;
    dominated += tune_hyperparameters({myopic, deep}, 10).selected == 0;
  }
  EXPECT_LE(dominated, 1);
}

TEST(MovingAverage, WindowOneConstantAndNaiveOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0, 1);
  std::vector<double> rewards(300);
  for (auto& r : rewards) r = unit(rng);
  const auto log = make_log(rewards);
  const auto raw = moving_average(log, 1);
  for (std::size_t i = 0; i < rewards.size(); ++i) EXPECT_NEAR(raw[i], rewards[i], 1e-12);
  const auto flat = moving_average(make_log(std::vector<double>(50, 0.7)), 20);
  for (double v : flat) EXPECT_NEAR(v, 0.7, 1e-12);
  for (int window : {7, 64, 300}) {
    const auto fast = moving_average(log, window);
    for (int t = 0; t < 300; ++t) {
      double sum = 0;
      int n = 0;
      for (int k = std::max(0, t - window + 1); k <= t; ++k, ++n) sum += rewards[static_cast<std::size_t>(k)];
      EXPECT_NEAR(fast[static_cast<std::size_t>(t)], sum / n, 1e-9);
    }
  }
  EXPECT_THROW(moving_average(log, 0), std::invalid_argument);
  EXPECT_THROW(moving_average(log, 301), std::invalid_argument);
}

TEST(OptimalAverage, MatchesHandDerivedGains) {
  EXPECT_NEAR(optimal_average_reward(envs::make_chain()), chain_forward_average(), 1e-3);
  EXPECT_NEAR(optimal_average_reward(envs::make_double_loop()), 0.4, 1e-3);
  EXPECT_NEAR(optimal_average_reward(envs::make_grid(5)), 1.0 / 8, 1e-3);
  // the column is clamped at 0, so one of the ten moves can be a free left
  EXPECT_NEAR(optimal_average_reward(envs::make_deep_sea(10)), (1.0 - 9 * 0.01 / 10) / 10, 1e-9);
}

TEST(Regret, ZeroRewardsGrowLinearly) {
  const auto log = make_log(std::vector<double>(100, 0.0));
  const auto regret = regret_series(log, envs::make_double_loop());
  for (std::size_t i = 0; i < 100; ++i) EXPECT_NEAR(regret[i], (i + 1) * 0.4, 1e-9);
}

TEST(Regret, NonDecreasingWhenRewardsStayBelowGain) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0, 0.3);
  std::vector<double> rewards(200);
  for (auto& r : rewards) r = unit(rng);
  const auto regret = regret_series(make_log(rewards), 0.3);
  for (std::size_t i = 1; i < regret.size(); ++i) EXPECT_GE(regret[i], regret[i - 1]);
}

TEST(Regret, OptimalPolicyStaysBounded) {
  const auto env = envs::make_double_loop();
  const auto pi = policy_iteration(env.true_model(), 1e-10);
  Engine rng(1);
  std::vector<double> rewards;
  envs::EnvState state{env.start_state()};
  for (int t = 0; t < 5000; ++t) {
    const auto step = envs::env_step(env, state, pi(state.current), rng);
    rewards.push_back(step.reward);
    state = step.next;
  }
  const auto regret = regret_series(make_log(rewards), env);
  for (double r : regret) EXPECT_LE(std::abs(r), 2.0 + 1e-9);
}

TEST(Csv, RoundTripsExactly) {
  auto a = make_log({0.1, 0.2, 1.0 / 3}, 0);
  auto b = make_log({2, 0, 0, 2}, 1);
  b.steps[2].step_ms = 12.345678901234;
  b.steps[1].state = 8;
  b.steps[1].action = 1;
  std::stringstream buffer;
  write_csv(buffer, {a, b});
  const std::string text = buffer.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "run_id,t,state,action,reward,cum_reward,step_ms");
  EXPECT_EQ(text.find('\r'), std::string::npos);
  const auto back = read_csv(buffer);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], a);
  EXPECT_EQ(back[1], b);
}

TEST(Csv, RejectsMalformedInput) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
  };
  const std::string header = "run_id,t,state,action,reward,cum_reward,step_ms\n";
  EXPECT_NO_THROW(parse(header + "0,1,0,0,1,1,0\n"));
  EXPECT_THROW(parse("run,t\n"), ConfigError);
  EXPECT_THROW(parse(header + "0,1,0,0,1,1\n"), ConfigError);
  EXPECT_THROW(parse(header + "0,2,0,0,1,1,0\n"), ConfigError);
  EXPECT_THROW(parse(header + "0,1,0,0,1,1,0\n0,1,0,0,1,1,0\n"), ConfigError);
  EXPECT_THROW(parse(header + "0,1,0,0,one,1,0\n"), ConfigError);
}

TEST(Csv, SummaryRoundTrip) {
  SummaryStats s{370.06, 4.71, 2.72, 100};
  std::stringstream buffer;
  write_summary(buffer, s, 0xabcULL);
  EXPECT_EQ(buffer.str(), "mean_total,stderr,sec_per_episode,config_hash\n370.06,4.71,2.72,0000000000000abc\n");
  const auto back = read_summary(buffer);
  EXPECT_EQ(back.stats.mean_total, 370.06);
  EXPECT_EQ(back.stats.stderr_total, 4.71);
  EXPECT_EQ(back.stats.sec_per_episode, 2.72);
  EXPECT_EQ(back.config_hash, 0xabcULL);
  EXPECT_EQ(hash_hex(~0ULL), "ffffffffffffffff");
}
