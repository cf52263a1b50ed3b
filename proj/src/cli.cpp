#include "dss/cli.hpp"

#include "dss/csv.hpp"
#include "dss/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace dss::harness {
namespace {

constexpr int kUsageError = 2;
constexpr int kDefaultEvalRuns = 100;

struct SettingFlag {
  const char* flag;
  const char* key;
  const char* type;
  const char* help;
};

// values are validated by apply_setting
const std::vector<SettingFlag> kSettingFlags = {
    {"--env", "env", "NAME", "environment"},
    {"--size", "size", "INT", "side length for grid / deepsea"},
    {"--algo", "algo", "NAME", "planner"},
    {"--T", "T", "INT", "steps per run"},
    {"--gamma", "gamma", "REAL", "planning discount (default 0.95)"},
    {"--prior", "prior", "REAL", "Dirichlet prior strength (default 1/|S|)"},
    {"--K", "K", "INT", "steps per stage"},
    {"--H", "H", "INT", "stages"},
    {"--Np", "Np", "INT", "candidate policies per node"},
    {"--Ns", "Ns", "INT", "rollouts per candidate"},
    {"--width", "width", "INT", "sparse-sampling width"},
    {"--depth", "depth", "INT", "sparse-sampling / fhts depth"},
    {"--rtdp-depth", "rtdp-depth", "INT", "RTDP trajectory length"},
    {"--rtdp-trajectories", "rtdp-trajectories", "INT", "RTDP trajectories per candidate"},
    {"--pi-tolerance", "pi-tolerance", "REAL", "policy-evaluation tolerance"},
    {"--time-limit-ms", "time-limit-ms", "REAL", "per-step planning budget"},
    {"--runs", "runs", "INT", "number of runs (eval default 100)"},
    {"--seed", "seed", "INT", "base seed; run i uses seed + i"},
    {"--jobs", "jobs", "INT", "worker threads for independent runs"},
    {"--timing", "timing", "MODE", "wall: enforce budgets and record step_ms; off: reproducible output"},
};

std::vector<std::map<std::string, std::string>> read_grid(const std::string& path,
                                                          const std::map<std::string, std::string>& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read grid file '" + path + "'");
  std::vector<std::map<std::string, std::string>> grid;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    auto settings = base;
    for (auto& [key, value] : parse_settings_line(line)) settings[key] = value;
    grid.push_back(std::move(settings));
  }
  if (grid.empty()) throw ConfigError("grid file '" + path + "' has no configurations");
  return grid;
}

void report(std::ostream& out, const std::string& label, const SummaryStats& stats, std::uint64_t hash) {
  out << label << " runs=" << stats.n_runs << " mean_total=" << format_real(stats.mean_total)
      << " stderr=" << format_real(stats.stderr_total) << " sec_per_episode=" << format_real(stats.sec_per_episode)
      << " config_hash=" << hash_hex(hash) << '\n';
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayes-adaptive planning experiments", "sparser"};
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  for (const auto& f : kSettingFlags) options[f.key] = app.add_option(f.flag, values[f.key], f.help)->type_name(f.type);
  options["env"]->required()->check(CLI::IsMember({"chain", "doubleloop", "grid5", "grid10", "grid", "maze", "deepsea"}));
  options["algo"]->required()->check(CLI::IsMember({"sparser-pi", "sparser-rtdp", "thompson", "sparse-sampling", "fhts"}));
  options["timing"]->check(CLI::IsMember({"wall", "off"}));
  std::string output;
  app.add_option("--out", output, "CSV output path; the summary goes to <out>.summary")->required();
  std::string mode = "run";
  app.add_option("--mode", mode, "run (default), eval, or tune then eval")->check(CLI::IsMember({"run", "tune", "eval"}));
  std::string grid_file;
  app.add_option("--grid-file", grid_file, "tuning grid, one key=value configuration per line");
  int tune_runs = 10;
  app.add_option("--tune-runs", tune_runs, "tuning runs per grid entry")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << '\n' << app.help();
    return kUsageError;
  }

  try {
    std::map<std::string, std::string> settings;
    for (const auto& [key, option] : options)
      if (option->count() > 0) settings[key] = values[key];
    // a plain run is the reproducibility mode: no wall clock in the output
    if (!settings.contains("timing")) settings["timing"] = mode == "run" ? "off" : "wall";
    const bool runs_given = settings.contains("runs");

    ExperimentConfig cfg;
    if (mode == "tune") {
      if (grid_file.empty()) throw ConfigError("--mode tune needs --grid-file");
      std::vector<ExperimentConfig> grid;
      for (const auto& entry : read_grid(grid_file, settings)) grid.push_back(build_config(entry));
      const auto tuned = tune_hyperparameters(grid, tune_runs);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        out << (i == tuned.selected ? "* " : "  ") << i << " total=" << format_real(tuned.total_reward[i])
            << " mean_step_ms=" << format_real(tuned.mean_step_ms[i]) << (tuned.excluded[i] ? " excluded" : "") << " "
            << grid[i].canonical() << '\n';
      }
      cfg = tuned.config;
    } else {
      cfg = build_config(settings);
    }
    cfg.output = output;

    std::ofstream csv(output, std::ios::binary);
    if (!csv) throw ConfigError("cannot write '" + output + "'");
    std::ofstream summary(output + ".summary", std::ios::binary);
    if (!summary) throw ConfigError("cannot write '" + output + ".summary'");

    std::vector<RunLog> logs;
    if (mode == "run") {
      logs = run_batch(cfg, cfg.base_seed, cfg.n_runs);
    } else {
      logs = evaluate(cfg, runs_given ? cfg.n_runs : kDefaultEvalRuns).logs;
    }
    const SummaryStats stats = summarize(logs);
    write_csv(csv, logs);
    write_summary(summary, stats, cfg.hash());
    if (!csv.flush() || !summary.flush()) throw ConfigError("write to '" + output + "' failed");
    report(out, mode, stats, cfg.hash());
    return 0;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kUsageError;
  }
}

}  // namespace dss::harness
