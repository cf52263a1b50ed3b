#pragma once

#include "dss/harness.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace dss::harness {

inline constexpr std::string_view kCsvHeader = "run_id,t,state,action,reward,cum_reward,step_ms";
inline constexpr std::string_view kSummaryHeader = "mean_total,stderr,sec_per_episode,config_hash";

/// Shortest decimal that parses back to the same double.
std::string format_real(double x);

void write_csv(std::ostream& out, const std::vector<RunLog>& logs);

/// Groups rows by run_id in order of first appearance. Throws ConfigError on a
/// bad header, malformed row, or t not strictly increasing from 1 within a run.
std::vector<RunLog> read_csv(std::istream& in, std::uint64_t config_hash = 0);

void write_summary(std::ostream& out, const SummaryStats& stats, std::uint64_t config_hash);

struct SummaryLine {
  SummaryStats stats;
  std::uint64_t config_hash = 0;
};
SummaryLine read_summary(std::istream& in);

std::string hash_hex(std::uint64_t h);

}  // namespace dss::harness
