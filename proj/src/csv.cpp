#include "dss/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace dss::harness {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t begin = 0;
  while (true) {
    const auto comma = line.find(',', begin);
    fields.push_back(line.substr(begin, comma - begin));
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  return fields;
}

template <typename T>
T field(const std::string& text, int line_no, int base = 10) {
  T out{};
  const char* end = text.data() + text.size();
  std::from_chars_result result;
  if constexpr (std::is_floating_point_v<T>) result = std::from_chars(text.data(), end, out);
  else result = std::from_chars(text.data(), end, out, base);
  if (text.empty() || result.ec != std::errc() || result.ptr != end)
    throw ConfigError("line " + std::to_string(line_no) + ": bad field '" + text + "'");
  return out;
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

std::string format_real(double x) {
  std::array<char, 32> buf{};
  const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), result.ptr);
}

std::string hash_hex(std::uint64_t h) {
  std::array<char, 16> buf{};
  buf.fill('0');
  std::array<char, 16> digits{};
  const auto result = std::to_chars(digits.data(), digits.data() + digits.size(), h, 16);
  const auto n = static_cast<std::size_t>(result.ptr - digits.data());
  std::copy(digits.data(), result.ptr, buf.data() + (16 - n));
  return std::string(buf.data(), buf.size());
}

void write_csv(std::ostream& out, const std::vector<RunLog>& logs) {
  out << kCsvHeader << '\n';
  for (const auto& log : logs) {
    for (const auto& r : log.steps) {
      out << log.run_id << ',' << r.t << ',' << r.state << ',' << r.action << ',' << format_real(r.reward) << ','
          << format_real(r.cum_reward) << ',' << format_real(r.step_ms) << '\n';
    }
  }
}

std::vector<RunLog> read_csv(std::istream& in, std::uint64_t config_hash) {
  std::string line;
  if (!next_line(in, line) || line != kCsvHeader) throw ConfigError("csv: missing or wrong header");
  std::vector<RunLog> logs;
  int line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 7) throw ConfigError("line " + std::to_string(line_no) + ": expected 7 fields");
    const int run_id = field<int>(f[0], line_no);
    StepRecord r{field<int>(f[1], line_no), field<Index>(f[2], line_no), field<Index>(f[3], line_no),
                 field<double>(f[4], line_no), field<double>(f[5], line_no), field<double>(f[6], line_no)};
    auto it = std::find_if(logs.begin(), logs.end(), [&](const RunLog& l) { return l.run_id == run_id; });
    if (it == logs.end()) {
      logs.push_back(RunLog{run_id, config_hash, {}});
      it = std::prev(logs.end());
    }
    const int expected = it->steps.empty() ? 1 : it->steps.back().t + 1;
    if (r.t != expected) throw ConfigError("line " + std::to_string(line_no) + ": t out of sequence");
    it->steps.push_back(r);
  }
  return logs;
}

void write_summary(std::ostream& out, const SummaryStats& stats, std::uint64_t config_hash) {
  out << kSummaryHeader << '\n'
      << format_real(stats.mean_total) << ',' << format_real(stats.stderr_total) << ',' << format_real(stats.sec_per_episode)
      << ',' << hash_hex(config_hash) << '\n';
}

SummaryLine read_summary(std::istream& in) {
  std::string line;
  if (!next_line(in, line) || line != kSummaryHeader) throw ConfigError("summary: missing or wrong header");
  if (!next_line(in, line)) throw ConfigError("summary: missing values");
  const auto f = split(line);
  if (f.size() != 4) throw ConfigError("summary: expected 4 fields");
  SummaryLine s;
  s.stats.mean_total = field<double>(f[0], 2);
  s.stats.stderr_total = field<double>(f[1], 2);
  s.stats.sec_per_episode = field<double>(f[2], 2);
  s.config_hash = field<std::uint64_t>(f[3], 2, 16);
  return s;
}

}  // namespace dss::harness
