#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "augur/error.hpp"

namespace augur {

// One amortized GEMM measurement.
struct TimingSample {
  std::int64_t n = 0;
  std::int64_t m = 0;
  std::int64_t k = 0;
  double time_ms = 0.0;  // per iteration
  std::int64_t iterations = 1;
  std::string processor;

  friend bool operator==(const TimingSample&, const TimingSample&) = default;
};

enum class ProcessorKind { CpuLike, GpuLike };

struct DeviceProfile {
  std::string processor_label;
  ProcessorKind kind = ProcessorKind::CpuLike;
  std::vector<TimingSample> samples;
};

inline constexpr std::string_view kProfileHeader = "n,m,k,time_ms,iterations,processor";

// Fixed-point with six fractional digits; plenty for microsecond clocks.
inline std::string format_time_ms(double ms) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", ms);
  return buf;
}

inline std::string write_profile_csv(const std::vector<TimingSample>& samples) {
  std::string out(kProfileHeader);
  out += '\n';
  for (const auto& s : samples) {
    if (s.processor.find_first_of(",\r\n") != std::string::npos)
      throw FormatError("processor label may not contain ',' or line breaks: '" + s.processor + "'");
    out += std::to_string(s.n) + ',' + std::to_string(s.m) + ',' + std::to_string(s.k) + ',' +
           format_time_ms(s.time_ms) + ',' + std::to_string(s.iterations) + ',' + s.processor + '\n';
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split_csv_row(std::string_view row) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = row.find(',', start);
    cells.push_back(row.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

template <typename T>
T parse_number(std::string_view cell, std::size_t line, const char* column) {
  T value{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw FormatError("profile line " + std::to_string(line) + ": bad " + column + " '" +
                      std::string(cell) + "'");
  return value;
}

}  // namespace detail

// Parses the profile CSV. Rejects malformed rows, non-positive values and
// repeated (n, m, k) triples.
inline std::vector<TimingSample> read_profile_csv(std::string_view text) {
  std::vector<TimingSample> samples;
  std::set<std::tuple<std::int64_t, std::int64_t, std::int64_t>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool header_seen = false;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != kProfileHeader)
        throw FormatError("profile must start with header '" + std::string(kProfileHeader) + "'");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto cells = detail::split_csv_row(line);
    if (cells.size() != 6)
      throw FormatError("profile line " + std::to_string(line_no) + ": expected 6 columns");
    TimingSample s;
    s.n = detail::parse_number<std::int64_t>(cells[0], line_no, "n");
    s.m = detail::parse_number<std::int64_t>(cells[1], line_no, "m");
    s.k = detail::parse_number<std::int64_t>(cells[2], line_no, "k");
    s.time_ms = detail::parse_number<double>(cells[3], line_no, "time_ms");
    s.iterations = detail::parse_number<std::int64_t>(cells[4], line_no, "iterations");
    s.processor = std::string(cells[5]);
    if (s.n < 1 || s.m < 1 || s.k < 1)
      throw FormatError("profile line " + std::to_string(line_no) + ": n, m, k must be >= 1");
    if (!(s.time_ms > 0.0) || !std::isfinite(s.time_ms))
      throw FormatError("profile line " + std::to_string(line_no) + ": time_ms must be > 0");
    if (s.iterations < 1)
      throw FormatError("profile line " + std::to_string(line_no) + ": iterations must be >= 1");
    if (!seen.emplace(s.n, s.m, s.k).second)
      throw FormatError("profile line " + std::to_string(line_no) + ": duplicate (n, m, k)");
    samples.push_back(std::move(s));
  }
  if (!header_seen) throw FormatError("profile is empty");
  return samples;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

inline DeviceProfile load_profile(const std::string& path, ProcessorKind kind) {
  DeviceProfile profile;
  profile.kind = kind;
  profile.samples = read_profile_csv(read_text_file(path));
  if (!profile.samples.empty()) profile.processor_label = profile.samples.front().processor;
  return profile;
}

}  // namespace augur
