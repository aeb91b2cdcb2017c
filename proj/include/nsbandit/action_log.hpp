#pragma once

// Per-round record of what an algorithm did, with CSV persistence.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nsbandit/problem.hpp"

namespace nsbandit {

struct ActionRecord {
  Round t = 0;
  std::int64_t phase = 0;   // HyQue phase id, or Rexp3B batch index
  int block_scale = 0;      // n
  int scale = 0;            // m
  Round offset = 0;         // tau
  int arm = 0;              // 0-based; written 1-based
  bool query = false;
  bool on_demand = false;
  double reward = std::numeric_limits<double>::quiet_NaN();  // NaN unless queried

  bool operator==(const ActionRecord& o) const {
    const bool same_reward = (std::isnan(reward) && std::isnan(o.reward)) || reward == o.reward;
    return t == o.t && phase == o.phase && block_scale == o.block_scale && scale == o.scale &&
           offset == o.offset && arm == o.arm && query == o.query && on_demand == o.on_demand && same_reward;
  }
};

struct ActionLog {
  std::vector<ActionRecord> records;

  std::size_t size() const noexcept { return records.size(); }

  Round query_count() const {
    Round count = 0;
    for (const auto& r : records) count += r.query ? 1 : 0;
    return count;
  }

  Round on_demand_count() const {
    Round count = 0;
    for (const auto& r : records) count += r.on_demand ? 1 : 0;
    return count;
  }

  bool operator==(const ActionLog&) const = default;
};

// Identifies the instance (or batch) that owned a round.
inline bool same_owner(const ActionRecord& a, const ActionRecord& b) {
  return a.phase == b.phase && a.block_scale == b.block_scale && a.scale == b.scale && a.offset == b.offset;
}

// Identifies the block a round belongs to.
inline bool same_block(const ActionRecord& a, const ActionRecord& b) {
  return a.phase == b.phase && a.block_scale == b.block_scale;
}

inline constexpr const char* kActionLogHeader = "t,phase,n,m,tau,arm,query,on_demand,reward";

inline std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, end);
}

inline void write_action_log(std::ostream& out, const ActionLog& log) {
  out << kActionLogHeader << '\n';
  for (const auto& r : log.records) {
    out << r.t << ',' << r.phase << ',' << r.block_scale << ',' << r.scale << ',' << r.offset << ',' << (r.arm + 1)
        << ',' << (r.query ? 1 : 0) << ',' << (r.on_demand ? 1 : 0) << ',';
    if (r.query) out << format_double(r.reward);
    out << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
T parse_number(const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw Error(ErrorCode::BadInput, "bad number '" + text + "'");
  return value;
}

}  // namespace detail

inline ActionLog read_action_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kActionLogHeader)
    throw Error(ErrorCode::MissingColumns, std::string("expected header ") + kActionLogHeader);
  ActionLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 9) throw Error(ErrorCode::MissingColumns, "action log row needs 9 fields");
    ActionRecord r;
    r.t = detail::parse_number<Round>(f[0]);
    r.phase = detail::parse_number<std::int64_t>(f[1]);
    r.block_scale = detail::parse_number<int>(f[2]);
    r.scale = detail::parse_number<int>(f[3]);
    r.offset = detail::parse_number<Round>(f[4]);
    r.arm = detail::parse_number<int>(f[5]) - 1;
    r.query = f[6] == "1";
    r.on_demand = f[7] == "1";
    if (!f[8].empty()) r.reward = detail::parse_number<double>(f[8]);
    log.records.push_back(r);
  }
  return log;
}

}  // namespace nsbandit
