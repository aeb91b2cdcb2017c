#pragma once

// Baseline query allocation for one block: multi-scale instance initiation,
// hierarchical masking of active rounds, and the query / non-query split with
// frequency replay.
//
// All round numbers in this file are relative to the block start, 1-based.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nsbandit/policy.hpp"
#include "nsbandit/problem.hpp"

namespace nsbandit {

struct InstanceId {
  int block_scale = 0;  // n
  int scale = 0;        // m
  Round offset = 0;     // tau, a multiple of b * 2^m

  bool operator==(const InstanceId&) const = default;
};

struct Instance {
  InstanceId id;
  Round span_first = 0;  // tau + 1
  Round span_last = 0;   // tau + b * 2^m
  std::vector<Round> active_rounds;
  Round query_count = 0;
  Ucb1State policy;
  std::vector<std::int64_t> replay_freq;
  std::int64_t replay_total = 0;

  std::span<const Round> query_rounds() const {
    return std::span<const Round>(active_rounds).first(static_cast<std::size_t>(query_count));
  }
  std::span<const Round> nonquery_rounds() const {
    return std::span<const Round>(active_rounds).subspan(static_cast<std::size_t>(query_count));
  }
  Round last_query_round() const { return query_count > 0 ? active_rounds[query_count - 1] : 0; }
};

inline constexpr std::uint32_t kNoOwner = std::numeric_limits<std::uint32_t>::max();

struct BlockSchedule {
  int block_scale = 0;
  Round ratio = 2;       // b
  Round length = 0;      // rounds in play, <= b * 2^n after clipping
  std::vector<Instance> instances;
  std::vector<std::uint32_t> owner;   // per round r at [r-1]
  std::vector<std::uint8_t> is_query;  // per round r at [r-1]

  Round nominal_length() const { return ratio << block_scale; }
  const Instance& owner_of(Round r) const { return instances[owner[static_cast<std::size_t>(r - 1)]]; }
  Instance& owner_of(Round r) { return instances[owner[static_cast<std::size_t>(r - 1)]]; }
  bool query_round(Round r) const { return is_query[static_cast<std::size_t>(r - 1)] != 0; }
};

// Initiation probability of a scale-m instance in a scale-n block, 2^((m-n)/2).
inline double initiation_probability(int n, int m) { return std::exp2(0.5 * static_cast<double>(m - n)); }

// Initiates instances for a block of b * 2^n rounds. Offsets run over
// multiples of b; at each offset every scale whose period divides it is tried
// from coarse to fine. The full-span instance (m = n, tau = 0) always starts.
inline BlockSchedule schedule_block(int n, Round b, RandomStream& stream, int arms) {
  if (n < 0 || b < 2) throw Error(ErrorCode::BadInput, "schedule_block needs n >= 0 and b >= 2");
  BlockSchedule schedule;
  schedule.block_scale = n;
  schedule.ratio = b;
  schedule.length = schedule.nominal_length();
  const Round slots = Round{1} << n;
  for (Round slot = 0; slot < slots; ++slot) {
    const Round tau = slot * b;
    for (int m = n; m >= 0; --m) {
      const Round period = b << m;
      if (tau % period != 0) continue;
      const bool forced = (m == n && tau == 0);
      if (!forced && !stream.bernoulli(initiation_probability(n, m))) continue;
      Instance inst;
      inst.id = {n, m, tau};
      inst.span_first = tau + 1;
      inst.span_last = tau + period;
      inst.policy = Ucb1State(arms);
      inst.replay_freq.assign(static_cast<std::size_t>(arms), 0);
      schedule.instances.push_back(std::move(inst));
    }
  }
  return schedule;
}

// Query batch = first max(1, floor(|S| / b)) active rounds; an instance whose
// whole span is masked by finer instances has no rounds and no queries.
inline void split_batches(Instance& instance, Round b) {
  const auto active = static_cast<Round>(instance.active_rounds.size());
  instance.query_count = active == 0 ? 0 : std::max<Round>(1, active / b);
}

// Assigns each round in [1, limit] to the finest initiated instance covering
// it, then splits every instance's active set into its batches. `limit`
// clips the block at the horizon.
inline void resolve_active_sets(BlockSchedule& schedule, Round limit) {
  limit = std::min(limit, schedule.nominal_length());
  schedule.length = limit;
  schedule.owner.assign(static_cast<std::size_t>(limit), kNoOwner);
  schedule.is_query.assign(static_cast<std::size_t>(limit), 0);

  std::vector<std::uint32_t> order(schedule.instances.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return schedule.instances[a].id.scale > schedule.instances[b].id.scale;
  });
  // Same-scale spans are disjoint, so painting coarse to fine leaves the
  // finest covering instance as owner.
  for (std::uint32_t i : order) {
    const Instance& inst = schedule.instances[i];
    const Round last = std::min(inst.span_last, limit);
    for (Round r = inst.span_first; r <= last; ++r) schedule.owner[static_cast<std::size_t>(r - 1)] = i;
  }
  for (Instance& inst : schedule.instances) inst.active_rounds.clear();
  for (Round r = 1; r <= limit; ++r) {
    const std::uint32_t who = schedule.owner[static_cast<std::size_t>(r - 1)];
    if (who == kNoOwner) throw Error(ErrorCode::BadInput, "block round left uncovered");
    schedule.instances[who].active_rounds.push_back(r);
  }
  for (Instance& inst : schedule.instances) {
    split_batches(inst, schedule.ratio);
    for (Round r : inst.query_rounds()) schedule.is_query[static_cast<std::size_t>(r - 1)] = 1;
  }
}

inline BlockSchedule make_block(int n, Round b, RandomStream& stream, int arms, Round limit) {
  BlockSchedule schedule = schedule_block(n, b, stream, arms);
  resolve_active_sets(schedule, limit);
  return schedule;
}

// Query round, first half: the UCB1 choice and its index.
inline Selection query_select(const Instance& instance) { return ucb1_select(instance.policy); }

// Query round, second half: feed the observed reward back.
inline void query_update(Instance& instance, int arm, double reward) {
  ucb1_update(instance.policy, arm, reward);
  ++instance.replay_freq[static_cast<std::size_t>(arm)];
  ++instance.replay_total;
}

// Replays the query batch's empirical arm frequencies.
inline int nonquery_step(const Instance& instance, RandomStream& stream) {
  if (instance.replay_total <= 0) throw Error(ErrorCode::EmptyReplay, "instance has no query history");
  std::int64_t pick = static_cast<std::int64_t>(stream.below(static_cast<std::uint64_t>(instance.replay_total)));
  for (std::size_t k = 0; k < instance.replay_freq.size(); ++k) {
    pick -= instance.replay_freq[k];
    if (pick < 0) return static_cast<int>(k);
  }
  return static_cast<int>(instance.replay_freq.size()) - 1;
}

namespace detail {

inline void append_ranges(std::ostringstream& out, std::span<const Round> rounds) {
  out << '[';
  for (std::size_t i = 0; i < rounds.size();) {
    std::size_t j = i;
    while (j + 1 < rounds.size() && rounds[j + 1] == rounds[j] + 1) ++j;
    if (i > 0) out << ',';
    out << rounds[i];
    if (j > i) out << '-' << rounds[j];
    i = j + 1;
  }
  out << ']';
}

}  // namespace detail

// One line per instance: n m tau span active-ranges query-ranges.
inline std::string format_schedule(const BlockSchedule& schedule) {
  std::ostringstream out;
  out << "# block n=" << schedule.block_scale << " b=" << schedule.ratio << " length=" << schedule.length
      << " instances=" << schedule.instances.size() << '\n';
  for (const Instance& inst : schedule.instances) {
    out << "n=" << inst.id.block_scale << " m=" << inst.id.scale << " tau=" << inst.id.offset << " span=["
        << inst.span_first << ',' << inst.span_last << "] active=";
    detail::append_ranges(out, inst.active_rounds);
    out << " query=";
    detail::append_ranges(out, inst.query_rounds());
    out << '\n';
  }
  return out.str();
}

}  // namespace nsbandit
