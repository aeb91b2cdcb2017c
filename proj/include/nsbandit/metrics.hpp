#pragma once

// Regret and budget diagnostics computed from an action log and the true
// means. Everything here is a pure function of its inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "nsbandit/action_log.hpp"
#include "nsbandit/environment.hpp"
#include "nsbandit/problem.hpp"

namespace nsbandit {

inline void check_log_matches(const ActionLog& log, const MeanSequence& seq) {
  if (static_cast<Round>(log.size()) != seq.horizon())
    throw Error(ErrorCode::BadInput, "log length differs from the horizon");
}

// Neumaier-compensated running sum; regret totals add up to 10^5 small terms
// and the decomposition identity is checked to 1e-9.
class Sum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Pseudo-regret: sum_t max_k mu_t^k - mu_t^{a_t}.
inline double dynamic_regret(const ActionLog& log, const MeanSequence& seq) {
  check_log_matches(log, seq);
  Sum total;
  for (const auto& r : log.records) total.add(seq.best(r.t) - seq(r.t, r.arm));
  return total.value();
}

// Realized-reward regret: sum_t max_k mu_t^k - R_t, drawing R_t for every
// round (queried or not) from the same counter-based reward stream the run used.
inline double realized_regret(const ActionLog& log, const MeanSequence& seq, const RandomStream& rewards,
                              RewardLaw law = RewardLaw::Bernoulli) {
  check_log_matches(log, seq);
  Sum total;
  for (const auto& r : log.records) total.add(seq.best(r.t) - sample_reward(seq, r.t, r.arm, rewards, law));
  return total.value();
}

struct RegretParts {
  double query = 0.0;
  double error = 0.0;
  double drift = 0.0;

  double total() const { return query + error + drift; }
};

// Plug-in version of the query / error / drift split. A non-query round's
// benchmark is the best empirical mean among arms its owning instance (or
// batch) has observed so far:
//   error_t = benchmark - mu_t^{a_t},  drift_t = mu_t^* - benchmark.
// A round whose owner has observed nothing uses mu_t^{a_t} as benchmark.
// The three parts sum to dynamic_regret by construction.
inline RegretParts decompose_regret(const ActionLog& log, const MeanSequence& seq) {
  check_log_matches(log, seq);
  using Key = std::tuple<std::int64_t, int, int, Round>;
  struct ArmStats {
    std::vector<double> sums;
    std::vector<std::int64_t> counts;
  };
  std::map<Key, ArmStats> observed;
  const auto arms = static_cast<std::size_t>(seq.arms());

  Sum query, error, drift;
  const ActionRecord* previous = nullptr;
  for (const auto& r : log.records) {
    // Owners never span blocks, so older statistics can be dropped.
    if (previous && !same_block(*previous, r)) observed.clear();
    previous = &r;
    const double best = seq.best(r.t);
    const double played = seq(r.t, r.arm);
    auto& stats = observed[Key{r.phase, r.block_scale, r.scale, r.offset}];
    if (stats.sums.empty()) {
      stats.sums.assign(arms, 0.0);
      stats.counts.assign(arms, 0);
    }
    if (r.query) {
      query.add(best - played);
      stats.sums[static_cast<std::size_t>(r.arm)] += r.reward;
      ++stats.counts[static_cast<std::size_t>(r.arm)];
      continue;
    }
    double benchmark = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < arms; ++k)
      if (stats.counts[k] > 0) benchmark = std::max(benchmark, stats.sums[k] / static_cast<double>(stats.counts[k]));
    if (!std::isfinite(benchmark)) benchmark = played;
    error.add(benchmark - played);
    drift.add(best - benchmark);
  }
  return {query.value(), error.value(), drift.value()};
}

struct BlockRuns {
  Round first = 0;
  Round last = 0;
  Round max_nonquery_run = 0;
  Round max_query_run = 0;
};

// Longest consecutive query / non-query stretches inside each block.
inline std::vector<BlockRuns> block_run_lengths(const ActionLog& log) {
  std::vector<BlockRuns> blocks;
  Round run = 0;
  bool run_is_query = false;
  const ActionRecord* previous = nullptr;
  for (const auto& r : log.records) {
    if (!previous || !same_block(*previous, r)) {
      blocks.push_back({r.t, r.t, 0, 0});
      run = 0;
    }
    if (run > 0 && r.query == run_is_query) {
      ++run;
    } else {
      run = 1;
      run_is_query = r.query;
    }
    BlockRuns& block = blocks.back();
    block.last = r.t;
    Round& longest = run_is_query ? block.max_query_run : block.max_nonquery_run;
    longest = std::max(longest, run);
    previous = &r;
  }
  return blocks;
}

struct RunLengthStats {
  Round max_nonquery_run = 0;
  Round max_query_run = 0;
  // histogram[len] counts maximal runs of that length (within blocks).
  std::vector<std::int64_t> nonquery_histogram;
  std::vector<std::int64_t> query_histogram;
};

inline RunLengthStats run_length_stats(const ActionLog& log) {
  RunLengthStats stats;
  auto bump = [](std::vector<std::int64_t>& hist, Round len) {
    if (static_cast<Round>(hist.size()) <= len) hist.resize(static_cast<std::size_t>(len) + 1, 0);
    ++hist[static_cast<std::size_t>(len)];
  };
  auto close = [&](Round len, bool is_query) {
    if (len == 0) return;
    if (is_query) {
      stats.max_query_run = std::max(stats.max_query_run, len);
      bump(stats.query_histogram, len);
    } else {
      stats.max_nonquery_run = std::max(stats.max_nonquery_run, len);
      bump(stats.nonquery_histogram, len);
    }
  };
  Round run = 0;
  bool run_is_query = false;
  const ActionRecord* previous = nullptr;
  for (const auto& r : log.records) {
    const bool new_block = !previous || !same_block(*previous, r);
    if (new_block || r.query != run_is_query) {
      close(run, run_is_query);
      run = 0;
      run_is_query = r.query;
    }
    ++run;
    previous = &r;
  }
  close(run, run_is_query);
  return stats;
}

// Query fraction of every phase (HyQue) or batch (Rexp3B), in order.
inline std::vector<double> per_phase_query_fractions(const ActionLog& log) {
  std::vector<double> fractions;
  std::int64_t current = std::numeric_limits<std::int64_t>::min();
  Round rounds = 0;
  Round queries = 0;
  for (const auto& r : log.records) {
    if (r.phase != current) {
      if (rounds > 0) fractions.push_back(static_cast<double>(queries) / static_cast<double>(rounds));
      current = r.phase;
      rounds = queries = 0;
    }
    ++rounds;
    queries += r.query ? 1 : 0;
  }
  if (rounds > 0) fractions.push_back(static_cast<double>(queries) / static_cast<double>(rounds));
  return fractions;
}

struct RegretReport {
  double total = 0.0;
  double query_part = 0.0;
  double error_part = 0.0;
  double drift_part = 0.0;
  Round queries_used = 0;
  Round max_nonquery_run = 0;
  Round max_query_run = 0;
  std::vector<double> per_phase_query_fractions;
};

inline RegretReport regret_report(const ActionLog& log, const MeanSequence& seq) {
  RegretReport report;
  report.total = dynamic_regret(log, seq);
  const RegretParts parts = decompose_regret(log, seq);
  report.query_part = parts.query;
  report.error_part = parts.error;
  report.drift_part = parts.drift;
  report.queries_used = log.query_count();
  const RunLengthStats runs = run_length_stats(log);
  report.max_nonquery_run = runs.max_nonquery_run;
  report.max_query_run = runs.max_query_run;
  report.per_phase_query_fractions = per_phase_query_fractions(log);
  return report;
}

struct ScalingPoint {
  double x = 0.0;
  double y = 0.0;
};

// OLS slope of log(y) on log(x).
inline double fit_scaling(std::span<const ScalingPoint> points) {
  if (points.size() < 3) throw Error(ErrorCode::BadInput, "need at least 3 points to fit a slope");
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& p : points) {
    if (!(p.x > 0.0) || !(p.y > 0.0)) throw Error(ErrorCode::NonPositiveInput, "log-log fit needs positive values");
    mean_x += std::log(p.x);
    mean_y += std::log(p.y);
  }
  const double count = static_cast<double>(points.size());
  mean_x /= count;
  mean_y /= count;
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.x) - mean_x;
    sxy += dx * (std::log(p.y) - mean_y);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw Error(ErrorCode::BadInput, "all x values coincide");
  return sxy / sxx;
}

}  // namespace nsbandit
