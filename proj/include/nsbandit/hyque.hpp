#pragma once

// Hybrid query allocation: phases of geometrically growing blocks, change
// tests that restart the phase, and on-demand conversion of non-query rounds
// when query usage falls behind linear pacing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "nsbandit/action_log.hpp"
#include "nsbandit/baque.hpp"
#include "nsbandit/environment.hpp"
#include "nsbandit/problem.hpp"

namespace nsbandit {

enum class LogBase { Natural, Two };

// How the end-of-batch test normalizes the instance's reward sum.
enum class EndTestNormalizer {
  Scale,  // divide by 2^m
  Count,  // divide by the number of recorded query rewards
};

struct TraceRecord {
  Round t = 0;
  std::int64_t phase = 0;
  InstanceId instance;
  int arm = 0;
  bool on_demand = false;
  double index = 0.0;   // g~
  double reward = 0.0;
  double running_min = 0.0;  // U_t
  std::int64_t history = 0;  // |S_{n,m,t}|
  double running_lhs = 0.0;  // mean(g~ - R)
  double running_rhs = 0.0;  // 3 rho(|S|)
  bool end_evaluated = false;
  double end_lhs = 0.0;      // normalized reward sum
  double end_rhs = 0.0;      // U_t + 9 rho(2^m)
  bool failed = false;
};

struct HyqueOptions {
  LogBase log_base = LogBase::Natural;
  EndTestNormalizer end_normalizer = EndTestNormalizer::Scale;
  // Multiplies the confidence radius. 1 is the formula as stated; smaller
  // values are for sensitivity studies only.
  double rho_scale = 1.0;
  bool on_demand = true;
  RewardLaw reward_law = RewardLaw::Bernoulli;
  std::vector<TraceRecord>* trace = nullptr;
};

// rho^(t) = 6 (log T + 1) ln(T/delta) (sqrt(K ln t / t) + K / t)
inline double rho_hat(std::int64_t t_count, const ProblemConfig& cfg, const HyqueOptions& opts = {}) {
  const double horizon = static_cast<double>(cfg.horizon);
  const double log_horizon = opts.log_base == LogBase::Two ? std::log2(horizon) : std::log(horizon);
  const double multiplier = 6.0 * (log_horizon + 1.0) * std::log(horizon / cfg.confidence);
  const double t = static_cast<double>(t_count);
  const double k = static_cast<double>(cfg.arms);
  return opts.rho_scale * multiplier * (std::sqrt(k * std::log(t) / t) + k / t);
}

// Query history of one instance within the current phase.
struct DetectionState {
  struct Entry {
    Round t;
    double index;
    double reward;
  };
  std::vector<Entry> history;
  double running_min = std::numeric_limits<double>::infinity();
  double reward_sum = 0.0;
  double discrepancy_sum = 0.0;

  void record(Round t, double index, double reward) {
    history.push_back({t, index, reward});
    running_min = std::min(running_min, index);
    reward_sum += reward;
    discrepancy_sum += index - reward;
  }

  std::int64_t size() const { return static_cast<std::int64_t>(history.size()); }
};

enum class TestResult { Pass, Fail };

struct EndTestValues {
  double lhs;
  double rhs;
};

inline EndTestValues end_test_values(const DetectionState& det, int scale, const ProblemConfig& cfg,
                                     const HyqueOptions& opts) {
  const double period = std::exp2(static_cast<double>(scale));
  const double normalizer =
      opts.end_normalizer == EndTestNormalizer::Scale ? period : static_cast<double>(std::max<std::int64_t>(1, det.size()));
  return {det.reward_sum / normalizer,
          det.running_min + 9.0 * rho_hat(static_cast<std::int64_t>(period), cfg, opts)};
}

// Test (i): at the last batch query of an order-m instance, fail when the
// normalized reward sum reaches U_t + 9 rho(2^m).
inline TestResult change_test_end(const DetectionState& det, int scale, const ProblemConfig& cfg,
                                  const HyqueOptions& opts = {}) {
  if (det.size() == 0) return TestResult::Pass;
  const auto [lhs, rhs] = end_test_values(det, scale, cfg, opts);
  return lhs >= rhs ? TestResult::Fail : TestResult::Pass;
}

// Test (ii): fail when the mean of (g~ - R) over the history reaches 3 rho(|S|).
inline TestResult change_test_running(const DetectionState& det, const ProblemConfig& cfg,
                                      const HyqueOptions& opts = {}) {
  if (det.size() == 0) return TestResult::Pass;
  const double lhs = det.discrepancy_sum / static_cast<double>(det.size());
  return lhs >= 3.0 * rho_hat(det.size(), cfg, opts) ? TestResult::Fail : TestResult::Pass;
}

// Converts a non-query round when B' < t B / T - min{T / sqrt(B), 2^n, T - t}.
inline bool on_demand_check(Round used, Round t, int n, const ProblemConfig& cfg) {
  const double horizon = static_cast<double>(cfg.horizon);
  const double budget = static_cast<double>(cfg.query_budget);
  const double buffer = std::min({horizon / std::sqrt(budget), std::exp2(static_cast<double>(n)),
                                  static_cast<double>(cfg.horizon - t)});
  return static_cast<double>(used) < static_cast<double>(t) * budget / horizon - buffer;
}

struct PhaseSummary {
  std::int64_t id = 0;
  Round first = 0;
  Round last = 0;
  Round queries = 0;
  bool ended_by_restart = false;

  Round rounds() const { return last - first + 1; }
  double query_fraction() const { return static_cast<double>(queries) / static_cast<double>(rounds()); }
};

struct BlockSummary {
  std::int64_t phase = 0;
  int scale = 0;
  Round first = 0;
  Round last = 0;
};

struct HyqueRun {
  ActionLog log;
  std::vector<PhaseSummary> phases;
  std::vector<BlockSummary> blocks;
  Round queries = 0;
  Round on_demand = 0;
  Round restarts = 0;
  // Scheduled query rounds played without feedback because the ledger was full.
  Round budget_guarded = 0;
};

inline HyqueRun run_hyque(const MeanSequence& env, const ProblemConfig& cfg, std::uint64_t seed,
                          const HyqueOptions& opts = {}) {
  validate_config(cfg);
  if (env.horizon() != cfg.horizon || env.arms() != cfg.arms)
    throw Error(ErrorCode::BadInput, "environment shape does not match the config");

  RandomStream scheduler(seed, StreamId::Scheduler);
  RandomStream rewards(seed, StreamId::Reward);
  RandomStream replay(seed, StreamId::Replay);

  const Round horizon = cfg.horizon;
  const Round b = budget_ratio(cfg);
  BudgetLedger ledger(cfg.query_budget);
  HyqueRun run;
  run.log.records.reserve(static_cast<std::size_t>(horizon));

  Round t = 1;
  std::int64_t phase = 0;
  while (t <= horizon) {
    ++phase;
    PhaseSummary summary{phase, t, t, 0, false};
    const Round queries_at_phase_start = ledger.used();
    bool restart = false;
    for (int n = 0; t <= horizon && !restart; ++n) {
      const Round block_start = t;
      BlockSchedule schedule = make_block(n, b, scheduler, cfg.arms, horizon - block_start + 1);
      std::vector<DetectionState> detection(schedule.instances.size());
      run.blocks.push_back({phase, n, block_start, block_start + schedule.length - 1});

      for (Round r = 1; r <= schedule.length; ++r) {
        t = block_start + r - 1;
        const std::uint32_t owner = schedule.owner[static_cast<std::size_t>(r - 1)];
        Instance& inst = schedule.instances[owner];
        const bool scheduled = schedule.query_round(r);
        bool query = scheduled;
        bool converted = false;
        if (!scheduled && opts.on_demand && on_demand_check(ledger.used(), t, n, cfg)) {
          query = true;
          converted = true;
        }
        if (query && ledger.exhausted()) {
          query = false;
          converted = false;
          ++run.budget_guarded;
        }

        ActionRecord rec;
        rec.t = t;
        rec.phase = phase;
        rec.block_scale = n;
        rec.scale = inst.id.scale;
        rec.offset = inst.id.offset;
        if (query) {
          const Selection sel = query_select(inst);
          const double reward = sample_reward(env, t, sel.arm, rewards, opts.reward_law);
          query_update(inst, sel.arm, reward);
          ledger.record_query();
          DetectionState& det = detection[owner];
          det.record(t, sel.index.value, reward);

          const bool running_fail = change_test_running(det, cfg, opts) == TestResult::Fail;
          const bool at_end = scheduled && r == inst.last_query_round();
          const bool end_fail = at_end && change_test_end(det, inst.id.scale, cfg, opts) == TestResult::Fail;
          restart = running_fail || end_fail;

          if (opts.trace) {
            TraceRecord tr;
            tr.t = t;
            tr.phase = phase;
            tr.instance = inst.id;
            tr.arm = sel.arm;
            tr.on_demand = converted;
            tr.index = sel.index.value;
            tr.reward = reward;
            tr.running_min = det.running_min;
            tr.history = det.size();
            tr.running_lhs = det.discrepancy_sum / static_cast<double>(det.size());
            tr.running_rhs = 3.0 * rho_hat(det.size(), cfg, opts);
            tr.end_evaluated = at_end;
            if (at_end) {
              const auto values = end_test_values(det, inst.id.scale, cfg, opts);
              tr.end_lhs = values.lhs;
              tr.end_rhs = values.rhs;
            }
            tr.failed = restart;
            opts.trace->push_back(tr);
          }
          rec.arm = sel.arm;
          rec.query = true;
          rec.on_demand = converted;
          rec.reward = reward;
          run.on_demand += converted ? 1 : 0;
        } else {
          // Without replay history (only reachable through the budget guard)
          // fall back to the policy's choice.
          rec.arm = inst.replay_total > 0 ? nonquery_step(inst, replay) : ucb1_select(inst.policy).arm;
        }
        run.log.records.push_back(rec);
        if (restart) {
          run.blocks.back().last = t;
          break;
        }
      }
      t = run.blocks.back().last + 1;
    }
    summary.last = t - 1;
    summary.queries = ledger.used() - queries_at_phase_start;
    summary.ended_by_restart = restart;
    run.restarts += restart ? 1 : 0;
    run.phases.push_back(summary);
  }
  run.queries = ledger.used();
  return run;
}

}  // namespace nsbandit
