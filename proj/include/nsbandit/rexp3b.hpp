#pragma once

// Known-variation algorithm: batches of length Delta_T, each opening with
// Delta_B EXP3 query rounds and closing with replay rounds that draw
// uniformly from the arms played in that batch's query phase.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "nsbandit/action_log.hpp"
#include "nsbandit/environment.hpp"
#include "nsbandit/policy.hpp"
#include "nsbandit/problem.hpp"

namespace nsbandit {

struct Rexp3bParams {
  Round batch_length = 1;  // Delta_T
  Round query_length = 1;  // Delta_B
  double gamma = 1.0;
  // Set when floor((B/T) Delta_T) was 0 and had to be raised to 1.
  bool degenerate_batching = false;
};

struct Rexp3bOptions {
  bool reset_weights = true;
  RewardLaw reward_law = RewardLaw::Bernoulli;
};

inline double rexp3b_raw_batch_length(const ProblemConfig& cfg) {
  const double k = static_cast<double>(cfg.arms);
  return static_cast<double>(cfg.horizon) * std::cbrt(k * std::log(k)) /
         (std::cbrt(static_cast<double>(cfg.query_budget)) * std::pow(*cfg.variation_budget, 2.0 / 3.0));
}

// Delta_T = T (K ln K)^(1/3) / (B^(1/3) V_T^(2/3)), rounded and clamped to
// [1, T]; Delta_B = floor((B/T) Delta_T), at least 1;
// gamma = min{1, sqrt(K ln K / ((e - 1) Delta_B))}.
inline Rexp3bParams rexp3b_params(const ProblemConfig& cfg) {
  validate_config(cfg);
  if (!cfg.variation_budget || !(*cfg.variation_budget > 0.0))
    throw Error(ErrorCode::VariationOutOfRange, "Rexp3B needs a known positive V_T");
  Rexp3bParams params;
  params.batch_length = std::clamp<Round>(std::llround(rexp3b_raw_batch_length(cfg)), 1, cfg.horizon);
  // Integer form of floor(B * Delta_T / T) avoids 0.999... artifacts when B = T.
  const Round queries = cfg.query_budget * params.batch_length / cfg.horizon;
  params.degenerate_batching = queries == 0;
  params.query_length = std::max<Round>(1, queries);
  const double k = static_cast<double>(cfg.arms);
  params.gamma = std::min(1.0, std::sqrt(k * std::log(k) / ((std::numbers::e - 1.0) *
                                                            static_cast<double>(params.query_length))));
  return params;
}

struct Rexp3bRun {
  ActionLog log;
  Rexp3bParams params;
  Round queries = 0;
  Round batches = 0;
};

inline Rexp3bRun run_rexp3b(const MeanSequence& env, const ProblemConfig& cfg, std::uint64_t seed,
                            const Rexp3bOptions& opts = {}) {
  Rexp3bRun run;
  run.params = rexp3b_params(cfg);
  if (env.horizon() != cfg.horizon || env.arms() != cfg.arms)
    throw Error(ErrorCode::BadInput, "environment shape does not match the config");

  RandomStream rewards(seed, StreamId::Reward);
  RandomStream policy(seed, StreamId::Policy);
  RandomStream replay(seed, StreamId::Replay);
  BudgetLedger ledger(cfg.query_budget);

  const Round horizon = cfg.horizon;
  const Round batch = run.params.batch_length;
  run.batches = (horizon + batch - 1) / batch;
  run.log.records.reserve(static_cast<std::size_t>(horizon));

  Exp3State exp3(cfg.arms, run.params.gamma);
  std::vector<int> pool;
  for (Round j = 1; j <= run.batches; ++j) {
    const Round tau = (j - 1) * batch;
    const Round batch_end = std::min(horizon, tau + batch);
    if (opts.reset_weights) exp3.reset();
    pool.clear();
    // The ledger may cut the last query phases short when rounding put
    // ceil(T / Delta_T) * Delta_B above B.
    const Round query_end = std::min({horizon, tau + run.params.query_length, tau + ledger.remaining()});
    for (Round t = tau + 1; t <= batch_end; ++t) {
      ActionRecord rec;
      rec.t = t;
      rec.phase = j;
      rec.offset = tau;
      if (t <= query_end) {
        const std::vector<double> probs = exp3_probs(exp3);
        const int arm = sample_categorical(probs, policy.uniform());
        const double reward = sample_reward(env, t, arm, rewards, opts.reward_law);
        exp3_update(exp3, arm, reward, probs[static_cast<std::size_t>(arm)]);
        ledger.record_query();
        pool.push_back(arm);
        rec.arm = arm;
        rec.query = true;
        rec.reward = reward;
      } else if (!pool.empty()) {
        rec.arm = pool[replay.below(pool.size())];
      } else {
        // Budget ran out before this batch could query at all.
        rec.arm = static_cast<int>(replay.below(static_cast<std::uint64_t>(cfg.arms)));
      }
      run.log.records.push_back(rec);
    }
  }
  run.queries = ledger.used();
  return run;
}

}  // namespace nsbandit
