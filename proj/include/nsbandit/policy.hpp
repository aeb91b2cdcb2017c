#pragma once

// Base policies run inside query batches. Each exposes an auxiliary index in
// [0,1] alongside its arm choice; for UCB1 this is the optimistic estimate of
// the best mean that the change tests compare rewards against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "nsbandit/problem.hpp"

namespace nsbandit {

// Optimistic index reported by a policy, clamped to [0,1].
struct PolicyIndex {
  double value = 0.0;

  static PolicyIndex clamped(double raw) { return {std::clamp(raw, 0.0, 1.0)}; }
};

struct Selection {
  int arm = 0;
  PolicyIndex index;
};

struct Ucb1State {
  std::vector<std::int64_t> pull_counts;
  std::vector<double> reward_sums;
  std::int64_t local_time = 0;

  explicit Ucb1State(int arms = 0)
      : pull_counts(static_cast<std::size_t>(arms), 0), reward_sums(static_cast<std::size_t>(arms), 0.0) {}

  int arms() const noexcept { return static_cast<int>(pull_counts.size()); }

  double mean(int k) const {
    return pull_counts[k] > 0 ? reward_sums[k] / static_cast<double>(pull_counts[k]) : 0.0;
  }
};

// Lowest-id unpulled arm first (index 1); otherwise argmax of
// mean + sqrt(2 ln(local_time) / n_k), ties to the lowest id.
inline Selection ucb1_select(const Ucb1State& state) {
  const int arms = state.arms();
  for (int k = 0; k < arms; ++k)
    if (state.pull_counts[k] == 0) return {k, PolicyIndex{1.0}};

  const double log_time = std::log(static_cast<double>(state.local_time));
  int best = 0;
  double best_value = -1.0;
  for (int k = 0; k < arms; ++k) {
    const double n = static_cast<double>(state.pull_counts[k]);
    const double value = state.reward_sums[k] / n + std::sqrt(2.0 * log_time / n);
    if (value > best_value) {
      best_value = value;
      best = k;
    }
  }
  return {best, PolicyIndex::clamped(best_value)};
}

inline void ucb1_update(Ucb1State& state, int arm, double reward) {
  if (!(reward >= 0.0 && reward <= 1.0)) throw Error(ErrorCode::RewardOutOfRange, "reward outside [0,1]");
  ++state.pull_counts[arm];
  state.reward_sums[arm] += reward;
  ++state.local_time;
}

struct Exp3State {
  std::vector<double> weights;
  double gamma = 1.0;

  Exp3State(int arms, double gamma_) : weights(static_cast<std::size_t>(arms), 1.0), gamma(gamma_) {}

  int arms() const noexcept { return static_cast<int>(weights.size()); }

  void reset() { std::fill(weights.begin(), weights.end(), 1.0); }
};

inline constexpr double kExp3RenormalizeAbove = 1e300;

// p_k = (1 - gamma) w_k / sum(w) + gamma / K
inline std::vector<double> exp3_probs(const Exp3State& state) {
  const int arms = state.arms();
  double total = 0.0;
  for (double w : state.weights) total += w;
  std::vector<double> probs(static_cast<std::size_t>(arms));
  const double floor = state.gamma / static_cast<double>(arms);
  for (int k = 0; k < arms; ++k) probs[k] = (1.0 - state.gamma) * state.weights[k] / total + floor;
  return probs;
}

// Importance-weighted update of the played arm; other arms see a zero
// estimate and keep their weight.
inline void exp3_update(Exp3State& state, int arm, double reward, double prob_used) {
  if (!(prob_used > 0.0)) throw Error(ErrorCode::ZeroProbability, "played arm had probability 0");
  if (!(reward >= 0.0 && reward <= 1.0)) throw Error(ErrorCode::RewardOutOfRange, "reward outside [0,1]");
  const double estimate = reward / prob_used;
  state.weights[arm] *= std::exp(state.gamma * estimate / static_cast<double>(state.arms()));
  // prob_used >= gamma/K bounds the exponent by 1, so one step cannot overflow.
  const double top = *std::max_element(state.weights.begin(), state.weights.end());
  if (top > kExp3RenormalizeAbove)
    for (double& w : state.weights) w = std::max(w / top, std::numeric_limits<double>::min());
}

// Draws an index from a probability vector with one uniform variate.
inline int sample_categorical(const std::vector<double>& probs, double u) {
  double cumulative = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    cumulative += probs[k];
    if (u < cumulative) return static_cast<int>(k);
  }
  for (std::size_t k = probs.size(); k-- > 0;)
    if (probs[k] > 0.0) return static_cast<int>(k);
  return 0;
}

}  // namespace nsbandit
