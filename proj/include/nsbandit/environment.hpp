#pragma once

// Non-stationary reward processes: the mean matrix, its total variation,
// generators, and reward sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nsbandit/problem.hpp"

namespace nsbandit {

// T x K matrix of expected rewards. Rounds are 1-indexed, arms 0-indexed.
class MeanSequence {
 public:
  MeanSequence() = default;

  MeanSequence(Round horizon, int arms, double fill = 0.5)
      : horizon_(horizon), arms_(arms), means_(static_cast<std::size_t>(horizon) * arms, fill) {
    if (horizon < 1 || arms < 1) throw Error(ErrorCode::BadInput, "empty mean sequence");
  }

  Round horizon() const noexcept { return horizon_; }
  int arms() const noexcept { return arms_; }

  double operator()(Round t, int k) const { return means_[index(t, k)]; }
  double& operator()(Round t, int k) { return means_[index(t, k)]; }

  std::span<const double> row(Round t) const {
    return {means_.data() + index(t, 0), static_cast<std::size_t>(arms_)};
  }
  std::span<double> row(Round t) {
    return {means_.data() + index(t, 0), static_cast<std::size_t>(arms_)};
  }

  double best(Round t) const {
    auto r = row(t);
    return *std::max_element(r.begin(), r.end());
  }

  // Throws BadInput unless every entry is a finite value in [0,1].
  void validate() const {
    for (double v : means_)
      if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::BadInput, "mean outside [0,1]");
  }

  bool operator==(const MeanSequence&) const = default;

 private:
  std::size_t index(Round t, int k) const {
    return static_cast<std::size_t>(t - 1) * static_cast<std::size_t>(arms_) + static_cast<std::size_t>(k);
  }

  Round horizon_ = 0;
  int arms_ = 0;
  std::vector<double> means_;
};

// sum_{t=1}^{T-1} max_k |mu_{t+1}^k - mu_t^k|
inline double total_variation(const MeanSequence& seq) {
  double total = 0.0;
  for (Round t = 1; t < seq.horizon(); ++t) {
    auto a = seq.row(t);
    auto b = seq.row(t + 1);
    double step = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) step = std::max(step, std::abs(b[k] - a[k]));
    total += step;
  }
  return total;
}

// Piecewise-stationary means: `segment_count` near-equal segments, one arm
// moving by a fixed jump at each boundary. Without V_T the jump is
// `gap_scale`; with V_T it is gap_scale * V_T / (segment_count - 1), so the
// variation never exceeds V_T for gap_scale <= 1. The moving arm goes down if
// it is the current best and up otherwise, so changes tend to reshuffle the
// ranking.
inline MeanSequence gen_piecewise(const ProblemConfig& cfg, Round segment_count, double gap_scale,
                                  RandomStream& stream) {
  if (segment_count < 1 || segment_count > cfg.horizon)
    throw Error(ErrorCode::BadInput, "segment_count must lie in [1, T]");
  if (!(gap_scale >= 0.0)) throw Error(ErrorCode::BadInput, "gap_scale must be nonnegative");

  const int arms = cfg.arms;
  MeanSequence seq(cfg.horizon, arms);
  std::vector<double> current(static_cast<std::size_t>(arms));
  for (double& mu : current) mu = 0.2 + 0.6 * stream.uniform();

  double jump = gap_scale;
  if (cfg.variation_budget && segment_count > 1)
    jump = gap_scale * *cfg.variation_budget / static_cast<double>(segment_count - 1);
  if (segment_count > 1 && jump > 1.0)
    throw Error(ErrorCode::InfeasibleVariation, "per-change jump exceeds 1");

  Round segment = 0;
  Round next_boundary = cfg.horizon / segment_count + 1;  // first round of segment 1
  for (Round t = 1; t <= cfg.horizon; ++t) {
    if (segment + 1 < segment_count && t == next_boundary) {
      ++segment;
      next_boundary = ((segment + 1) * cfg.horizon) / segment_count + 1;
      const auto best_it = std::max_element(current.begin(), current.end());
      const int best = static_cast<int>(best_it - current.begin());
      const int start = static_cast<int>(stream.below(static_cast<std::uint64_t>(arms)));
      bool moved = false;
      for (int offset = 0; offset < arms && !moved; ++offset) {
        const int k = (start + offset) % arms;
        double& mu = current[static_cast<std::size_t>(k)];
        const double preferred = (k == best) ? -1.0 : 1.0;
        for (double dir : {preferred, -preferred}) {
          const double next = mu + dir * jump;
          if (next >= 0.0 && next <= 1.0) {
            mu = next;
            moved = true;
            break;
          }
        }
      }
      if (!moved) throw Error(ErrorCode::InfeasibleVariation, "no arm can absorb the jump within [0,1]");
    }
    std::copy(current.begin(), current.end(), seq.row(t).begin());
  }
  return seq;
}

// Smooth drift: every round the arms move at per-arm speeds, the fastest arm
// moving exactly V_T/(T-1), so each step contributes exactly that to the
// variation. Directions follow a seeded random walk and reflect at the
// boundaries of [0,1] instead of clamping.
inline MeanSequence gen_drift(const ProblemConfig& cfg, RandomStream& stream) {
  if (!cfg.variation_budget) throw Error(ErrorCode::BadInput, "gen_drift needs V_T");
  const int arms = cfg.arms;
  const Round horizon = cfg.horizon;
  MeanSequence seq(horizon, arms);

  std::vector<double> mu(static_cast<std::size_t>(arms));
  std::vector<double> speed(static_cast<std::size_t>(arms));
  std::vector<double> direction(static_cast<std::size_t>(arms));
  for (int k = 0; k < arms; ++k) {
    mu[k] = 0.25 + 0.5 * stream.uniform();
    speed[k] = 0.2 + 0.8 * stream.uniform();
    direction[k] = stream.bernoulli(0.5) ? 1.0 : -1.0;
  }
  speed[stream.below(static_cast<std::uint64_t>(arms))] = 1.0;

  const double step = horizon > 1 ? *cfg.variation_budget / static_cast<double>(horizon - 1) : 0.0;
  if (step > 0.5) throw Error(ErrorCode::InfeasibleVariation, "per-round drift exceeds 1/2");
  constexpr double kFlipProbability = 0.01;

  std::copy(mu.begin(), mu.end(), seq.row(1).begin());
  for (Round t = 2; t <= horizon; ++t) {
    for (int k = 0; k < arms; ++k) {
      if (stream.bernoulli(kFlipProbability)) direction[k] = -direction[k];
      const double delta = step * speed[k];
      double next = mu[k] + direction[k] * delta;
      if (next > 1.0 || next < 0.0) {
        direction[k] = -direction[k];
        next = mu[k] + direction[k] * delta;
      }
      mu[k] = next;
    }
    std::copy(mu.begin(), mu.end(), seq.row(t).begin());
  }
  return seq;
}

struct HardInstanceParams {
  Round batch_length = 0;  // Delta
  double gap = 0.0;        // epsilon
  std::vector<int> good_arms;
  Round batch_count = 0;   // m
};

// Batch length before rounding, (K T^3 / (1920 V^2 B))^(1/3).
inline double hard_instance_batch_length(const ProblemConfig& cfg) {
  const double t = static_cast<double>(cfg.horizon);
  const double v = *cfg.variation_budget;
  return std::cbrt(static_cast<double>(cfg.arms) * t * t * t /
                   (1920.0 * v * v * static_cast<double>(cfg.query_budget)));
}

// Gap before any clamping, K^(1/3) V^(1/3) / (1920 B)^(1/3).
inline double hard_instance_gap(const ProblemConfig& cfg) {
  return std::cbrt(static_cast<double>(cfg.arms) * *cfg.variation_budget /
                   (1920.0 * static_cast<double>(cfg.query_budget)));
}

// Batches of length Delta, exactly one good arm per batch at 1/2 + epsilon,
// all others at 1/2.
inline std::pair<MeanSequence, HardInstanceParams> gen_hard_instance(const ProblemConfig& cfg,
                                                                     RandomStream& stream) {
  validate_config(cfg, VariationRegime::HardInstance);
  const Round horizon = cfg.horizon;
  const double v = *cfg.variation_budget;

  const auto rounded = static_cast<Round>(std::llround(hard_instance_batch_length(cfg)));
  if (rounded >= horizon)
    throw Error(ErrorCode::DegenerateInstance,
                "batch length " + std::to_string(rounded) + " >= T; enlarge T");
  HardInstanceParams params;
  params.batch_length = std::clamp<Round>(rounded, 2, std::max<Round>(2, horizon / 2));
  params.batch_count = (horizon + params.batch_length - 1) / params.batch_length;

  double gap = std::min(0.25, hard_instance_gap(cfg));
  // Integral batch length can push (m-1)*eps slightly over V_T.
  if (params.batch_count > 1) gap = std::min(gap, v / static_cast<double>(params.batch_count - 1));
  params.gap = gap;

  MeanSequence seq(horizon, cfg.arms, 0.5);
  params.good_arms.reserve(static_cast<std::size_t>(params.batch_count));
  for (Round j = 0; j < params.batch_count; ++j) {
    const int good = static_cast<int>(stream.below(static_cast<std::uint64_t>(cfg.arms)));
    params.good_arms.push_back(good);
    const Round first = j * params.batch_length + 1;
    const Round last = std::min(horizon, (j + 1) * params.batch_length);
    for (Round t = first; t <= last; ++t) seq(t, good) = 0.5 + gap;
  }
  return {std::move(seq), std::move(params)};
}

enum class RewardLaw {
  Bernoulli,
  // Uniform on [mu - h, mu + h] with h = min(mu, 1 - mu).
  Uniform,
};

// Reward of arm k at round t. Draws are counter-based on (t, k), so the
// realized reward table is fixed by the stream seed regardless of which arms
// an algorithm pulls.
inline double sample_reward(const MeanSequence& seq, Round t, int k, const RandomStream& stream,
                            RewardLaw law = RewardLaw::Bernoulli) {
  const double mu = seq(t, k);
  const double u = stream.at(static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(k));
  switch (law) {
    case RewardLaw::Bernoulli:
      return u < mu ? 1.0 : 0.0;
    case RewardLaw::Uniform: {
      const double h = std::min(mu, 1.0 - mu);
      return std::clamp(mu - h + 2.0 * h * u, 0.0, 1.0);
    }
  }
  return 0.0;
}

}  // namespace nsbandit
