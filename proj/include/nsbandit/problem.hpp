#pragma once

// Problem configuration, the query-budget ledger, and the seeded random
// streams shared by every simulation component.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nsbandit {

using Round = std::int64_t;

enum class ErrorCode {
  BudgetExceedsHorizon,
  TooFewArms,
  BadConfidence,
  VariationOutOfRange,
  BadHorizon,
  BadBudget,
  BudgetExhausted,
  InfeasibleVariation,
  DegenerateInstance,
  RewardOutOfRange,
  ZeroProbability,
  EmptyReplay,
  NonPositiveInput,
  MissingColumns,
  BadInput,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BudgetExceedsHorizon: return "BudgetExceedsHorizon";
    case ErrorCode::TooFewArms: return "TooFewArms";
    case ErrorCode::BadConfidence: return "BadConfidence";
    case ErrorCode::VariationOutOfRange: return "VariationOutOfRange";
    case ErrorCode::BadHorizon: return "BadHorizon";
    case ErrorCode::BadBudget: return "BadBudget";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::InfeasibleVariation: return "InfeasibleVariation";
    case ErrorCode::DegenerateInstance: return "DegenerateInstance";
    case ErrorCode::RewardOutOfRange: return "RewardOutOfRange";
    case ErrorCode::ZeroProbability: return "ZeroProbability";
    case ErrorCode::EmptyReplay: return "EmptyReplay";
    case ErrorCode::NonPositiveInput: return "NonPositiveInput";
    case ErrorCode::MissingColumns: return "MissingColumns";
    case ErrorCode::BadInput: return "BadInput";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline constexpr double kDefaultConfidence = 0.05;

struct ProblemConfig {
  Round horizon = 0;                       // T
  int arms = 0;                            // K
  Round query_budget = 0;                  // B
  double confidence = kDefaultConfidence;  // delta
  std::optional<double> variation_budget;  // V_T, only for known-variation use
};

// Which extra range checks apply to V_T.
enum class VariationRegime {
  Any,           // V_T >= 0 when present
  HardInstance,  // 1/K <= V_T <= B/K, V_T required
};

inline const ProblemConfig& validate_config(const ProblemConfig& cfg,
                                            VariationRegime regime = VariationRegime::Any) {
  if (cfg.arms < 2) throw Error(ErrorCode::TooFewArms, "need K >= 2, got " + std::to_string(cfg.arms));
  if (cfg.horizon < 1) throw Error(ErrorCode::BadHorizon, "need T >= 1");
  if (cfg.query_budget < 1) throw Error(ErrorCode::BadBudget, "need B >= 1");
  if (cfg.query_budget > cfg.horizon)
    throw Error(ErrorCode::BudgetExceedsHorizon,
                "B=" + std::to_string(cfg.query_budget) + " > T=" + std::to_string(cfg.horizon));
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0))
    throw Error(ErrorCode::BadConfidence, "delta must lie in (0,1)");
  if (cfg.variation_budget) {
    const double v = *cfg.variation_budget;
    if (!std::isfinite(v) || v < 0.0)
      throw Error(ErrorCode::VariationOutOfRange, "V_T must be finite and nonnegative");
  }
  if (regime == VariationRegime::HardInstance) {
    if (!cfg.variation_budget) throw Error(ErrorCode::VariationOutOfRange, "V_T required");
    const double v = *cfg.variation_budget;
    const double k = static_cast<double>(cfg.arms);
    if (v < 1.0 / k || v > static_cast<double>(cfg.query_budget) / k)
      throw Error(ErrorCode::VariationOutOfRange, "need 1/K <= V_T <= B/K");
  }
  return cfg;
}

// b = ceil(2T / B); at least 2 whenever B <= T.
inline Round budget_ratio(const ProblemConfig& cfg) {
  return (2 * cfg.horizon + cfg.query_budget - 1) / cfg.query_budget;
}

class BudgetLedger {
 public:
  explicit BudgetLedger(Round cap) : cap_(cap) {}

  void record_query() {
    if (used_ >= cap_)
      throw Error(ErrorCode::BudgetExhausted, "query budget " + std::to_string(cap_) + " already spent");
    ++used_;
  }

  Round used() const noexcept { return used_; }
  Round cap() const noexcept { return cap_; }
  Round remaining() const noexcept { return cap_ - used_; }
  bool exhausted() const noexcept { return used_ >= cap_; }

 private:
  Round used_ = 0;
  Round cap_;
};

// Logical consumers of randomness. Each gets an independent substream so that
// changing one consumer never perturbs another.
enum class StreamId : std::uint64_t {
  Environment = 1,
  Reward = 2,
  Scheduler = 3,
  Policy = 4,
  Replay = 5,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t mix_key(std::uint64_t seed, std::uint64_t label) {
  return splitmix64(splitmix64(seed) ^ splitmix64(label * 0x632be59bd9b4e019ULL + 0x1234567ULL));
}

// Converts 64 random bits to a double in [0,1) using the top 53 bits.
inline constexpr double bits_to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Seeded substream. Sequential draws come from mt19937_64 whose output sequence
// is fixed by the standard; the floating-point conversion is done here so
// results are identical across standard libraries. `at()` offers a
// counter-based draw that depends only on (seed, stream, i, j).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamId id)
      : seed_(seed), id_(id), engine_(mix_key(seed, static_cast<std::uint64_t>(id))) {}

  std::uint64_t seed() const noexcept { return seed_; }
  StreamId id() const noexcept { return id_; }

  std::uint64_t next_bits() { return engine_(); }

  double uniform() { return bits_to_unit(engine_()); }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n) without modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  double at(std::uint64_t i, std::uint64_t j) const {
    const std::uint64_t base = mix_key(seed_, static_cast<std::uint64_t>(id_));
    return bits_to_unit(splitmix64(base ^ splitmix64(i * 0xd1b54a32d192ed03ULL ^ splitmix64(j + 0x5851f42d4c957f2dULL))));
  }

 private:
  std::uint64_t seed_;
  StreamId id_;
  std::mt19937_64 engine_;
};

}  // namespace nsbandit
