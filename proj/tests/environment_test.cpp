#include "nsbandit/environment.hpp"

#include <cmath>
#include <set>

#include "gtest/gtest.h"

namespace nsbandit {
namespace {

// Independent recomputation: plain loops over a row-major copy.
double brute_total_variation(const std::vector<std::vector<double>>& m) {
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < m.size(); ++t) {
    double sup = 0.0;
    for (std::size_t k = 0; k < m[t].size(); ++k) {
      const double d = m[t + 1][k] > m[t][k] ? m[t + 1][k] - m[t][k] : m[t][k] - m[t + 1][k];
      if (d > sup) sup = d;
    }
    total += sup;
  }
  return total;
}

MeanSequence from_rows(const std::vector<std::vector<double>>& rows) {
  MeanSequence seq(static_cast<Round>(rows.size()), static_cast<int>(rows[0].size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t k = 0; k < rows[t].size(); ++k) seq(static_cast<Round>(t + 1), static_cast<int>(k)) = rows[t][k];
  return seq;
}

TEST(TotalVariation, ConstantIsZero) {
  EXPECT_EQ(total_variation(MeanSequence(100, 4, 0.3)), 0.0);
}

TEST(TotalVariation, HandExample) {
  const auto seq = from_rows({{0.5, 0.2}, {0.8, 0.2}, {0.8, 0.6}});
  EXPECT_NEAR(total_variation(seq), 0.7, 1e-15);
}

TEST(TotalVariation, MatchesBruteForceOnRandomMatrices) {
  RandomStream rng(11, StreamId::Environment);
  for (int trial = 0; trial < 100; ++trial) {
    const auto horizon = static_cast<std::size_t>(1 + rng.below(200));
    const auto arms = static_cast<std::size_t>(1 + rng.below(8));
    std::vector<std::vector<double>> rows(horizon, std::vector<double>(arms));
    for (auto& row : rows)
      for (double& v : row) v = rng.uniform();
    EXPECT_EQ(total_variation(from_rows(rows)), brute_total_variation(rows));
  }
}

TEST(MeanSequence, ValidateRejectsOutOfRange) {
  MeanSequence seq(3, 2);
  seq(2, 1) = 1.5;
  EXPECT_THROW(seq.validate(), Error);
  seq(2, 1) = std::nan("");
  EXPECT_THROW(seq.validate(), Error);
}

TEST(GenPiecewise, OneSegmentIsConstant) {
  RandomStream s(1, StreamId::Environment);
  const auto seq = gen_piecewise({500, 3, 50, 0.05, 1.0}, 1, 1.0, s);
  EXPECT_EQ(total_variation(seq), 0.0);
  seq.validate();
}

TEST(GenPiecewise, TwoSegmentsJumpExactly) {
  RandomStream s(2, StreamId::Environment);
  const auto seq = gen_piecewise({500, 3, 50, 0.05, std::nullopt}, 2, 0.3, s);
  EXPECT_NEAR(total_variation(seq), 0.3, 1e-12);
  int moved = 0;
  for (int k = 0; k < 3; ++k) moved += seq(250, k) != seq(251, k);
  EXPECT_EQ(moved, 1);
}

TEST(GenPiecewise, VariationStaysWithinBudget) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RandomStream s(seed, StreamId::Environment);
    const auto seq = gen_piecewise({2000, 5, 200, 0.05, 1.0}, 10, 1.0, s);
    seq.validate();
    EXPECT_LE(total_variation(seq), 1.0 + 1e-12);
  }
}

TEST(GenPiecewise, SegmentBoundaries) {
  RandomStream s(3, StreamId::Environment);
  const auto seq = gen_piecewise({10, 2, 5, 0.05, std::nullopt}, 3, 0.2, s);
  // Segments cover 1..3, 4..6, 7..10.
  for (Round t : {1, 2, 4, 5, 7, 8, 9})
    for (int k = 0; k < 2; ++k) EXPECT_EQ(seq(t, k), seq(t + 1, k)) << t;
  EXPECT_NEAR(total_variation(seq), 0.4, 1e-12);
}

TEST(GenPiecewise, RejectsInfeasibleJump) {
  RandomStream s(4, StreamId::Environment);
  try {
    gen_piecewise({100, 2, 10, 0.05, 5.0}, 3, 1.0, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleVariation);
  }
  EXPECT_THROW(gen_piecewise({100, 2, 10, 0.05, std::nullopt}, 0, 1.0, s), Error);
}

TEST(GenDrift, ZeroBudgetIsConstant) {
  RandomStream s(5, StreamId::Environment);
  const auto seq = gen_drift({1000, 3, 100, 0.05, 0.0}, s);
  EXPECT_EQ(total_variation(seq), 0.0);
}

TEST(GenDrift, VariationIsExact) {
  RandomStream s(6, StreamId::Environment);
  const auto seq = gen_drift({1000, 4, 100, 0.05, 0.5}, s);
  seq.validate();
  EXPECT_NEAR(total_variation(seq), 0.5, 1e-9);
}

TEST(GenDrift, SeedsDifferButVariationAgrees) {
  RandomStream a(7, StreamId::Environment);
  RandomStream b(8, StreamId::Environment);
  const ProblemConfig cfg{1000, 3, 100, 0.05, 2.0};
  const auto x = gen_drift(cfg, a);
  const auto y = gen_drift(cfg, b);
  EXPECT_FALSE(x == y);
  EXPECT_NEAR(total_variation(x), 2.0, 1e-9);
  EXPECT_NEAR(total_variation(y), 2.0, 1e-9);
}

TEST(GenDrift, RequiresVariationBudget) {
  RandomStream s(9, StreamId::Environment);
  EXPECT_THROW(gen_drift({100, 2, 10, 0.05, std::nullopt}, s), Error);
}

TEST(GenHardInstance, ReferenceParameters) {
  const ProblemConfig cfg{1920, 2, 240, 0.05, 1.0};
  EXPECT_NEAR(hard_instance_batch_length(cfg), 31.318, 1e-3);
  EXPECT_NEAR(hard_instance_gap(cfg), 0.016311948504870265, 1e-12);
  RandomStream s(10, StreamId::Environment);
  const auto [seq, params] = gen_hard_instance(cfg, s);
  EXPECT_EQ(params.batch_length, 31);
  EXPECT_EQ(params.batch_count, 62);
  EXPECT_NEAR(params.gap, 0.01632, 1e-4);
  EXPECT_DOUBLE_EQ(params.gap, 0.016311948504870265);
}

TEST(GenHardInstance, StructureAndVariation) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const ProblemConfig cfg{4000, 3, 600, 0.05, 2.0};
    RandomStream s(seed, StreamId::Environment);
    const auto [seq, params] = gen_hard_instance(cfg, s);
    EXPECT_LE(params.gap, 0.25);
    EXPECT_LE(static_cast<double>(params.batch_count - 1) * params.gap, 2.0 + 1e-12);
    EXPECT_LE(total_variation(seq), 2.0 + 1e-12);
    for (Round j = 0; j < params.batch_count; ++j) {
      const Round first = j * params.batch_length + 1;
      const Round last = std::min(cfg.horizon, (j + 1) * params.batch_length);
      for (Round t = first; t <= last; ++t) {
        int good = 0;
        for (int k = 0; k < cfg.arms; ++k) {
          const double mu = seq(t, k);
          if (mu == 0.5 + params.gap) ++good;
          else EXPECT_EQ(mu, 0.5);
        }
        ASSERT_EQ(good, 1);
        EXPECT_EQ(seq(t, params.good_arms[static_cast<std::size_t>(j)]), 0.5 + params.gap);
      }
    }
  }
}

TEST(GenHardInstance, Errors) {
  RandomStream s(1, StreamId::Environment);
  try {
    gen_hard_instance({100, 13, 1, 0.05, 1.0 / 13.0}, s);  // K^3 > 1920 B
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateInstance);
  }
  try {
    gen_hard_instance({1920, 2, 240, 0.05, 0.1}, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::VariationOutOfRange);
  }
}

TEST(SampleReward, DegenerateMeans) {
  MeanSequence seq(1000, 2);
  for (Round t = 1; t <= 1000; ++t) {
    seq(t, 0) = 0.0;
    seq(t, 1) = 1.0;
  }
  const RandomStream s(3, StreamId::Reward);
  for (Round t = 1; t <= 1000; ++t) {
    EXPECT_EQ(sample_reward(seq, t, 0, s), 0.0);
    EXPECT_EQ(sample_reward(seq, t, 1, s), 1.0);
    EXPECT_EQ(sample_reward(seq, t, 0, s, RewardLaw::Uniform), 0.0);
    EXPECT_EQ(sample_reward(seq, t, 1, s, RewardLaw::Uniform), 1.0);
  }
}

TEST(SampleReward, MonteCarloMean) {
  const Round draws = 100000;
  MeanSequence seq(draws, 1, 0.3);
  const RandomStream s(4, StreamId::Reward);
  double bern = 0.0;
  double unif = 0.0;
  for (Round t = 1; t <= draws; ++t) {
    bern += sample_reward(seq, t, 0, s);
    const double u = sample_reward(seq, t, 0, s, RewardLaw::Uniform);
    EXPECT_GE(u, 0.0);
    EXPECT_LE(u, 0.6);
    unif += u;
  }
  EXPECT_NEAR(bern / draws, 0.3, 0.005);
  EXPECT_NEAR(unif / draws, 0.3, 0.005);
}

TEST(SampleReward, Reproducible) {
  MeanSequence seq(50, 3, 0.5);
  const RandomStream a(5, StreamId::Reward);
  const RandomStream b(5, StreamId::Reward);
  for (Round t = 1; t <= 50; ++t)
    for (int k = 0; k < 3; ++k) EXPECT_EQ(sample_reward(seq, t, k, a), sample_reward(seq, t, k, b));
}

}  // namespace
}  // namespace nsbandit
