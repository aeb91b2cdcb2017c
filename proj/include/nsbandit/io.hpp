#pragma once

// File formats: mean-sequence CSV and JSON run configuration.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "nsbandit/action_log.hpp"
#include "nsbandit/environment.hpp"
#include "nsbandit/hyque.hpp"
#include "nsbandit/problem.hpp"
#include "nsbandit/rexp3b.hpp"

namespace nsbandit {

inline void write_mean_sequence(std::ostream& out, const MeanSequence& seq) {
  out << 't';
  for (int k = 1; k <= seq.arms(); ++k) out << ",arm_" << k;
  out << '\n';
  for (Round t = 1; t <= seq.horizon(); ++t) {
    out << t;
    for (double mu : seq.row(t)) out << ',' << format_double(mu);
    out << '\n';
  }
}

// Reads and validates a mean-sequence CSV (shape and entries in [0,1]).
inline MeanSequence read_mean_sequence(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MissingColumns, "empty mean-sequence file");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header[0] != "t") throw Error(ErrorCode::MissingColumns, "header must be t,arm_1..arm_K");
  const int arms = static_cast<int>(header.size()) - 1;
  for (int k = 1; k <= arms; ++k)
    if (header[static_cast<std::size_t>(k)] != "arm_" + std::to_string(k))
      throw Error(ErrorCode::MissingColumns, "unexpected column " + header[static_cast<std::size_t>(k)]);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (static_cast<int>(fields.size()) != arms + 1) throw Error(ErrorCode::BadInput, "ragged mean-sequence row");
    if (detail::parse_number<Round>(fields[0]) != static_cast<Round>(rows.size()) + 1)
      throw Error(ErrorCode::BadInput, "rounds must be 1..T in order");
    std::vector<double> row;
    for (int k = 1; k <= arms; ++k) row.push_back(detail::parse_number<double>(fields[static_cast<std::size_t>(k)]));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::BadInput, "mean-sequence file has no rows");
  MeanSequence seq(static_cast<Round>(rows.size()), arms);
  for (Round t = 1; t <= seq.horizon(); ++t)
    for (int k = 0; k < arms; ++k) seq(t, k) = rows[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(k)];
  seq.validate();
  return seq;
}

inline MeanSequence load_mean_sequence(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_mean_sequence(in);
}

enum class Algorithm { HyQue, Rexp3B };

inline std::string to_string(Algorithm algo) { return algo == Algorithm::HyQue ? "hyque" : "rexp3b"; }

enum class EnvironmentKind { Piecewise, Drift, HardInstance, File };

struct EnvironmentSpec {
  EnvironmentKind kind = EnvironmentKind::Piecewise;
  Round segments = 10;
  double gap_scale = 1.0;
  std::string path;  // for File
};

// Everything needed for one simulated run apart from the seed.
struct RunSettings {
  Algorithm algorithm = Algorithm::HyQue;
  EnvironmentSpec environment;
  RewardLaw reward_law = RewardLaw::Bernoulli;
  HyqueOptions hyque;
  Rexp3bOptions rexp3b;
};

struct RunConfig {
  ProblemConfig problem;
  RunSettings settings;
  std::uint64_t seed = 0;
};

using Json = nlohmann::json;

namespace detail {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BadInput, std::string("key '") + key + "': " + e.what());
  }
}

template <typename T>
T require(const Json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::BadInput, std::string("missing key '") + key + "'");
  return get_or<T>(j, key, T{});
}

inline Json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BadInput, path + ": " + e.what());
  }
}

}  // namespace detail

inline Algorithm parse_algorithm(const std::string& name) {
  if (name == "hyque") return Algorithm::HyQue;
  if (name == "rexp3b") return Algorithm::Rexp3B;
  throw Error(ErrorCode::BadInput, "unknown algorithm '" + name + "'");
}

inline EnvironmentSpec parse_environment(const Json& j) {
  EnvironmentSpec env;
  const auto kind = detail::get_or<std::string>(j, "kind", "piecewise");
  if (kind == "piecewise") env.kind = EnvironmentKind::Piecewise;
  else if (kind == "drift") env.kind = EnvironmentKind::Drift;
  else if (kind == "hard_instance") env.kind = EnvironmentKind::HardInstance;
  else if (kind == "file") env.kind = EnvironmentKind::File;
  else throw Error(ErrorCode::BadInput, "unknown environment kind '" + kind + "'");
  env.segments = detail::get_or<Round>(j, "segments", env.segments);
  env.gap_scale = detail::get_or<double>(j, "gap_scale", env.gap_scale);
  env.path = detail::get_or<std::string>(j, "path", "");
  if (env.kind == EnvironmentKind::File && env.path.empty())
    throw Error(ErrorCode::BadInput, "file environment needs 'path'");
  return env;
}

inline RunSettings parse_run_settings(const Json& j) {
  RunSettings s;
  s.algorithm = parse_algorithm(detail::get_or<std::string>(j, "algorithm", "hyque"));
  if (j.contains("environment")) s.environment = parse_environment(j.at("environment"));
  const auto law = detail::get_or<std::string>(j, "reward_law", "bernoulli");
  if (law == "bernoulli") s.reward_law = RewardLaw::Bernoulli;
  else if (law == "uniform") s.reward_law = RewardLaw::Uniform;
  else throw Error(ErrorCode::BadInput, "unknown reward_law '" + law + "'");
  s.hyque.reward_law = s.reward_law;
  s.rexp3b.reward_law = s.reward_law;
  if (j.contains("hyque")) {
    const Json& h = j.at("hyque");
    const auto base = detail::get_or<std::string>(h, "log_base", "e");
    if (base == "e") s.hyque.log_base = LogBase::Natural;
    else if (base == "2") s.hyque.log_base = LogBase::Two;
    else throw Error(ErrorCode::BadInput, "hyque.log_base must be \"e\" or \"2\"");
    const auto norm = detail::get_or<std::string>(h, "end_normalizer", "scale");
    if (norm == "scale") s.hyque.end_normalizer = EndTestNormalizer::Scale;
    else if (norm == "count") s.hyque.end_normalizer = EndTestNormalizer::Count;
    else throw Error(ErrorCode::BadInput, "hyque.end_normalizer must be \"scale\" or \"count\"");
    s.hyque.rho_scale = detail::get_or<double>(h, "rho_scale", 1.0);
    if (!(s.hyque.rho_scale > 0.0)) throw Error(ErrorCode::BadInput, "hyque.rho_scale must be positive");
    s.hyque.on_demand = detail::get_or<bool>(h, "on_demand", true);
  }
  if (j.contains("rexp3b")) s.rexp3b.reset_weights = detail::get_or<bool>(j.at("rexp3b"), "reset_weights", true);
  return s;
}

// NSBANDIT_SEED, when set, overrides the seed from the file.
inline std::uint64_t seed_override(std::uint64_t from_file) {
  if (const char* env = std::getenv("NSBANDIT_SEED"); env && *env) {
    try {
      return detail::parse_number<std::uint64_t>(env);
    } catch (const Error&) {
      throw Error(ErrorCode::BadInput, "NSBANDIT_SEED is not an unsigned integer");
    }
  }
  return from_file;
}

inline RunConfig parse_run_config(const Json& j) {
  RunConfig cfg;
  cfg.problem.horizon = detail::require<Round>(j, "T");
  cfg.problem.arms = detail::require<int>(j, "K");
  cfg.problem.query_budget = detail::require<Round>(j, "B");
  cfg.problem.confidence = detail::get_or<double>(j, "delta", kDefaultConfidence);
  if (j.contains("V_T") && !j.at("V_T").is_null()) cfg.problem.variation_budget = detail::require<double>(j, "V_T");
  cfg.settings = parse_run_settings(j);
  cfg.seed = seed_override(detail::get_or<std::uint64_t>(j, "seed", 0));
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) { return parse_run_config(detail::parse_json_file(path)); }

// Builds the environment for a run. File environments must match (T, K).
inline MeanSequence make_environment(const ProblemConfig& cfg, const EnvironmentSpec& spec, std::uint64_t seed) {
  RandomStream stream(seed, StreamId::Environment);
  switch (spec.kind) {
    case EnvironmentKind::Piecewise:
      return gen_piecewise(cfg, spec.segments, spec.gap_scale, stream);
    case EnvironmentKind::Drift:
      return gen_drift(cfg, stream);
    case EnvironmentKind::HardInstance:
      return gen_hard_instance(cfg, stream).first;
    case EnvironmentKind::File: {
      MeanSequence seq = load_mean_sequence(spec.path);
      if (seq.horizon() != cfg.horizon || seq.arms() != cfg.arms)
        throw Error(ErrorCode::BadInput, "environment file shape does not match T x K");
      return seq;
    }
  }
  throw Error(ErrorCode::BadInput, "unknown environment kind");
}

// Config checks beyond validate_config that depend on the algorithm and environment.
inline void validate_run(const ProblemConfig& cfg, const RunSettings& settings) {
  validate_config(cfg, settings.environment.kind == EnvironmentKind::HardInstance ? VariationRegime::HardInstance
                                                                                   : VariationRegime::Any);
  if (settings.algorithm == Algorithm::Rexp3B) rexp3b_params(cfg);
  if (settings.environment.kind == EnvironmentKind::Drift && !cfg.variation_budget)
    throw Error(ErrorCode::VariationOutOfRange, "drift environment needs V_T");
  if (settings.environment.kind == EnvironmentKind::Piecewise &&
      (settings.environment.segments < 1 || settings.environment.segments > cfg.horizon))
    throw Error(ErrorCode::BadInput, "segments must lie in [1, T]");
}

inline Json policy_checkpoint(const Ucb1State& state) {
  return Json{{"kind", "ucb1"},
              {"pull_counts", state.pull_counts},
              {"reward_sums", state.reward_sums},
              {"local_time", state.local_time}};
}

inline Json policy_checkpoint(const Exp3State& state) {
  return Json{{"kind", "exp3"}, {"weights", state.weights}, {"gamma", state.gamma}};
}

}  // namespace nsbandit
