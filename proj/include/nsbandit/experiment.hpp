#pragma once

// Experiment orchestration: grid x seed fan-out over a worker pool, one
// results row per run, and a per-grid-point summary.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "nsbandit/io.hpp"
#include "nsbandit/metrics.hpp"

namespace nsbandit {

struct SimulationResult {
  ActionLog log;
  RegretReport report;
  Round on_demand = 0;
  Round restarts = 0;
};

// One run: environment from the seed, then the algorithm on it.
inline SimulationResult simulate(const ProblemConfig& cfg, const RunSettings& settings, std::uint64_t seed,
                                 std::vector<TraceRecord>* trace = nullptr) {
  validate_run(cfg, settings);
  const MeanSequence env = make_environment(cfg, settings.environment, seed);
  SimulationResult result;
  if (settings.algorithm == Algorithm::HyQue) {
    HyqueOptions opts = settings.hyque;
    opts.trace = trace;
    HyqueRun run = run_hyque(env, cfg, seed, opts);
    result.on_demand = run.on_demand;
    result.restarts = run.restarts;
    result.log = std::move(run.log);
  } else {
    result.log = run_rexp3b(env, cfg, seed, settings.rexp3b).log;
  }
  result.report = regret_report(result.log, env);
  return result;
}

struct ExperimentSpec {
  RunSettings settings;
  std::vector<Round> horizons;
  std::vector<int> arms;
  std::vector<Round> budgets;
  std::vector<std::optional<double>> variations;
  double confidence = kDefaultConfidence;
  int seed_count = 1;
  std::uint64_t base_seed = 0;
  std::string output_dir = "results";
  unsigned workers = 1;
};

inline ExperimentSpec parse_experiment_spec(const Json& j) {
  ExperimentSpec spec;
  spec.settings = parse_run_settings(j);
  const Json grid = j.contains("grid") ? j.at("grid") : Json::object();
  spec.horizons = detail::require<std::vector<Round>>(grid, "T");
  spec.arms = detail::require<std::vector<int>>(grid, "K");
  spec.budgets = detail::require<std::vector<Round>>(grid, "B");
  if (grid.contains("V_T")) {
    for (const auto& v : grid.at("V_T")) {
      if (!v.is_number()) throw Error(ErrorCode::BadInput, "grid.V_T entries must be numbers");
      spec.variations.emplace_back(v.get<double>());
    }
  }
  if (spec.variations.empty()) spec.variations.emplace_back(std::nullopt);
  if (spec.horizons.empty() || spec.arms.empty() || spec.budgets.empty())
    throw Error(ErrorCode::BadInput, "grid lists must be nonempty");
  spec.confidence = detail::get_or<double>(j, "delta", kDefaultConfidence);
  if (j.contains("seeds")) {
    spec.seed_count = detail::get_or<int>(j.at("seeds"), "count", 1);
    spec.base_seed = detail::get_or<std::uint64_t>(j.at("seeds"), "base", 0);
  }
  if (spec.seed_count < 1) throw Error(ErrorCode::BadInput, "seeds.count must be >= 1");
  spec.base_seed = seed_override(spec.base_seed);
  spec.output_dir = detail::get_or<std::string>(j, "output_dir", spec.output_dir);
  spec.workers = detail::get_or<unsigned>(j, "workers", 1);
  return spec;
}

inline ExperimentSpec load_experiment_spec(const std::string& path) {
  return parse_experiment_spec(detail::parse_json_file(path));
}

struct GridPoint {
  ProblemConfig problem;
};

// Grid points in deterministic order: T, then K, then B, then V_T.
inline std::vector<GridPoint> expand_grid(const ExperimentSpec& spec) {
  std::vector<GridPoint> points;
  for (Round t : spec.horizons)
    for (int k : spec.arms)
      for (Round b : spec.budgets)
        for (const auto& v : spec.variations) points.push_back({ProblemConfig{t, k, b, spec.confidence, v}});
  return points;
}

// Throws the first config error found at any grid point.
inline void validate_experiment(const ExperimentSpec& spec) {
  for (const auto& point : expand_grid(spec)) {
    try {
      validate_run(point.problem, spec.settings);
    } catch (const Error& e) {
      throw Error(e.code(), "grid point T=" + std::to_string(point.problem.horizon) +
                                " K=" + std::to_string(point.problem.arms) +
                                " B=" + std::to_string(point.problem.query_budget) + ": " + e.what());
    }
  }
}

struct ResultRow {
  std::uint64_t seed = 0;
  ProblemConfig problem;
  Algorithm algorithm = Algorithm::HyQue;
  RegretReport report;
};

inline constexpr const char* kResultsHeader =
    "seed,T,K,B,V_T,algo,R_T,R_query,R_error,R_drift,queries,max_nq_run,max_q_run";
inline constexpr const char* kSummaryHeader = "T,K,B,V_T,algo,runs,mean_R_T,se_R_T,mean_queries,max_queries";

inline std::string format_variation(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline void write_result_row(std::ostream& out, const ResultRow& row) {
  const auto& r = row.report;
  out << row.seed << ',' << row.problem.horizon << ',' << row.problem.arms << ',' << row.problem.query_budget << ','
      << format_variation(row.problem.variation_budget) << ',' << to_string(row.algorithm) << ','
      << format_double(r.total) << ',' << format_double(r.query_part) << ',' << format_double(r.error_part) << ','
      << format_double(r.drift_part) << ',' << r.queries_used << ',' << r.max_nonquery_run << ','
      << r.max_query_run << '\n';
}

struct SummaryRow {
  ProblemConfig problem;
  Algorithm algorithm = Algorithm::HyQue;
  int runs = 0;
  double mean_regret = 0.0;
  double se_regret = 0.0;
  double mean_queries = 0.0;
  Round max_queries = 0;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_and_se(const std::vector<double>& values) {
  MeanSe out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
  return out;
}

struct ExperimentOutput {
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
  std::filesystem::path results_path;
  std::filesystem::path summary_path;
};

// Runs every (grid point, seed) pair; seed i of a grid point is base + i,
// so all grid points see the same environments for a given i.
inline ExperimentOutput run_experiment(const ExperimentSpec& spec, bool write_files = true) {
  validate_experiment(spec);
  const auto points = expand_grid(spec);
  const std::size_t jobs = points.size() * static_cast<std::size_t>(spec.seed_count);

  ExperimentOutput out;
  out.rows.resize(jobs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      try {
        const auto& point = points[job / static_cast<std::size_t>(spec.seed_count)];
        const std::uint64_t seed = spec.base_seed + job % static_cast<std::size_t>(spec.seed_count);
        ResultRow& row = out.rows[job];
        row.seed = seed;
        row.problem = point.problem;
        row.algorithm = spec.settings.algorithm;
        row.report = simulate(point.problem, spec.settings, seed).report;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(spec.workers, static_cast<unsigned>(jobs)));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t p = 0; p < points.size(); ++p) {
    SummaryRow s;
    s.problem = points[p].problem;
    s.algorithm = spec.settings.algorithm;
    s.runs = spec.seed_count;
    std::vector<double> regrets;
    double queries = 0.0;
    for (int i = 0; i < spec.seed_count; ++i) {
      const auto& row = out.rows[p * static_cast<std::size_t>(spec.seed_count) + static_cast<std::size_t>(i)];
      regrets.push_back(row.report.total);
      queries += static_cast<double>(row.report.queries_used);
      s.max_queries = std::max(s.max_queries, row.report.queries_used);
    }
    const MeanSe stats = mean_and_se(regrets);
    s.mean_regret = stats.mean;
    s.se_regret = stats.se;
    s.mean_queries = queries / static_cast<double>(spec.seed_count);
    out.summary.push_back(s);
  }

  if (write_files) {
    std::error_code ec;
    std::filesystem::create_directories(spec.output_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + spec.output_dir + ": " + ec.message());
    out.results_path = std::filesystem::path(spec.output_dir) / "results.csv";
    out.summary_path = std::filesystem::path(spec.output_dir) / "summary.csv";
    std::ofstream results(out.results_path, std::ios::binary);
    std::ofstream summary(out.summary_path, std::ios::binary);
    if (!results || !summary) throw Error(ErrorCode::IoError, "cannot write into " + spec.output_dir);
    results << kResultsHeader << '\n';
    for (const auto& row : out.rows) write_result_row(results, row);
    summary << kSummaryHeader << '\n';
    for (const auto& s : out.summary)
      summary << s.problem.horizon << ',' << s.problem.arms << ',' << s.problem.query_budget << ','
              << format_variation(s.problem.variation_budget) << ',' << to_string(s.algorithm) << ',' << s.runs << ','
              << format_double(s.mean_regret) << ',' << format_double(s.se_regret) << ','
              << format_double(s.mean_queries) << ',' << s.max_queries << '\n';
    if (!results || !summary) throw Error(ErrorCode::IoError, "write failed in " + spec.output_dir);
  }
  return out;
}

}  // namespace nsbandit
