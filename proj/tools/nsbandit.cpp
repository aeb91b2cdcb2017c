// Command-line front end for the simulation library.
//
//   nsbandit validate <spec>
//   nsbandit run <spec>
//   nsbandit plot <results> --kind <k> [--out f.svg] [--budget B]
//   nsbandit hard-instance <cfg> --out <csv>
//   nsbandit trace <cfg> --seed <s> [--out f.csv]
//   nsbandit simulate <cfg> [--seed s] [--log f.csv] [--trace f.csv]
//   nsbandit schedule --n N --b b [--seed s]
//
// Exit code 0 on success, 2 on validation failure, 1 on other errors.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nsbandit/nsbandit.hpp"

namespace {

using namespace nsbandit;

constexpr int kValidationFailure = 2;

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::MissingColumns:
      return false;
    default:
      return true;
  }
}

void write_trace(std::ostream& out, const std::vector<TraceRecord>& trace) {
  out << "t,phase,n,m,tau,arm,on_demand,index,reward,U,history,running_lhs,running_rhs,end_evaluated,end_lhs,"
         "end_rhs,failed\n";
  for (const auto& r : trace) {
    out << r.t << ',' << r.phase << ',' << r.instance.block_scale << ',' << r.instance.scale << ','
        << r.instance.offset << ',' << (r.arm + 1) << ',' << (r.on_demand ? 1 : 0) << ',' << format_double(r.index)
        << ',' << format_double(r.reward) << ',' << format_double(r.running_min) << ',' << r.history << ','
        << format_double(r.running_lhs) << ',' << format_double(r.running_rhs) << ',' << (r.end_evaluated ? 1 : 0)
        << ',';
    if (r.end_evaluated) out << format_double(r.end_lhs) << ',' << format_double(r.end_rhs);
    else out << ',';
    out << ',' << (r.failed ? 1 : 0) << '\n';
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-stationary bandits with a query budget: simulation and evaluation"};
  app.require_subcommand(1);

  std::string spec_path;
  auto* validate = app.add_subcommand("validate", "check every grid point of an experiment spec");
  validate->add_option("spec", spec_path, "experiment spec (JSON)")->required();

  auto* run = app.add_subcommand("run", "run an experiment spec and write results.csv / summary.csv");
  run->add_option("spec", spec_path, "experiment spec (JSON)")->required();
  std::optional<std::string> out_dir;
  run->add_option("--out-dir", out_dir, "override output_dir from the spec");

  std::string results_path;
  std::string kind_name;
  std::string plot_out;
  Round plot_budget = 0;
  auto* plot = app.add_subcommand("plot", "render an SVG figure");
  plot->add_option("results", results_path, "results CSV (or action-log CSV for budget_trace)")->required();
  plot->add_option("--kind", kind_name, "regret_vs_B | regret_vs_V | regret_vs_T | budget_trace")->required();
  plot->add_option("--out", plot_out, "output SVG path (default <kind>.svg)");
  plot->add_option("--budget", plot_budget, "query budget B (budget_trace)");

  std::string cfg_path;
  std::string csv_out;
  auto* hard = app.add_subcommand("hard-instance", "generate the lower-bound hard instance as a mean CSV");
  hard->add_option("cfg", cfg_path, "run config (JSON) with T, K, B, V_T")->required();
  hard->add_option("--out", csv_out, "output CSV")->required();

  std::optional<std::uint64_t> seed_opt;
  std::string trace_out;
  auto* trace = app.add_subcommand("trace", "per-query-round detection statistics of one HyQue run");
  trace->add_option("cfg", cfg_path, "run config (JSON)")->required();
  trace->add_option("--seed", seed_opt, "seed (defaults to the config seed)");
  trace->add_option("--out", trace_out, "output CSV (default stdout)");

  std::string log_out;
  auto* simulate_cmd = app.add_subcommand("simulate", "one run; prints the regret report");
  simulate_cmd->add_option("cfg", cfg_path, "run config (JSON)")->required();
  simulate_cmd->add_option("--seed", seed_opt, "seed (defaults to the config seed)");
  simulate_cmd->add_option("--log", log_out, "write the action log CSV here");
  simulate_cmd->add_option("--trace", trace_out, "write the detection trace CSV here (HyQue)");

  int block_scale = 0;
  Round ratio = 2;
  std::uint64_t schedule_seed = 0;
  auto* schedule = app.add_subcommand("schedule", "dump one BaQue block schedule");
  schedule->add_option("--n", block_scale, "block scale n")->required();
  schedule->add_option("--b", ratio, "budget ratio b")->required();
  schedule->add_option("--seed", schedule_seed, "seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const ExperimentSpec spec = load_experiment_spec(spec_path);
      validate_experiment(spec);
      std::cout << "ok: " << expand_grid(spec).size() << " grid points x " << spec.seed_count << " seeds\n";
    } else if (*run) {
      ExperimentSpec spec = load_experiment_spec(spec_path);
      if (out_dir) spec.output_dir = *out_dir;
      const ExperimentOutput result = run_experiment(spec);
      std::cout << "wrote " << result.rows.size() << " rows to " << result.results_path.string() << "\n"
                << "summary: " << result.summary_path.string() << "\n";
    } else if (*plot) {
      const PlotKind kind = parse_plot_kind(kind_name);
      if (plot_out.empty()) plot_out = kind_name + ".svg";
      const PlotSummary summary = emit_plots(results_path, kind, plot_out, PlotOptions{plot_budget});
      std::cout << "wrote " << plot_out;
      if (summary.slope) std::cout << " (fitted slope " << *summary.slope << ")";
      if (kind == PlotKind::BudgetTrace)
        std::cout << " (queries " << summary.peak_used << " of " << summary.budget << ")";
      std::cout << "\n";
    } else if (*hard) {
      const RunConfig cfg = load_run_config(cfg_path);
      RandomStream stream(cfg.seed, StreamId::Environment);
      const auto [seq, params] = gen_hard_instance(cfg.problem, stream);
      auto out = open_output(csv_out);
      write_mean_sequence(out, seq);
      std::cout << "batch_length=" << params.batch_length << " gap=" << format_double(params.gap)
                << " batches=" << params.batch_count << " total_variation=" << format_double(total_variation(seq))
                << "\n";
    } else if (*trace || *simulate_cmd) {
      RunConfig cfg = load_run_config(cfg_path);
      const std::uint64_t seed = seed_opt.value_or(cfg.seed);
      std::vector<TraceRecord> records;
      const bool want_trace = *trace || !trace_out.empty();
      if (want_trace && cfg.settings.algorithm != Algorithm::HyQue)
        throw Error(ErrorCode::BadInput, "detection traces exist only for hyque");
      const SimulationResult result = simulate(cfg.problem, cfg.settings, seed, want_trace ? &records : nullptr);
      if (want_trace) {
        if (trace_out.empty()) {
          write_trace(std::cout, records);
        } else {
          auto out = open_output(trace_out);
          write_trace(out, records);
        }
      }
      if (*simulate_cmd) {
        if (!log_out.empty()) {
          auto out = open_output(log_out);
          write_action_log(out, result.log);
        }
        const RegretReport& r = result.report;
        std::cout << kResultsHeader << '\n';
        write_result_row(std::cout, ResultRow{seed, cfg.problem, cfg.settings.algorithm, r});
        std::cout << "on_demand=" << result.on_demand << " restarts=" << result.restarts << "\n";
      }
    } else if (*schedule) {
      RandomStream stream(schedule_seed, StreamId::Scheduler);
      const BlockSchedule block = make_block(block_scale, ratio, stream, 2, ratio << block_scale);
      std::cout << format_schedule(block);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? kValidationFailure : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
