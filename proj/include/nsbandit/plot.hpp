#pragma once

// Standalone SVG figures for regret-scaling sweeps and budget traces.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nsbandit/action_log.hpp"
#include "nsbandit/metrics.hpp"
#include "nsbandit/problem.hpp"

namespace nsbandit {

enum class PlotKind { RegretVsB, RegretVsV, RegretVsT, BudgetTrace };

inline PlotKind parse_plot_kind(const std::string& name) {
  if (name == "regret_vs_B") return PlotKind::RegretVsB;
  if (name == "regret_vs_V") return PlotKind::RegretVsV;
  if (name == "regret_vs_T") return PlotKind::RegretVsT;
  if (name == "budget_trace") return PlotKind::BudgetTrace;
  throw Error(ErrorCode::BadInput, "unknown plot kind '" + name + "'");
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MissingColumns, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MissingColumns, path + " is empty");
  table.header = detail::split_csv_line(line);
  while (std::getline(in, line))
    if (!line.empty()) table.rows.push_back(detail::split_csv_line(line));
  return table;
}

struct PlotSummary {
  std::vector<ScalingPoint> points;   // scaling plots: (x, mean regret)
  std::optional<double> slope;        // fitted when >= 3 distinct x values
  Round budget = 0;                   // budget_trace only
  Round peak_used = 0;                // budget_trace only: final B'
  bool crosses_cap = false;           // budget_trace only
};

namespace detail {

class Svg {
 public:
  static constexpr double kWidth = 640;
  static constexpr double kHeight = 440;
  static constexpr double kLeft = 80;
  static constexpr double kRight = 30;
  static constexpr double kTop = 40;
  static constexpr double kBottom = 60;

  Svg(std::string title, std::string xlabel, std::string ylabel) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    text(kWidth / 2, 24, title, "middle", 16);
    text(kWidth / 2, kHeight - 16, xlabel, "middle", 13);
    out_ << "<text x=\"18\" y=\"" << kHeight / 2 << "\" font-family=\"sans-serif\" font-size=\"13\" "
         << "text-anchor=\"middle\" transform=\"rotate(-90 18 " << kHeight / 2 << ")\">" << escape(ylabel)
         << "</text>\n";
    out_ << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_width() << "\" height=\""
         << plot_height() << "\" fill=\"none\" stroke=\"black\"/>\n";
  }

  static double plot_width() { return kWidth - kLeft - kRight; }
  static double plot_height() { return kHeight - kTop - kBottom; }

  void text(double x, double y, const std::string& s, const char* anchor = "start", int size = 11) {
    out_ << "<text x=\"" << x << "\" y=\"" << y << "\" font-family=\"sans-serif\" font-size=\"" << size
         << "\" text-anchor=\"" << anchor << "\">" << escape(s) << "</text>\n";
  }
  void line(double x1, double y1, double x2, double y2, const char* color, const char* dash = nullptr) {
    out_ << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2 << "\" stroke=\""
         << color << "\" stroke-width=\"1.5\"";
    if (dash) out_ << " stroke-dasharray=\"" << dash << '"';
    out_ << "/>\n";
  }
  void circle(double x, double y, const char* color) {
    out_ << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"4\" fill=\"" << color << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* color) {
    out_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : pts) out_ << x << ',' << y << ' ';
    out_ << "\"/>\n";
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  static std::string escape(const std::string& s) {
    std::string r;
    for (char c : s) {
      if (c == '<') r += "&lt;";
      else if (c == '>') r += "&gt;";
      else if (c == '&') r += "&amp;";
      else r += c;
    }
    return r;
  }

  std::ostringstream out_;
};

struct Axis {
  double lo;
  double hi;
  bool log;

  double map(double v, double pixel_lo, double pixel_hi) const {
    const double a = log ? std::log10(v) : v;
    const double l = log ? std::log10(lo) : lo;
    const double h = log ? std::log10(hi) : hi;
    const double frac = h > l ? (a - l) / (h - l) : 0.5;
    return pixel_lo + frac * (pixel_hi - pixel_lo);
  }
};

inline Axis padded_log_axis(double lo, double hi) {
  if (lo == hi) return {lo / 2, hi * 2, true};
  const double pad = std::pow(hi / lo, 0.08);
  return {lo / pad, hi * pad, true};
}

inline std::string short_number(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

inline std::string render_scaling(const std::vector<ScalingPoint>& pts, const std::optional<double>& slope,
                                  const std::string& xname) {
  Svg svg("mean dynamic regret vs " + xname, xname + " (log scale)", "mean regret (log scale)");
  double xlo = pts.front().x, xhi = pts.front().x, ylo = pts.front().y, yhi = pts.front().y;
  for (const auto& p : pts) {
    xlo = std::min(xlo, p.x);
    xhi = std::max(xhi, p.x);
    ylo = std::min(ylo, p.y);
    yhi = std::max(yhi, p.y);
  }
  const Axis ax = padded_log_axis(xlo, xhi);
  const Axis ay = padded_log_axis(ylo, yhi);
  const double left = Svg::kLeft, right = Svg::kLeft + Svg::plot_width();
  const double bottom = Svg::kTop + Svg::plot_height(), top = Svg::kTop;
  for (const auto& p : pts) {
    const double x = ax.map(p.x, left, right);
    svg.circle(x, ay.map(p.y, bottom, top), "#1f77b4");
    svg.text(x, bottom + 16, short_number(p.x), "middle");
  }
  svg.text(left - 6, ay.map(ylo, bottom, top) + 4, short_number(ylo), "end");
  svg.text(left - 6, ay.map(yhi, bottom, top) + 4, short_number(yhi), "end");
  if (slope) {
    // Least-squares line through the centroid in log space.
    double mx = 0.0, my = 0.0;
    for (const auto& p : pts) {
      mx += std::log(p.x);
      my += std::log(p.y);
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    auto fit = [&](double x) { return std::exp(my + *slope * (std::log(x) - mx)); };
    svg.line(ax.map(xlo, left, right), ay.map(fit(xlo), bottom, top), ax.map(xhi, left, right),
             ay.map(fit(xhi), bottom, top), "#d62728", "6,4");
    std::ostringstream label;
    label.setf(std::ios::fixed);
    label.precision(3);
    label << "fitted slope = " << *slope;
    svg.text(right - 8, top + 20, label.str(), "end", 13);
  }
  return svg.finish();
}

}  // namespace detail

// Aggregates a results CSV by one column (mean of R_T) and fits the log-log slope.
inline PlotSummary scaling_points(const CsvTable& table, const std::string& x_column) {
  const std::size_t xc = table.column(x_column);
  const std::size_t yc = table.column("R_T");
  std::map<double, std::pair<double, int>> groups;
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw Error(ErrorCode::MissingColumns, "ragged results row");
    if (row[xc].empty()) throw Error(ErrorCode::MissingColumns, "column '" + x_column + "' is empty");
    auto& g = groups[detail::parse_number<double>(row[xc])];
    g.first += detail::parse_number<double>(row[yc]);
    ++g.second;
  }
  PlotSummary summary;
  for (const auto& [x, g] : groups) summary.points.push_back({x, g.first / g.second});
  if (summary.points.size() >= 3) summary.slope = fit_scaling(summary.points);
  return summary;
}

struct PlotOptions {
  Round budget = 0;  // required by budget_trace
};

// Renders `kind` from `input_path` into `output_path`. Scaling kinds read a
// results CSV; budget_trace reads an action-log CSV.
inline PlotSummary emit_plots(const std::string& input_path, PlotKind kind, const std::string& output_path,
                              const PlotOptions& options = {}) {
  PlotSummary summary;
  std::string svg;
  if (kind == PlotKind::BudgetTrace) {
    if (options.budget < 1) throw Error(ErrorCode::BadInput, "budget_trace needs the query budget B");
    std::ifstream in(input_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + input_path);
    const ActionLog log = read_action_log(in);
    if (log.records.empty()) throw Error(ErrorCode::BadInput, "empty action log");
    const double horizon = static_cast<double>(log.records.size());
    const double budget = static_cast<double>(options.budget);
    summary.budget = options.budget;

    detail::Svg canvas("query usage vs round", "round t", "queries used B'");
    const double left = detail::Svg::kLeft, right = left + detail::Svg::plot_width();
    const double bottom = detail::Svg::kTop + detail::Svg::plot_height(), top = detail::Svg::kTop;
    const detail::Axis ax{0.0, horizon, false};
    const detail::Axis ay{0.0, budget * 1.05, false};
    std::vector<std::pair<double, double>> trace;
    const std::size_t stride = std::max<std::size_t>(1, log.records.size() / 2000);
    Round used = 0;
    trace.emplace_back(ax.map(0, left, right), ay.map(0, bottom, top));
    for (std::size_t i = 0; i < log.records.size(); ++i) {
      used += log.records[i].query ? 1 : 0;
      if (used > options.budget) summary.crosses_cap = true;
      if (i % stride == 0 || i + 1 == log.records.size())
        trace.emplace_back(ax.map(static_cast<double>(i + 1), left, right),
                           ay.map(static_cast<double>(used), bottom, top));
    }
    summary.peak_used = used;
    canvas.line(ax.map(0, left, right), ay.map(budget, bottom, top), right, ay.map(budget, bottom, top), "#d62728",
                "6,4");
    canvas.line(ax.map(0, left, right), ay.map(0, bottom, top), right, ay.map(budget, bottom, top), "#7f7f7f",
                "2,3");
    canvas.polyline(trace, "#1f77b4");
    canvas.text(right - 8, ay.map(budget, bottom, top) - 6, "cap B = " + std::to_string(options.budget), "end");
    canvas.text(right - 8, ay.map(budget * 0.5, bottom, top), "pacing t*B/T", "end");
    canvas.text(right, bottom + 16, std::to_string(log.records.size()), "end");
    canvas.text(left, bottom + 16, "0", "middle");
    svg = canvas.finish();
  } else {
    const CsvTable table = read_csv_table(input_path);
    const char* column = kind == PlotKind::RegretVsB ? "B" : kind == PlotKind::RegretVsV ? "V_T" : "T";
    summary = scaling_points(table, column);
    if (summary.points.empty()) throw Error(ErrorCode::BadInput, "results file has no rows");
    svg = detail::render_scaling(summary.points, summary.slope, column);
  }
  std::ofstream out(output_path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + output_path);
  out << svg;
  return summary;
}

}  // namespace nsbandit
