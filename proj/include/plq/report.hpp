#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "plq/errors.hpp"
#include "plq/matrix_path.hpp"

namespace plq {

struct ExponentialFit {
  double rate = 0.0;       // decay rate (1/time), positive for decaying data
  double amplitude = 0.0;  // exp(intercept)
  double r_squared = 0.0;
  double window_lo = 0.0, window_hi = 0.0;
  int points_used = 0;
};

/// Least squares of ln(v) against t over the window, ignoring values at or
/// below `floor`. rate = -slope, amplitude = exp(intercept).
inline ExponentialFit fit_exponential(const std::vector<std::pair<double, double>>& series,
                                      double floor_value, double t_lo, double t_hi) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [t, v] : series)
    if (t >= t_lo && t <= t_hi && v > floor_value) pts.emplace_back(t, std::log(v));
  if (pts.size() < 10)
    throw InsufficientDataError("fit_exponential: only " + std::to_string(pts.size()) +
                                " usable points in window");
  double n = static_cast<double>(pts.size());
  double st = 0, sv = 0, stt = 0, stv = 0;
  for (const auto& [t, lv] : pts) {
    st += t;
    sv += lv;
    stt += t * t;
    stv += t * lv;
  }
  double denom = n * stt - st * st;
  double slope = (denom != 0.0) ? (n * stv - st * sv) / denom : 0.0;
  double intercept = (sv - slope * st) / n;
  double ss_res = 0, ss_tot = 0, mean = sv / n;
  for (const auto& [t, lv] : pts) {
    double pred = intercept + slope * t;
    ss_res += (lv - pred) * (lv - pred);
    ss_tot += (lv - mean) * (lv - mean);
  }
  ExponentialFit fit;
  fit.rate = -slope;
  fit.amplitude = std::exp(intercept);
  fit.r_squared = (ss_tot > 0.0) ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
  fit.window_lo = t_lo;
  fit.window_hi = t_hi;
  fit.points_used = static_cast<int>(pts.size());
  return fit;
}

namespace detail {

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// CSV with header `t, X_11, ..., X_nm` (row-major entries), one row per
/// node, 17 significant digits. An empty sample list produces a header-only
/// file and a warning on stderr.
inline void emit_samples_csv(const std::vector<double>& times,
                             const std::vector<Eigen::MatrixXd>& samples,
                             const std::string& file) {
  if (times.size() != samples.size())
    throw ConfigError("emit_samples_csv: times/samples length mismatch");
  std::ofstream out(file);
  if (!out) throw Error("emit_samples_csv: cannot open '" + file + "'");
  if (samples.empty()) {
    out << "t\n";
    std::cerr << "warning: writing header-only CSV for empty path: " << file << "\n";
    return;
  }
  Eigen::Index rows = samples[0].rows(), cols = samples[0].cols();
  out << "t";
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      out << ", X_" << (r + 1) << (c + 1);
  out << "\n";
  for (size_t i = 0; i < samples.size(); ++i) {
    out << detail::format_g17(times[i]);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        out << ", " << detail::format_g17(samples[i](r, c));
    out << "\n";
  }
  if (!out) throw Error("emit_samples_csv: write failed for '" + file + "'");
}

inline void emit_path_csv(const MatrixPath& path, const std::string& file) {
  std::vector<double> times(static_cast<size_t>(path.size()));
  for (int i = 0; i < path.size(); ++i) times[static_cast<size_t>(i)] = path.time_at(i);
  emit_samples_csv(times, path.samples(), file);
}

/// Two-column series CSV, e.g. the turnpike error `t,e`.
inline void emit_series_csv(const std::vector<std::pair<double, double>>& series,
                            const std::string& header, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw Error("emit_series_csv: cannot open '" + file + "'");
  out << header << "\n";
  for (const auto& [t, v] : series)
    out << detail::format_g17(t) << "," << detail::format_g17(v) << "\n";
}

struct CsvData {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> samples;
  Eigen::Index rows = 0, cols = 0;
};

/// Reads the CSV format written by emit_samples_csv. Matrix shape is
/// recovered from the trailing header token (X_nm).
inline CsvData read_path_csv(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw Error("read_path_csv: cannot open '" + file + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error("read_path_csv: empty file '" + file + "'");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      size_t a = tok.find_first_not_of(" \t\r");
      size_t b = tok.find_last_not_of(" \t\r");
      header.push_back(a == std::string::npos ? "" : tok.substr(a, b - a + 1));
    }
  }
  CsvData data;
  if (header.size() <= 1) return data;
  // Entries are row-major, so the first row change produces the token X_21;
  // its position fixes the column count.
  Eigen::Index entries = static_cast<Eigen::Index>(header.size()) - 1;
  data.cols = entries;
  data.rows = 1;
  for (size_t i = 1; i < header.size(); ++i) {
    if (header[i] == "X_21") {
      data.cols = static_cast<Eigen::Index>(i) - 1;
      data.rows = entries / data.cols;
      break;
    }
  }
  if (data.rows * data.cols != entries)
    throw Error("read_path_csv: header does not match entry count");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) vals.push_back(std::strtod(tok.c_str(), nullptr));
    if (vals.size() != header.size())
      throw Error("read_path_csv: row width mismatch in '" + file + "'");
    data.times.push_back(vals[0]);
    Eigen::MatrixXd m(data.rows, data.cols);
    size_t idx = 1;
    for (Eigen::Index r = 0; r < data.rows; ++r)
      for (Eigen::Index c = 0; c < data.cols; ++c) m(r, c) = vals[idx++];
    data.samples.push_back(std::move(m));
  }
  return data;
}

enum class PlotKind { Trajectory, ErrorDecay };

/// Writes a gnuplot script plotting the given CSVs (referenced relative to
/// the script's directory). Trajectory plots draw one line per data column;
/// error-decay plots use a logarithmic vertical axis.
inline void emit_gnuplot_script(const std::vector<std::string>& csv_files, PlotKind kind,
                                const std::string& file) {
  namespace fs = std::filesystem;
  std::ofstream out(file);
  if (!out) throw Error("emit_gnuplot_script: cannot open '" + file + "'");
  out << "set datafile separator \",\"\n";
  out << "set xlabel \"t\"\n";
  out << "set key top right\n";
  if (kind == PlotKind::ErrorDecay) out << "set logscale y\n";
  out << "plot ";
  fs::path script_dir = fs::path(file).parent_path();
  bool first = true;
  for (const auto& csv : csv_files) {
    std::ifstream probe(csv);
    if (!probe) throw Error("emit_gnuplot_script: missing CSV '" + csv + "'");
    std::string header;
    std::getline(probe, header);
    size_t ncols = static_cast<size_t>(std::count(header.begin(), header.end(), ',')) + 1;
    std::error_code ec;
    fs::path rel = fs::relative(csv, script_dir.empty() ? fs::path(".") : script_dir, ec);
    std::string ref = ec ? csv : rel.string();
    std::string stem = fs::path(csv).stem().string();
    for (size_t c = 2; c <= ncols; ++c) {
      if (!first) out << ", \\\n     ";
      first = false;
      out << "\"" << ref << "\" using 1:" << c << " with lines title \"" << stem;
      if (ncols > 2) out << "[" << (c - 1) << "]";
      out << "\"";
    }
  }
  out << "\n";
}

/// One named check of a diagnostics table.
struct DiagnosticCheck {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline DiagnosticCheck make_check(const std::string& name, double value, double tolerance) {
  return DiagnosticCheck{name, value, tolerance, value <= tolerance};
}

inline nlohmann::json to_json(const std::vector<DiagnosticCheck>& checks) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}});
  return arr;
}

}  // namespace plq
