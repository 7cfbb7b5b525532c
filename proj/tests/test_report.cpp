#include <catch2/catch.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "plq/report.hpp"

using namespace plq;

namespace {

std::string temp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& file) {
  std::ifstream in(file);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("exponential fit recovers synthetic rates", "[report]") {
  std::vector<std::pair<double, double>> series;
  for (int i = 0; i <= 300; ++i) {
    double t = 3.0 * i / 300.0;
    series.emplace_back(t, 5.0 * std::exp(-2.0 * t));
  }
  ExponentialFit fit = fit_exponential(series, 1e-12, 0.0, 3.0);
  CHECK(fit.rate == Approx(2.0).margin(1e-6));
  CHECK(fit.amplitude == Approx(5.0).margin(1e-5));
  CHECK(fit.r_squared > 0.999999);

  std::vector<std::pair<double, double>> flat;
  for (int i = 0; i <= 50; ++i) flat.emplace_back(i * 0.1, 3.0);
  CHECK(fit_exponential(flat, 1e-12, 0.0, 5.0).rate == Approx(0.0).margin(1e-12));

  CHECK_THROWS_AS(fit_exponential(flat, 1e-12, 4.9, 5.0), InsufficientDataError);
}

TEST_CASE("two-exponential series fits cleanly after trailing subtraction", "[report]") {
  double T = 10.0;
  std::vector<std::pair<double, double>> series, corrected;
  for (int i = 0; i <= 1000; ++i) {
    double t = T * i / 1000.0;
    double v = std::exp(-2.0 * t) + std::exp(-2.0 * (T - t));
    series.emplace_back(t, v);
    corrected.emplace_back(t, v - std::exp(-2.0 * (T - t)));
  }
  ExponentialFit fit = fit_exponential(corrected, 1e-12, 1.0, 5.0);
  CHECK(fit.rate == Approx(2.0).margin(1e-3));
}

TEST_CASE("path CSV round trip is exact at 17 significant digits", "[report]") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> uni(-5.0, 5.0);
  std::vector<Eigen::MatrixXd> samples;
  std::vector<Eigen::MatrixXd> derivs;
  for (int i = 0; i < 12; ++i) {
    Eigen::MatrixXd m(2, 2), d(2, 2);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        m(r, c) = uni(rng);
        d(r, c) = uni(rng);
      }
    samples.push_back(m);
    derivs.push_back(d);
  }
  MatrixPath path(0.25, 0.125, samples, derivs);
  std::string file = temp_file("plq_test_roundtrip.csv");
  emit_path_csv(path, file);
  CsvData data = read_path_csv(file);
  REQUIRE(data.samples.size() == samples.size());
  CHECK(data.rows == 2);
  CHECK(data.cols == 2);
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK((data.samples[i] - samples[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(data.times[i] == path.time_at(static_cast<int>(i)));
  }
  std::filesystem::remove(file);
}

TEST_CASE("two-node path emits a header plus two rows", "[report]") {
  std::vector<Eigen::MatrixXd> s(2, Eigen::MatrixXd::Identity(2, 2));
  std::vector<Eigen::MatrixXd> d(2, Eigen::MatrixXd::Zero(2, 2));
  MatrixPath path(0.0, 1.0, s, d);
  std::string file = temp_file("plq_test_two_rows.csv");
  emit_path_csv(path, file);
  std::string text = slurp(file);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(text.rfind("t, X_11, X_12, X_21, X_22", 0) == 0);
  std::filesystem::remove(file);
}

TEST_CASE("empty paths produce a header-only file", "[report]") {
  std::string file = temp_file("plq_test_empty.csv");
  emit_samples_csv({}, {}, file);
  CHECK(slurp(file) == "t\n");
  std::filesystem::remove(file);
}

TEST_CASE("gnuplot emission", "[report]") {
  std::vector<Eigen::MatrixXd> s(4, Eigen::MatrixXd::Identity(2, 1));
  std::vector<Eigen::MatrixXd> d(4, Eigen::MatrixXd::Zero(2, 1));
  MatrixPath path(0.0, 0.5, s, d);
  std::string csv_a = temp_file("plq_plot_a.csv");
  std::string csv_b = temp_file("plq_plot_b.csv");
  emit_path_csv(path, csv_a);
  emit_path_csv(path, csv_b);

  std::string traj = temp_file("plq_plot_traj.gp");
  emit_gnuplot_script({csv_a, csv_b}, PlotKind::Trajectory, traj);
  std::string traj_text = slurp(traj);
  // One line per data column per file: 2 columns x 2 files.
  CHECK(std::count(traj_text.begin(), traj_text.end(), ':') == 4);
  CHECK(traj_text.find("logscale") == std::string::npos);

  std::string decay = temp_file("plq_plot_decay.gp");
  emit_gnuplot_script({csv_a}, PlotKind::ErrorDecay, decay);
  CHECK(slurp(decay).find("set logscale y") != std::string::npos);

  CHECK_THROWS_AS(emit_gnuplot_script({temp_file("plq_missing.csv")}, PlotKind::Trajectory,
                                      temp_file("plq_plot_x.gp")),
                  Error);
  for (const auto& f : {csv_a, csv_b, traj, decay}) std::filesystem::remove(f);
}

TEST_CASE("diagnostic checks serialize with the expected schema", "[report]") {
  std::vector<DiagnosticCheck> checks = {make_check("alpha", 1e-9, 1e-8),
                                         make_check("beta", 2.0, 1.0)};
  nlohmann::json j = to_json(checks);
  REQUIRE(j.size() == 2);
  CHECK(j[0]["name"] == "alpha");
  CHECK(j[0]["pass"] == true);
  CHECK(j[1]["pass"] == false);
  CHECK(j[1].contains("value"));
  CHECK(j[1].contains("tolerance"));
}
