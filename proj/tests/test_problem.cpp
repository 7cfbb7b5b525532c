#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "plq/problem.hpp"
#include "plq/problem_io.hpp"

using namespace plq;

TEST_CASE("paper-2d coefficients at distinguished times", "[problem]") {
  PeriodicProblem p = builtin_problem("paper-2d");
  CoefficientSample s0 = p.eval(0.0);
  Eigen::MatrixXd a0(2, 2);
  a0 << 0.0, 1.0, 1.0, 0.0;
  CHECK((s0.A - a0).norm() < 1e-15);
  CHECK((s0.B - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
  CHECK((s0.C - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
  CHECK((s0.Q - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
  CHECK(s0.y_d(0) == Approx(0.0).margin(1e-15));
  CHECK(s0.y_d(1) == Approx(1.0).margin(1e-15));
  CHECK(s0.u_d.norm() == 0.0);

  Eigen::MatrixXd a_half(2, 2);
  a_half << 1.0, 0.0, std::exp(-1.0), -1.0;
  CHECK((p.A_at(M_PI / 2.0) - a_half).norm() < 1e-15);
}

TEST_CASE("constant specs evaluate to themselves", "[problem]") {
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  CoefficientSpec spec = CoefficientSpec::constant(m);
  for (double t : {-4.2, 0.0, 17.9}) CHECK((spec.eval(t, 2.0 * M_PI) - m).norm() == 0.0);
}

TEST_CASE("builtin problems match their definitions", "[problem]") {
  PeriodicProblem a0 = builtin_problem("scalar-a0");
  for (double t : {0.0, 1.3, 5.0}) {
    CHECK(a0.A_at(t)(0, 0) == 0.0);
    CHECK(a0.B_at(t)(0, 0) == 1.0);
    CHECK(a0.y_d_at(t)(0) == 1.0);
  }

  PeriodicProblem c3 = builtin_problem("scalar-c3");
  // The Riccati right-hand side collapses to (p-1)^2 - 4 for this data.
  for (double pv : {-2.0, 0.0, 1.0, 3.0, 7.5}) {
    Eigen::MatrixXd pm = Eigen::MatrixXd::Constant(1, 1, pv);
    Eigen::MatrixXd a = c3.A_at(0.0);
    double rhs = -(a.transpose() * pm + pm * a - pm * c3.weight_at(0.0) * pm + c3.ctc_at(0.0))(0, 0);
    CHECK(rhs == Approx((pv - 1.0) * (pv - 1.0) - 4.0).margin(1e-12));
  }

  PeriodicProblem p2d = builtin_problem("paper-2d");
  for (double t : {0.4, 2.9, 5.5}) {
    CHECK(p2d.y_d_at(t)(0) == Approx(std::sin(t)).margin(1e-15));
    CHECK(p2d.y_d_at(t)(1) == Approx(std::cos(t)).margin(1e-15));
  }

  CHECK_THROWS_AS(builtin_problem("nope"), ConfigError);
  CHECK_THROWS_AS(CoefficientSpec::builtin("nope"), ConfigError);
}

TEST_CASE("validation accepts paper-2d and flags bad Q", "[problem]") {
  ValidationReport good = validate_problem(builtin_problem("paper-2d"));
  CHECK(good.valid());
  CHECK(good.min_eig_Q == Approx(1.0).margin(1e-12));
  CHECK(good.max_periodicity_gap < 1e-12);

  auto c1 = [](double v) { return CoefficientSpec::constant(Eigen::MatrixXd::Constant(1, 1, v)); };
  PeriodicProblem bad(1, 1, 1, 2.0 * M_PI, c1(0.0), c1(1.0), c1(1.0), c1(-1.0), c1(0.0), c1(0.0));
  ValidationReport report = validate_problem(bad);
  REQUIRE_FALSE(report.valid());
  CHECK(report.violations[0].find("Q not positive definite") != std::string::npos);
}

TEST_CASE("non-integer Fourier frequencies are rejected at construction", "[problem]") {
  nlohmann::json spec = {{"fourier",
                          {{"const", {{0.0}}},
                           {"terms", {{{"freq", 1.5}, {"cos", {{1.0}}}, {"sin", {{0.0}}}}}}}}};
  CHECK_THROWS_AS(spec_from_json(spec, "A"), ConfigError);
  // Any integer multiple is periodic by construction and accepted.
  nlohmann::json ok = {{"fourier",
                        {{"const", {{0.0}}},
                         {"terms", {{{"freq", -2}, {"cos", {{1.0}}}, {"sin", {{0.0}}}}}}}}};
  CoefficientSpec s = spec_from_json(ok, "A");
  CHECK((s.eval(0.7 + 2.0 * M_PI, 2.0 * M_PI) - s.eval(0.7, 2.0 * M_PI)).norm() < 1e-14);
}

TEST_CASE("every spec is theta-periodic at random times", "[problem]") {
  PeriodicProblem p = builtin_problem("paper-2d");
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> uni(0.0, 10.0 * p.theta());
  for (int i = 0; i < 50; ++i) {
    double t = uni(rng);
    CHECK((p.A_at(t + p.theta()) - p.A_at(t)).norm() < 1e-12);
    CHECK((p.y_d_at(t + p.theta()) - p.y_d_at(t)).norm() < 1e-12);
    CHECK((p.Q_at(t + p.theta()) - p.Q_at(t)).norm() < 1e-12);
  }
}

TEST_CASE("Fourier evaluation equals direct trigonometric summation", "[problem]") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  double theta = 3.7;
  Eigen::MatrixXd c0(2, 2), c1m(2, 2), s1(2, 2), c3m(2, 2), s3(2, 2);
  for (Eigen::MatrixXd* m : {&c0, &c1m, &s1, &c3m, &s3})
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) (*m)(r, c) = uni(rng);
  CoefficientSpec spec = CoefficientSpec::fourier(c0, {{1, c1m, s1}, {3, c3m, s3}});
  double omega = 2.0 * M_PI / theta;
  for (double t : {0.0, 0.3, 1.9, 3.69, 11.0}) {
    Eigen::MatrixXd direct = c0 + std::cos(omega * t) * c1m + std::sin(omega * t) * s1 +
                             std::cos(3 * omega * t) * c3m + std::sin(3 * omega * t) * s3;
    CHECK((spec.eval(t, theta) - direct).norm() < 1e-14);
  }
}

TEST_CASE("problem JSON round trip preserves evaluation", "[problem]") {
  PeriodicProblem p = builtin_problem("paper-2d");
  nlohmann::json j = problem_to_json(p);
  PeriodicProblem q = problem_from_json(j);
  for (double t : {0.0, 0.9, 4.4}) {
    CHECK((p.A_at(t) - q.A_at(t)).norm() == 0.0);
    CHECK((p.y_d_at(t) - q.y_d_at(t)).norm() == 0.0);
  }
  CHECK(q.theta() == p.theta());

  // Flat lists are accepted as column vectors.
  nlohmann::json flat = {{"constant", {1.0, 2.0, 3.0}}};
  CoefficientSpec v = spec_from_json(flat, "y_d");
  CHECK(v.rows() == 3);
  CHECK(v.cols() == 1);
  CHECK(v.eval(0.0, 1.0)(1, 0) == 2.0);
}
