#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "plq/ode.hpp"
#include "plq/transition.hpp"
#include "test_helpers.hpp"

using namespace plq;
using plq_test::paper2d;

namespace {

Eigen::MatrixXd m1(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

}  // namespace

TEST_CASE("zero field keeps the state constant", "[odeflow]") {
  auto rhs = [](double, const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return Eigen::MatrixXd::Zero(x.rows(), x.cols());
  };
  MatrixPath path = integrate_fixed(rhs, 0.0, 2.0, Eigen::MatrixXd::Identity(3, 3), 32);
  for (int i = 0; i < path.size(); ++i)
    CHECK((path.sample(i) - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
}

TEST_CASE("interpolation is exact at the nodes and C1 between them", "[odeflow]") {
  auto rhs = [](double t, const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return std::cos(t) * x;
  };
  MatrixPath path = integrate_fixed(rhs, 0.0, 3.0, Eigen::MatrixXd::Ones(2, 2), 96);
  for (int i = 0; i < path.size(); ++i)
    CHECK((path.eval(path.time_at(i)) - path.sample(i)).norm() < 1e-14);
  // Between nodes the Hermite interpolant tracks the closed form x = e^{sin t}.
  for (double t : {0.13, 1.71, 2.96})
    CHECK(std::abs(path.eval(t)(0, 0) - std::exp(std::sin(t))) < 1e-7);
  CHECK_THROWS_AS(path.eval(3.5), ConfigError);
}

TEST_CASE("scalar exponential to fourth order", "[odeflow]") {
  auto rhs = [](double, const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return -x; };
  MatrixPath path = integrate_fixed(rhs, 0.0, 1.0, m1(1.0), 64);
  CHECK(std::abs(path.sample(path.size() - 1)(0, 0) - std::exp(-1.0)) < 1e-8);
}

TEST_CASE("Richardson: halving the step divides the defect by about 16", "[odeflow]") {
  auto rhs = [](double, const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return -x; };
  auto defect = [&](int steps) {
    MatrixPath p = integrate_fixed(rhs, 0.0, 1.0, m1(1.0), steps);
    return std::abs(p.sample(p.size() - 1)(0, 0) - std::exp(-1.0));
  };
  double ratio = defect(32) / defect(64);
  CHECK(ratio > 13.0);
  CHECK(ratio < 19.0);
}

TEST_CASE("backward Riccati orbit approaches the repelling equilibrium", "[odeflow]") {
  // pdot = (p-1)^2 - 4 integrated backward from p = 10 lands on p = 3.
  auto rhs = [](double, const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    double p = x(0, 0);
    return m1((p - 1.0) * (p - 1.0) - 4.0);
  };
  double theta = 2.0 * M_PI;
  MatrixPath path = integrate_ode(rhs, 5.0 * theta, 0.0, m1(10.0), theta / 512);
  CHECK(std::abs(path.sample(0)(0, 0) - 3.0) < 1e-6);
}

TEST_CASE("divergence is reported with the failing time", "[odeflow]") {
  auto rhs = [](double, const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return Eigen::MatrixXd(x.array().square());
  };
  try {
    integrate_fixed(rhs, 0.0, 10.0, m1(1.0), 64);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.t_fail() > 0.0);
    CHECK(e.t_fail() <= 10.0);
  }
}

TEST_CASE("adaptive cross-check agrees with the fixed-step result", "[odeflow]") {
  const auto& pipe = paper2d();
  const Eigen::MatrixXd& mono = pipe.ric.closed_loop->monodromy();
  auto rhs = [&](double t, const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return pipe.ric.closed_loop->generator()(t) * x;
  };
  Eigen::MatrixXd adaptive = integrate_adaptive(rhs, 0.0, pipe.problem.theta(),
                                                Eigen::MatrixXd::Identity(2, 2), 1e-12, 1e-14);
  CHECK((adaptive - mono).norm() < 1e-8);
}

TEST_CASE("constant scalar generators have closed-form transitions", "[odeflow]") {
  double theta = 2.0 * M_PI;
  TransitionOperator op([](double) { return Eigen::MatrixXd::Constant(1, 1, -1.0); }, theta, 512);
  CHECK(std::abs(op.monodromy()(0, 0) - std::exp(-theta)) < 1e-10);
  CHECK(std::abs(op(1.3, 0.25)(0, 0) - std::exp(-(1.3 - 0.25))) < 1e-9);
  // Long span through monodromy powers.
  CHECK(op(5.0 * theta, 0.0)(0, 0) == Approx(std::exp(-5.0 * theta)).epsilon(1e-7));

  TransitionOperator zero([](double) { return Eigen::MatrixXd::Zero(1, 1); }, theta, 64);
  CHECK((zero.monodromy() - Eigen::MatrixXd::Identity(1, 1)).norm() == 0.0);
  DecayEstimate est = estimate_decay(zero);
  CHECK_FALSE(est.stable);
  CHECK_FALSE(est.nu_hat.has_value());
}

TEST_CASE("long backward spans of a stiffly split generator are rejected", "[odeflow]") {
  // Two well-separated stable rates: the inverted monodromy power loses a
  // factor exp((3 - 0.1) theta) of conditioning per period.
  double theta = 2.0 * M_PI;
  Eigen::MatrixXd gen(2, 2);
  gen << -0.1, 0.0, 0.0, -3.0;
  TransitionOperator op([gen](double) { return gen; }, theta, 128);
  CHECK_THROWS_AS(op(0.0, 2.0 * theta), ConditioningError);
  // One period back is still fine.
  Eigen::MatrixXd back = op(0.0, 0.5 * theta);
  CHECK(back(0, 0) == Approx(std::exp(0.1 * 0.5 * theta)).epsilon(1e-7));
}

TEST_CASE("transition at equal times is the identity", "[odeflow]") {
  const auto& op = *paper2d().ric.closed_loop;
  for (double s : {0.0, 1.7, 9.4})
    CHECK((op(s, s) - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("cocycle and periodicity of the paper-2d closed loop", "[odeflow]") {
  const auto& op = *paper2d().ric.closed_loop;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> uni(0.0, 3.0 * op.period());
  for (int i = 0; i < 20; ++i) {
    double s = uni(rng);
    double t = s + uni(rng) / 3.0;
    double r = s + (t - s) * 0.37;
    CHECK((op(t, r) * op(r, s) - op(t, s)).norm() < 1e-8);
    CHECK((op(t + op.period(), s + op.period()) - op(t, s)).norm() < 1e-9);
  }
}

TEST_CASE("adjoint propagator solves the backward adjoint equation", "[odeflow]") {
  // Constant cases first.
  double theta = 2.0 * M_PI;
  TransitionOperator zero([](double) { return Eigen::MatrixXd::Zero(2, 2); }, theta, 64);
  CHECK((zero.adjoint(3.0, 1.0) - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);

  double a = 0.37;
  TransitionOperator scalar([a](double) { return Eigen::MatrixXd::Constant(1, 1, a); }, theta, 512);
  CHECK(scalar.adjoint(2.5, 0.75)(0, 0) == Approx(std::exp(a * (2.5 - 0.75))).epsilon(1e-9));

  // paper-2d open-loop A: integrate phidot = -A^T phi backward from phi_T.
  const PeriodicProblem& p = paper2d().problem;
  TransitionOperator op_a([&p](double t) { return p.A_at(t); }, p.theta(), 2048);
  std::mt19937 rng(5);
  std::normal_distribution<double> gauss;
  double T = 4.0;
  Eigen::VectorXd phi_T(2);
  phi_T << gauss(rng), gauss(rng);
  auto adj_rhs = [&p](double t, const Eigen::MatrixXd& phi) -> Eigen::MatrixXd {
    return -p.A_at(t).transpose() * phi;
  };
  MatrixPath phi = integrate_ode(adj_rhs, T, 0.0, phi_T, p.theta() / 2048);
  for (double t : {0.0, 1.1, 2.6, 3.4}) {
    Eigen::VectorXd via_op = op_a.adjoint(T, t) * phi_T;
    CHECK((phi.eval(t).col(0) - via_op).norm() < 1e-8);
  }
}

TEST_CASE("decay estimate: rate, amplitude, and the exponential bound", "[odeflow]") {
  double theta = 2.0 * M_PI;
  TransitionOperator op([](double) { return Eigen::MatrixXd::Constant(1, 1, -1.0); }, theta, 256);
  DecayEstimate est = estimate_decay(op);
  REQUIRE(est.stable);
  CHECK(*est.nu_hat == Approx(1.0).epsilon(1e-8));
  CHECK(*est.c_hat == Approx(1.0).epsilon(1e-6));

  const auto& pipe = paper2d();
  const DecayEstimate& decay = pipe.ric.decay;
  REQUIRE(decay.stable);
  CHECK(*decay.nu_hat > 0.0);
  // Sampled spans up to 10 theta stay below the estimated envelope.
  const auto& cl = *pipe.ric.closed_loop;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> anchor(0.0, theta);
  std::uniform_real_distribution<double> span(0.0, 10.0 * theta);
  for (int i = 0; i < 60; ++i) {
    double s = anchor(rng), tau = span(rng);
    double norm = operator_norm(cl(s + tau, s));
    CHECK(norm <= *decay.c_hat * std::exp(-*decay.nu_hat * tau) * (1.0 + 1e-6));
  }
}

TEST_CASE("paper-2d closed loop is exponentially stable", "[odeflow]") {
  CHECK(paper2d().ric.closed_loop->spectral_radius() < 1.0);
  CHECK(*paper2d().ric.decay.nu_hat > 0.0);
}
