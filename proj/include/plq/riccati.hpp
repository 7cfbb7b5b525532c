#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "plq/errors.hpp"
#include "plq/linalg.hpp"
#include "plq/matrix_path.hpp"
#include "plq/ode.hpp"
#include "plq/problem.hpp"
#include "plq/report.hpp"
#include "plq/transition.hpp"

namespace plq {

struct RiccatiOptions {
  Eigen::MatrixXd terminal_seed;  // empty -> identity
  double tol = 1e-10;
  int max_periods = 200;
  int steps_per_period = 2048;
};

/// The stabilizing periodic Riccati solution: P(.) over one period together
/// with the transition operator of the closed loop L = A - B Q^{-1} B* P.
struct RiccatiSolution {
  MatrixPath P;
  double residual_sup = 0.0;
  double periodicity_gap = 0.0;
  int periods_to_converge = 0;
  std::shared_ptr<TransitionOperator> closed_loop;
  DecayEstimate decay;
};

namespace detail {

inline OdeRhs riccati_rhs(const PeriodicProblem& p) {
  return [&p](double t, const Eigen::MatrixXd& P) -> Eigen::MatrixXd {
    Eigen::MatrixXd a = p.A_at(t);
    return -(a.transpose() * P + P * a - P * p.weight_at(t) * P + p.ctc_at(t));
  };
}

inline StepHook symmetrize_hook() {
  return [](Eigen::MatrixXd& x) { x = 0.5 * (x + x.transpose()); };
}

}  // namespace detail

/// Closed-loop generator L(t) = A(t) - B Q^{-1} B*(t) P(t) with P
/// interpolated periodically from the supplied path.
inline MatrixFunction closed_loop_generator(const PeriodicProblem& problem,
                                            std::shared_ptr<const MatrixPath> P) {
  double theta = problem.theta();
  return [problem, P, theta](double t) -> Eigen::MatrixXd {
    return problem.A_at(t) - problem.weight_at(t) * P->eval_periodic(t, theta);
  };
}

/// Sup over grid nodes of the Riccati defect
///   Pdot + A* P + P A - P B Q^{-1} B* P + C* C,
/// with Pdot taken from fourth-order finite differences of the path (an
/// independent route from the solver, which never stores differences).
inline double riccati_residual(const MatrixPath& P, const PeriodicProblem& problem) {
  auto dots = difference_derivatives(P.samples(), P.dt());
  double sup = 0.0;
  for (int i = 0; i < P.size(); ++i) {
    double t = P.time_at(i);
    const Eigen::MatrixXd& pi = P.sample(i);
    Eigen::MatrixXd a = problem.A_at(t);
    Eigen::MatrixXd defect = dots[static_cast<size_t>(i)] + a.transpose() * pi + pi * a -
                             pi * problem.weight_at(t) * pi + problem.ctc_at(t);
    sup = std::max(sup, defect.norm());
  }
  return sup;
}

/// Backward-orbit solver for the stabilizing theta-periodic solution:
/// integrates the Riccati equation backward one period at a time,
/// symmetrizing every step, until consecutive periods agree to `tol` in the
/// sup-over-nodes Frobenius norm. Backward integration contracts toward the
/// positive semidefinite orbit at twice the closed-loop rate, so any PSD
/// seed converges. The returned path is the last period re-based to
/// [0, theta].
inline RiccatiSolution solve_prde_periodic(const PeriodicProblem& problem,
                                           const RiccatiOptions& opts = {}) {
  int n = problem.n();
  int spp = opts.steps_per_period;
  if (spp < 16) throw ConfigError("solve_prde_periodic: need >= 16 steps per period");
  Eigen::MatrixXd seed = opts.terminal_seed.size() == 0
                             ? Eigen::MatrixXd::Identity(n, n).eval()
                             : opts.terminal_seed;
  if (seed.rows() != n || seed.cols() != n)
    throw ConfigError("solve_prde_periodic: terminal seed has wrong shape");
  if ((seed - seed.transpose()).norm() > 1e-10 || min_eigenvalue_sym(seed) < -1e-10)
    throw ConfigError("solve_prde_periodic: terminal seed must be symmetric PSD");

  auto rhs = detail::riccati_rhs(problem);
  auto hook = detail::symmetrize_hook();
  double theta = problem.theta();

  std::vector<Eigen::MatrixXd> prev;
  int converged_after = -1;
  double gap = 0.0;
  MatrixPath period_path(0.0, 1.0, {seed, seed}, {seed, seed});  // placeholder
  for (int k = 1; k <= opts.max_periods; ++k) {
    period_path = integrate_fixed(rhs, theta, 0.0, seed, spp, hook);
    if (!prev.empty()) {
      gap = 0.0;
      for (int i = 0; i <= spp; ++i)
        gap = std::max(gap, (period_path.sample(i) - prev[static_cast<size_t>(i)]).norm());
      if (gap <= opts.tol) {
        converged_after = k;
        break;
      }
    }
    prev = period_path.samples();
    seed = period_path.sample(0);  // phase 0 == phase theta
  }
  if (converged_after < 0)
    throw ConvergenceError(
        "solve_prde_periodic: no periodic orbit within " + std::to_string(opts.max_periods) +
        " periods (gap " + std::to_string(gap) +
        "); check stabilizability/detectability or refine the grid");

  for (int i = 0; i <= spp; ++i) {
    double mineig = min_eigenvalue_sym(period_path.sample(i));
    if (mineig < -1e-8)
      throw ConvergenceError("solve_prde_periodic: solution not PSD (min eigenvalue " +
                             std::to_string(mineig) + " at node " + std::to_string(i) + ")");
  }

  RiccatiSolution sol{std::move(period_path), 0.0, 0.0, converged_after, nullptr, {}};
  sol.periodicity_gap = (sol.P.sample(0) - sol.P.sample(spp)).norm();
  sol.residual_sup = riccati_residual(sol.P, problem);
  auto p_shared = std::make_shared<const MatrixPath>(sol.P);
  sol.closed_loop = std::make_shared<TransitionOperator>(
      closed_loop_generator(problem, p_shared), theta, spp);
  if (!(sol.closed_loop->spectral_radius() < 1.0))
    throw ConvergenceError("solve_prde_periodic: closed loop not exponentially stable "
                           "(monodromy spectral radius " +
                           std::to_string(sol.closed_loop->spectral_radius()) + ")");
  sol.decay = estimate_decay(*sol.closed_loop);
  return sol;
}

/// Backward solve of the terminal-value Riccati problem P(T) = G over
/// [t_min, T], symmetrized each step.
inline MatrixPath solve_riccati_terminal(const PeriodicProblem& problem, const Eigen::MatrixXd& G,
                                         double T, double t_min, int steps_per_period = 2048) {
  if (!(t_min < T)) throw ConfigError("solve_riccati_terminal: requires t_min < T");
  if (G.rows() != problem.n() || G.cols() != problem.n())
    throw ConfigError("solve_riccati_terminal: G has wrong shape");
  int nsteps = std::max(2, static_cast<int>(std::ceil((T - t_min) * steps_per_period /
                                                      problem.theta() - 1e-12)));
  return integrate_fixed(detail::riccati_rhs(problem), T, t_min, G, nsteps,
                         detail::symmetrize_hook());
}

/// Linear-flow route to the same terminal problem: integrate the coupled
/// system Xdot = A X - B Q^{-1} B* Y, Ydot = -C*C X - A* Y backward from
/// X(T) = I, Y(T) = G and form P = Y X^{-1} at each node. X loses
/// invertibility on long spans; that conditioning failure is inherent to
/// the representation and reported as such.
inline MatrixPath riccati_via_hamiltonian_flow(const PeriodicProblem& problem,
                                               const Eigen::MatrixXd& G, double T, double t_min,
                                               int steps_per_period = 2048) {
  if (!(t_min < T)) throw ConfigError("riccati_via_hamiltonian_flow: requires t_min < T");
  int n = problem.n();
  auto rhs = [&problem, n](double t, const Eigen::MatrixXd& Z) -> Eigen::MatrixXd {
    Eigen::MatrixXd X = Z.topRows(n), Y = Z.bottomRows(n);
    Eigen::MatrixXd a = problem.A_at(t);
    Eigen::MatrixXd out(2 * n, n);
    out.topRows(n) = a * X - problem.weight_at(t) * Y;
    out.bottomRows(n) = -problem.ctc_at(t) * X - a.transpose() * Y;
    return out;
  };
  Eigen::MatrixXd z0(2 * n, n);
  z0.topRows(n) = Eigen::MatrixXd::Identity(n, n);
  z0.bottomRows(n) = G;
  int nsteps = std::max(2, static_cast<int>(std::ceil((T - t_min) * steps_per_period /
                                                      problem.theta() - 1e-12)));
  MatrixPath flow = integrate_fixed(rhs, T, t_min, z0, nsteps);
  std::vector<Eigen::MatrixXd> ps(static_cast<size_t>(flow.size()));
  std::vector<Eigen::MatrixXd> ds(static_cast<size_t>(flow.size()));
  auto prde = detail::riccati_rhs(problem);
  for (int i = 0; i < flow.size(); ++i) {
    Eigen::MatrixXd X = flow.sample(i).topRows(n);
    Eigen::MatrixXd Y = flow.sample(i).bottomRows(n);
    Eigen::MatrixXd xinv = guarded_inverse(X, 1e12, "riccati_via_hamiltonian_flow: X factor");
    ps[static_cast<size_t>(i)] = symmetrized(Y * xinv);
    ds[static_cast<size_t>(i)] = prde(flow.time_at(i), ps[static_cast<size_t>(i)]);
  }
  return MatrixPath(flow.t0(), flow.dt(), std::move(ps), std::move(ds));
}

/// Convergence report for the terminal solve against the periodic orbit.
struct DecayReport {
  std::vector<std::pair<double, double>> series;  // (T - t, ||P(t) - P0(t)||_F)
  bool at_fixed_point = false;
  ExponentialFit fit;           // over the window where the error is clean
  double fitted_rate = 0.0;     // -slope of log error vs (T - t)
  double two_nu_hat = 0.0;      // comparison value from the closed loop
};

inline DecayReport riccati_decay_report(const PeriodicProblem& problem,
                                        const RiccatiSolution& periodic, const Eigen::MatrixXd& G,
                                        double T, int periods) {
  if (periods < 3) throw ConfigError("riccati_decay_report: need periods >= 3");
  int spp = periodic.closed_loop->steps_per_period();
  double theta = problem.theta();
  MatrixPath P = solve_riccati_terminal(problem, G, T, T - periods * theta, spp);
  DecayReport report;
  report.two_nu_hat = periodic.decay.nu_hat ? 2.0 * *periodic.decay.nu_hat : 0.0;
  double max_err = 0.0;
  for (int i = P.size() - 1; i >= 0; --i) {
    double t = P.time_at(i);
    double err = (P.sample(i) - periodic.P.eval_periodic(t, theta)).norm();
    report.series.emplace_back(T - t, err);
    max_err = std::max(max_err, err);
  }
  if (max_err <= 1e-9) {
    report.at_fixed_point = true;
    return report;
  }
  const double floor_value = 1e-12, cap = 1e-2;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  int usable = 0;
  for (const auto& [x, e] : report.series) {
    if (e >= floor_value && e <= cap) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      ++usable;
    }
  }
  if (usable < 10)
    throw InsufficientDataError("riccati_decay_report: only " + std::to_string(usable) +
                                " usable points in the error window");
  std::vector<std::pair<double, double>> clipped;
  for (const auto& [x, e] : report.series)
    if (e <= cap) clipped.emplace_back(x, e);
  report.fit = fit_exponential(clipped, floor_value, lo, hi);
  report.fitted_rate = report.fit.rate;
  return report;
}

}  // namespace plq
