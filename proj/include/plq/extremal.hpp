#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <iostream>
#include <utility>
#include <vector>

#include "plq/dichotomy.hpp"
#include "plq/errors.hpp"
#include "plq/linalg.hpp"
#include "plq/matrix_path.hpp"
#include "plq/ode.hpp"
#include "plq/problem.hpp"

namespace plq {

/// The unique periodic extremal of the tracking problem, with the decoupled
/// auxiliaries kept for diagnostics.
struct PeriodicExtremal {
  MatrixPath y;
  MatrixPath lambda;
  MatrixPath u;
  MatrixPath z;
  MatrixPath q;
  double cost = 0.0;
};

/// Forcing of the decoupled stable equation:
///   g1 = (I + E P) B u_d - E C*C y_d.
inline Eigen::VectorXd g1_at(const DichotomyTransform& xf, double t) {
  const PeriodicProblem& p = xf.problem();
  Eigen::MatrixXd e = xf.E_at(t);
  Eigen::VectorXd bud = p.B_at(t) * p.u_d_at(t);
  return bud + e * (xf.P_at(t) * bud - p.ctc_at(t) * p.y_d_at(t));
}

/// Forcing of the decoupled backward equation:
///   g2 = P B u_d - C*C y_d.
inline Eigen::VectorXd g2_at(const DichotomyTransform& xf, double t) {
  const PeriodicProblem& p = xf.problem();
  return xf.P_at(t) * (p.B_at(t) * p.u_d_at(t)) - p.ctc_at(t) * p.y_d_at(t);
}

/// Both forcing terms sampled on the shared grid.
inline std::pair<MatrixPath, MatrixPath> forcing_terms(const DichotomyTransform& xf) {
  const TransitionOperator& op = xf.transition();
  int spp = op.steps_per_period();
  double dt = op.period() / spp;
  std::vector<Eigen::MatrixXd> g1(static_cast<size_t>(spp) + 1), g2(static_cast<size_t>(spp) + 1);
  for (int i = 0; i <= spp; ++i) {
    g1[static_cast<size_t>(i)] = g1_at(xf, i * dt);
    g2[static_cast<size_t>(i)] = g2_at(xf, i * dt);
  }
  return {path_with_difference_derivs(0.0, dt, std::move(g1)),
          path_with_difference_derivs(0.0, dt, std::move(g2))};
}

namespace detail {

inline Eigen::VectorXd periodic_anchor_solve(const Eigen::MatrixXd& map,
                                             const Eigen::VectorXd& rhs, const char* what) {
  int n = static_cast<int>(rhs.size());
  Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(n, n) - map;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
  double cond = sys.norm() * lu.inverse().norm();
  if (!std::isfinite(cond) || cond > 1e12)
    throw ConditioningError(std::string(what) +
                            ": I - monodromy numerically singular (stability lost?)");
  if (cond > 1e10)
    std::cerr << "warning: " << what << ": I - monodromy condition estimate " << cond << "\n";
  return lu.solve(rhs);
}

}  // namespace detail

/// Periodic solution of zdot = L z + g1:
///   z(0) = (I - Psi(theta,0))^{-1} int_0^theta Psi(theta,tau) g1(tau) dtau,
/// then one forward sweep across the period.
inline MatrixPath periodic_z(const DichotomyTransform& xf) {
  const TransitionOperator& op = xf.transition();
  int spp = op.steps_per_period();
  double dt = op.period() / spp;
  std::vector<Eigen::VectorXd> f(static_cast<size_t>(spp) + 1);
  for (int j = 0; j <= spp; ++j)
    f[static_cast<size_t>(j)] = op.monodromy() * (op.phi_inv_node(j) * g1_at(xf, j * dt));
  Eigen::VectorXd integral = simpson(f, dt);
  Eigen::VectorXd z0 = detail::periodic_anchor_solve(op.monodromy(), integral, "periodic_z");
  auto rhs = [&xf](double t, const Eigen::MatrixXd& z) -> Eigen::MatrixXd {
    return xf.L_at(t) * z + g1_at(xf, t);
  };
  return integrate_fixed(rhs, 0.0, op.period(), z0, spp);
}

/// Periodic solution of qdot = -L* q + g2, anchored at
///   q(theta) = -(I - Psi*(theta,0))^{-1} int_0^theta Psi*(tau,0) g2(tau) dtau
/// and swept backward (the direction in which -L* is stable).
inline MatrixPath periodic_q(const DichotomyTransform& xf) {
  const TransitionOperator& op = xf.transition();
  int spp = op.steps_per_period();
  double dt = op.period() / spp;
  std::vector<Eigen::VectorXd> f(static_cast<size_t>(spp) + 1);
  for (int j = 0; j <= spp; ++j)
    f[static_cast<size_t>(j)] = op.phi_node(j).transpose() * g2_at(xf, j * dt);
  Eigen::VectorXd integral = simpson(f, dt);
  Eigen::VectorXd q_theta =
      -detail::periodic_anchor_solve(op.monodromy().transpose(), integral, "periodic_q");
  auto rhs = [&xf](double t, const Eigen::MatrixXd& q) -> Eigen::MatrixXd {
    return -xf.L_at(t).transpose() * q + g2_at(xf, t);
  };
  return integrate_fixed(rhs, op.period(), 0.0, q_theta, spp);
}

/// Tracking cost integral of ||C (y - y_d)||^2 + ||Q^{1/2} (u - u_d)||^2 by
/// composite Simpson over the path nodes. The minimizing trajectory is
/// unchanged by any positive scaling of this functional.
inline double tracking_cost(const MatrixPath& y, const MatrixPath& u,
                            const PeriodicProblem& problem) {
  if (y.size() != u.size()) throw ConfigError("tracking_cost: grid mismatch");
  std::vector<double> f(static_cast<size_t>(y.size()));
  for (int i = 0; i < y.size(); ++i) {
    double t = y.time_at(i);
    Eigen::VectorXd dy = y.sample(i).col(0) - problem.y_d_at(t);
    Eigen::VectorXd du = u.sample(i).col(0) - problem.u_d_at(t);
    Eigen::VectorXd cy = problem.C_at(t) * dy;
    f[static_cast<size_t>(i)] = cy.squaredNorm() + du.dot(problem.Q_at(t) * du);
  }
  return simpson(f, y.dt());
}

/// Assembles the periodic extremal from the decoupled auxiliaries:
///   y = z - E q,   lambda = -P z + (I + P E) q,
///   u = u_d + Q^{-1} B* lambda.
inline PeriodicExtremal periodic_extremal(const DichotomyTransform& xf) {
  const PeriodicProblem& p = xf.problem();
  MatrixPath z = periodic_z(xf);
  MatrixPath q = periodic_q(xf);
  int npts = z.size();
  double dt = z.dt();
  std::vector<Eigen::MatrixXd> ys(static_cast<size_t>(npts)), ls(static_cast<size_t>(npts)),
      us(static_cast<size_t>(npts)), yd(static_cast<size_t>(npts)), ld(static_cast<size_t>(npts));
  for (int i = 0; i < npts; ++i) {
    double t = z.time_at(i);
    auto [y, lam] = xf.from_decoupled(t, z.sample(i).col(0), q.sample(i).col(0));
    Eigen::VectorXd u = p.u_d_at(t) + p.Q_inv_at(t) * (p.B_at(t).transpose() * lam);
    ys[static_cast<size_t>(i)] = y;
    ls[static_cast<size_t>(i)] = lam;
    us[static_cast<size_t>(i)] = u;
    yd[static_cast<size_t>(i)] = p.A_at(t) * y + p.weight_at(t) * lam + p.B_at(t) * p.u_d_at(t);
    ld[static_cast<size_t>(i)] =
        p.ctc_at(t) * y - p.A_at(t).transpose() * lam - p.ctc_at(t) * p.y_d_at(t);
  }
  PeriodicExtremal ext{MatrixPath(0.0, dt, std::move(ys), std::move(yd)),
                       MatrixPath(0.0, dt, std::move(ls), std::move(ld)),
                       path_with_difference_derivs(0.0, dt, std::move(us)),
                       std::move(z), std::move(q), 0.0};
  ext.cost = tracking_cost(ext.y, ext.u, p);
  return ext;
}

struct ExtremalResiduals {
  double y_residual = 0.0;        // sup || ydot - A y - W lambda - B u_d ||
  double lambda_residual = 0.0;   // sup || lamdot - C*C y + A* lambda + C*C y_d ||
  double y_boundary_gap = 0.0;    // || y(0) - y(theta) ||
  double lambda_boundary_gap = 0.0;
};

/// Residuals of the optimality system along the extremal, derivatives by
/// fourth-order differences.
inline ExtremalResiduals extremal_residual(const PeriodicExtremal& ext,
                                           const PeriodicProblem& problem) {
  auto ydots = difference_derivatives(ext.y.samples(), ext.y.dt());
  auto ldots = difference_derivatives(ext.lambda.samples(), ext.lambda.dt());
  ExtremalResiduals r;
  for (int i = 0; i < ext.y.size(); ++i) {
    double t = ext.y.time_at(i);
    Eigen::VectorXd y = ext.y.sample(i).col(0);
    Eigen::VectorXd lam = ext.lambda.sample(i).col(0);
    Eigen::VectorXd fy = problem.A_at(t) * y + problem.weight_at(t) * lam +
                         problem.B_at(t) * problem.u_d_at(t);
    Eigen::VectorXd fl = problem.ctc_at(t) * y - problem.A_at(t).transpose() * lam -
                         problem.ctc_at(t) * problem.y_d_at(t);
    r.y_residual = std::max(r.y_residual, (ydots[static_cast<size_t>(i)].col(0) - fy).norm());
    r.lambda_residual =
        std::max(r.lambda_residual, (ldots[static_cast<size_t>(i)].col(0) - fl).norm());
  }
  int last = ext.y.size() - 1;
  r.y_boundary_gap = (ext.y.sample(0) - ext.y.sample(last)).norm();
  r.lambda_boundary_gap = (ext.lambda.sample(0) - ext.lambda.sample(last)).norm();
  return r;
}

inline double periodic_cost(const PeriodicExtremal& ext, const PeriodicProblem& problem) {
  return tracking_cost(ext.y, ext.u, problem);
}

namespace detail {

/// Cumulative integral of a node-sampled integrand by per-interval Simpson;
/// midpoint values come from the supplied evaluator.
template <typename Eval>
std::vector<Eigen::VectorXd> cumulative_integral(int npts, double dt, const Eval& value_at) {
  std::vector<Eigen::VectorXd> acc(static_cast<size_t>(npts));
  acc[0] = value_at(0.0) * 0.0;
  for (int i = 0; i + 1 < npts; ++i) {
    double t = i * dt;
    Eigen::VectorXd fa = value_at(t);
    Eigen::VectorXd fm = value_at(t + 0.5 * dt);
    Eigen::VectorXd fb = value_at(t + dt);
    acc[static_cast<size_t>(i) + 1] = acc[static_cast<size_t>(i)] + (dt / 6.0) * (fa + 4.0 * fm + fb);
  }
  return acc;
}

}  // namespace detail

/// Verification mode: evaluates the closed-form Duhamel representation of z
/// node by node and returns the sup deviation from the swept path. The two
/// routes discretize the same formula, so disagreement measures the
/// integrator/quadrature inconsistency.
inline double z_formula_deviation(const DichotomyTransform& xf, const MatrixPath& z) {
  const TransitionOperator& op = xf.transition();
  int spp = op.steps_per_period();
  double dt = op.period() / spp;
  auto integrand = [&](double t) -> Eigen::VectorXd {
    Eigen::MatrixXd phi_inv =
        guarded_inverse(op.phi(t), 1e12, "z_formula_deviation: fundamental factor");
    return phi_inv * g1_at(xf, t);
  };
  auto cumulative = detail::cumulative_integral(spp + 1, dt, integrand);
  Eigen::VectorXd z0 = z.sample(0).col(0);
  double sup = 0.0;
  for (int i = 0; i <= spp; ++i) {
    Eigen::VectorXd formula = op.phi_node(i) * (z0 + cumulative[static_cast<size_t>(i)]);
    sup = std::max(sup, (formula - z.sample(i).col(0)).norm());
  }
  return sup;
}

/// Verification mode for q: closed-form representation
///   q(t) = -Psi*(theta,t) (I - Psi*(theta,0))^{-1} J - Phi(t)^{-T} (J(theta) - J(t)),
/// J(t) = int_0^t Phi*(tau) g2(tau) dtau.
inline double q_formula_deviation(const DichotomyTransform& xf, const MatrixPath& q) {
  const TransitionOperator& op = xf.transition();
  int spp = op.steps_per_period();
  double dt = op.period() / spp;
  auto integrand = [&](double t) -> Eigen::VectorXd {
    return op.phi(t).transpose() * g2_at(xf, t);
  };
  auto cumulative = detail::cumulative_integral(spp + 1, dt, integrand);
  Eigen::VectorXd j_total = cumulative[static_cast<size_t>(spp)];
  Eigen::VectorXd anchor =
      detail::periodic_anchor_solve(op.monodromy().transpose(), j_total, "q_formula_deviation");
  double sup = 0.0;
  for (int i = 0; i <= spp; ++i) {
    Eigen::MatrixXd phi_inv_t = op.phi_inv_node(i).transpose();
    Eigen::VectorXd formula = -phi_inv_t * (op.monodromy().transpose() * anchor) -
                              phi_inv_t * (j_total - cumulative[static_cast<size_t>(i)]);
    sup = std::max(sup, (formula - q.sample(i).col(0)).norm());
  }
  return sup;
}

}  // namespace plq
