#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "plq/errors.hpp"
#include "plq/linalg.hpp"
#include "plq/matrix_path.hpp"
#include "plq/ode.hpp"
#include "plq/problem.hpp"
#include "plq/riccati.hpp"
#include "plq/transition.hpp"

namespace plq {

enum class LyapunovMethod { TruncatedIntegral, Stein };

struct LyapunovOptions {
  double tol = 1e-10;                // truncation-error budget
  double periodicity_check = 1e-7;   // allowed gap between E(0) and E(theta)
};

/// The periodic Lyapunov solution E(.) over one period. E is symmetric and
/// negative semidefinite (it is minus an integral of PSD terms).
struct LyapunovSolution {
  MatrixPath E;
  LyapunovMethod method;
  double residual_sup = 0.0;
  double periodicity_gap = 0.0;
  double truncation_horizon = 0.0;  // 0 for the Stein route
};

/// Sup over grid nodes of the Lyapunov defect
///   -Edot + L E + E L* - B Q^{-1} B*,
/// with Edot from fourth-order finite differences of the path.
inline double plde_residual(const MatrixPath& E, const RiccatiSolution& ric,
                            const PeriodicProblem& problem) {
  auto dots = difference_derivatives(E.samples(), E.dt());
  const auto& L = ric.closed_loop->generator();
  double sup = 0.0;
  for (int i = 0; i < E.size(); ++i) {
    double t = E.time_at(i);
    Eigen::MatrixXd l = L(t);
    const Eigen::MatrixXd& e = E.sample(i);
    Eigen::MatrixXd defect =
        -dots[static_cast<size_t>(i)] + l * e + e * l.transpose() - problem.weight_at(t);
    sup = std::max(sup, defect.norm());
  }
  return sup;
}

namespace detail {

inline void check_lyapunov_solution(LyapunovSolution& sol, const RiccatiSolution& ric,
                                    const PeriodicProblem& problem) {
  for (int i = 0; i < sol.E.size(); ++i) {
    const Eigen::MatrixXd& e = sol.E.sample(i);
    if ((e - e.transpose()).norm() > 1e-10)
      throw ConvergenceError("Lyapunov solution lost symmetry at node " + std::to_string(i));
    double maxeig = max_eigenvalue_sym(e);
    if (maxeig > 1e-8)
      throw ConvergenceError("Lyapunov solution not negative semidefinite (max eigenvalue " +
                             std::to_string(maxeig) + " at node " + std::to_string(i) + ")");
  }
  sol.periodicity_gap = (sol.E.sample(0) - sol.E.sample(sol.E.size() - 1)).norm();
  sol.residual_sup = plde_residual(sol.E, ric, problem);
}

inline OdeRhs lyapunov_rhs(const PeriodicProblem& problem, const RiccatiSolution& ric) {
  const auto& L = ric.closed_loop->generator();
  return [&problem, L](double t, const Eigen::MatrixXd& E) -> Eigen::MatrixXd {
    Eigen::MatrixXd l = L(t);
    return l * E + E * l.transpose() - problem.weight_at(t);
  };
}

}  // namespace detail

/// Direct quadrature of the convolution formula
///   E(t) = -int_{-inf}^{t} Psi(t,s) B Q^{-1} B*(s) Psi*(t,s) ds,
/// truncated once the exponential tail is below `tol`. The horizon from the
/// decay estimate carries a 2x safety factor and is rounded up to whole
/// periods, which lets spans beyond the first period reuse the one-period
/// base integral through monodromy conjugation:
///   int over [t-(j+1)theta, t-j theta]  =  M_t^j F0(t) (M_t^j)*.
inline LyapunovSolution solve_plde_truncated(const PeriodicProblem& problem,
                                             const RiccatiSolution& ric,
                                             const LyapunovOptions& opts = {}) {
  if (!ric.decay.stable)
    throw PreconditionError("solve_plde_truncated: closed loop is not stable");
  const TransitionOperator& op = *ric.closed_loop;
  int spp = op.steps_per_period();
  double theta = op.period();
  double dt = theta / spp;
  double nu = *ric.decay.nu_hat;
  double c = *ric.decay.c_hat;

  std::vector<Eigen::MatrixXd> w(static_cast<size_t>(spp));
  double w_bar = 0.0;
  for (int j = 0; j < spp; ++j) {
    w[static_cast<size_t>(j)] = problem.weight_at(j * dt);
    w_bar = std::max(w_bar, operator_norm(w[static_cast<size_t>(j)]));
  }

  int periods = 1;
  if (w_bar > 0.0) {
    double horizon = std::log(c * c * w_bar / (2.0 * nu * opts.tol)) / (2.0 * nu);
    horizon = 2.0 * std::max(horizon, 0.0);  // safety factor
    periods = std::max(1, static_cast<int>(std::ceil(horizon / theta)));
    if (periods > 10000)
      throw ConvergenceError("solve_plde_truncated: truncation horizon of " +
                             std::to_string(periods) + " periods is impractical");
  }

  const Eigen::MatrixXd& monodromy = op.monodromy();
  int n = problem.n();
  std::vector<Eigen::MatrixXd> es(static_cast<size_t>(spp) + 1);
  std::vector<Eigen::MatrixXd> ds(static_cast<size_t>(spp) + 1);
  auto rhs = detail::lyapunov_rhs(problem, ric);
  for (int i = 0; i < spp; ++i) {
    // One-period base integral F0(t_i) by composite Simpson in s = t_i - l dt.
    Eigen::MatrixXd f0 = Eigen::MatrixXd::Zero(n, n);
    for (int l = 0; l <= spp; ++l) {
      int j = i - l;
      Eigen::MatrixXd g = (j >= 0) ? (op.phi_node(i) * op.phi_inv_node(j)).eval()
                                   : (op.phi_node(i) * monodromy * op.phi_inv_node(j + spp)).eval();
      int widx = ((j % spp) + spp) % spp;
      Eigen::MatrixXd term = g * w[static_cast<size_t>(widx)] * g.transpose();
      double weight = (l == 0 || l == spp) ? 1.0 : (l % 2 == 1 ? 4.0 : 2.0);
      f0 += (weight * dt / 3.0) * term;
    }
    Eigen::MatrixXd m_t = op.phi_node(i) * monodromy * op.phi_inv_node(i);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd term = f0;
    for (int p = 0; p < periods; ++p) {
      acc += term;
      if (p + 1 < periods) term = m_t * term * m_t.transpose();
    }
    es[static_cast<size_t>(i)] = symmetrized(-acc);
    ds[static_cast<size_t>(i)] = rhs(i * dt, es[static_cast<size_t>(i)]);
  }
  es[static_cast<size_t>(spp)] = es[0];  // same integral by periodicity
  ds[static_cast<size_t>(spp)] = ds[0];

  LyapunovSolution sol{MatrixPath(0.0, dt, std::move(es), std::move(ds)),
                       LyapunovMethod::TruncatedIntegral, 0.0, 0.0, periods * theta};
  detail::check_lyapunov_solution(sol, ric, problem);
  return sol;
}

/// Exact periodic anchor: the one-period variation-of-constants map turns
/// periodicity into the discrete Stein equation E0 = M E0 M* + V with
///   V = -int_0^theta Psi(theta,s) B Q^{-1} B*(s) Psi*(theta,s) ds,
/// solved through the n^2 x n^2 vectorized system. E(.) is then propagated
/// over one period from E0 and must return to E0.
inline LyapunovSolution solve_plde_stein(const PeriodicProblem& problem,
                                         const RiccatiSolution& ric,
                                         const LyapunovOptions& opts = {}) {
  if (!(ric.closed_loop->spectral_radius() < 1.0))
    throw PreconditionError("solve_plde_stein: closed loop is not stable");
  const TransitionOperator& op = *ric.closed_loop;
  int spp = op.steps_per_period();
  double theta = op.period();
  double dt = theta / spp;
  int n = problem.n();
  const Eigen::MatrixXd& monodromy = op.monodromy();

  std::vector<Eigen::MatrixXd> integrand(static_cast<size_t>(spp) + 1);
  for (int j = 0; j <= spp; ++j) {
    Eigen::MatrixXd g = monodromy * op.phi_inv_node(j);
    integrand[static_cast<size_t>(j)] = g * problem.weight_at(j * dt) * g.transpose();
  }
  Eigen::MatrixXd v = -simpson(integrand, dt);

  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n * n, n * n) - kron(monodromy, monodromy);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible())
    throw PreconditionError("solve_plde_stein: I - M (x) M singular (unstable monodromy)");
  Eigen::MatrixXd e0 = symmetrized(unvec(lu.solve(vec(v)), n, n));

  MatrixPath path = integrate_fixed(detail::lyapunov_rhs(problem, ric), 0.0, theta, e0, spp,
                                    [](Eigen::MatrixXd& x) { x = 0.5 * (x + x.transpose()); });
  double reclosure = (path.sample(spp) - e0).norm();
  if (reclosure > opts.periodicity_check)
    throw ConvergenceError("solve_plde_stein: propagated E(theta) misses the Stein anchor by " +
                           std::to_string(reclosure));

  LyapunovSolution sol{std::move(path), LyapunovMethod::Stein, 0.0, 0.0, 0.0};
  detail::check_lyapunov_solution(sol, ric, problem);
  return sol;
}

inline LyapunovSolution solve_plde(const PeriodicProblem& problem, const RiccatiSolution& ric,
                                   LyapunovMethod method, const LyapunovOptions& opts = {}) {
  return method == LyapunovMethod::Stein ? solve_plde_stein(problem, ric, opts)
                                         : solve_plde_truncated(problem, ric, opts);
}

}  // namespace plq
