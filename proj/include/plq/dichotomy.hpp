#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "plq/errors.hpp"
#include "plq/lyapunov.hpp"
#include "plq/matrix_path.hpp"
#include "plq/ode.hpp"
#include "plq/problem.hpp"
#include "plq/riccati.hpp"
#include "plq/transition.hpp"

namespace plq {

/// The periodic change of variables that block-diagonalizes the coupled
/// optimality system into the stable closed loop L and its backward-stable
/// adjoint -L*:
///
///   T(t)      = [ I + E P   E ]        T(t)^{-1} = [  I        -E     ]
///               [   P       I ]                    [ -P      I + P E  ]
///
/// assembled on demand from the periodic Riccati and Lyapunov interpolants
/// (never stored as a dense path). Immutable after construction.
class DichotomyTransform {
 public:
  DichotomyTransform(PeriodicProblem problem, RiccatiSolution ric, LyapunovSolution lya)
      : problem_(std::move(problem)), ric_(std::move(ric)), lya_(std::move(lya)) {
    if (ric_.P.rows() != problem_.n() || lya_.E.rows() != problem_.n())
      throw ConfigError("DichotomyTransform: dimension mismatch between problem and solutions");
    if (ric_.P.size() != lya_.E.size() || std::abs(ric_.P.dt() - lya_.E.dt()) > 1e-12)
      throw ConfigError("DichotomyTransform: P and E must share one grid");
    if (!ric_.closed_loop)
      throw ConfigError("DichotomyTransform: Riccati solution lacks its closed loop");
  }

  const PeriodicProblem& problem() const { return problem_; }
  const RiccatiSolution& riccati() const { return ric_; }
  const LyapunovSolution& lyapunov() const { return lya_; }
  const TransitionOperator& transition() const { return *ric_.closed_loop; }
  const DecayEstimate& decay() const { return ric_.decay; }
  double theta() const { return problem_.theta(); }
  int n() const { return problem_.n(); }

  Eigen::MatrixXd P_at(double t) const { return ric_.P.eval_periodic(t, theta()); }
  Eigen::MatrixXd E_at(double t) const { return lya_.E.eval_periodic(t, theta()); }
  Eigen::MatrixXd L_at(double t) const { return problem_.A_at(t) - problem_.weight_at(t) * P_at(t); }

  Eigen::MatrixXd T_at(double t) const {
    int nn = n();
    Eigen::MatrixXd p = P_at(t), e = E_at(t);
    Eigen::MatrixXd out(2 * nn, 2 * nn);
    out.topLeftCorner(nn, nn) = Eigen::MatrixXd::Identity(nn, nn) + e * p;
    out.topRightCorner(nn, nn) = e;
    out.bottomLeftCorner(nn, nn) = p;
    out.bottomRightCorner(nn, nn) = Eigen::MatrixXd::Identity(nn, nn);
    return out;
  }

  Eigen::MatrixXd T_inv_at(double t) const {
    int nn = n();
    Eigen::MatrixXd p = P_at(t), e = E_at(t);
    Eigen::MatrixXd out(2 * nn, 2 * nn);
    out.topLeftCorner(nn, nn) = Eigen::MatrixXd::Identity(nn, nn);
    out.topRightCorner(nn, nn) = -e;
    out.bottomLeftCorner(nn, nn) = -p;
    out.bottomRightCorner(nn, nn) = Eigen::MatrixXd::Identity(nn, nn) + p * e;
    return out;
  }

  /// (y, lambda) -> (p, q):  p = (I + E P) y + E lambda,  q = P y + lambda.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> to_decoupled(double t, const Eigen::VectorXd& y,
                                                           const Eigen::VectorXd& lam) const {
    Eigen::MatrixXd p = P_at(t), e = E_at(t);
    Eigen::VectorXd py = p * y;
    return {y + e * (py + lam), py + lam};
  }

  /// (p, q) -> (y, lambda):  y = p - E q,  lambda = -P p + (I + P E) q.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> from_decoupled(double t, const Eigen::VectorXd& p,
                                                             const Eigen::VectorXd& q) const {
    Eigen::MatrixXd pm = P_at(t), e = E_at(t);
    Eigen::VectorXd y = p - e * q;
    return {y, q - pm * y};
  }

  /// Coupled-system matrix M(t) = [A, B Q^{-1} B*; C*C, -A*].
  Eigen::MatrixXd coupled_matrix(double t) const {
    int nn = n();
    Eigen::MatrixXd out(2 * nn, 2 * nn);
    out.topLeftCorner(nn, nn) = problem_.A_at(t);
    out.topRightCorner(nn, nn) = problem_.weight_at(t);
    out.bottomLeftCorner(nn, nn) = problem_.ctc_at(t);
    out.bottomRightCorner(nn, nn) = -problem_.A_at(t).transpose();
    return out;
  }

 private:
  PeriodicProblem problem_;
  RiccatiSolution ric_;
  LyapunovSolution lya_;
};

inline DichotomyTransform build_transform(const PeriodicProblem& problem,
                                          const RiccatiSolution& ric,
                                          const LyapunovSolution& lya) {
  return DichotomyTransform(problem, ric, lya);
}

/// Sup over grid nodes of
///   Tdot T^{-1} + T M T^{-1} - blockdiag(L, -L*)
/// with Tdot assembled from fourth-order finite differences of the P and E
/// paths. Differencing keeps this an independent measurement: plugging the
/// differential equations in for Pdot and Edot would cancel identically for
/// any P, E.
inline double decoupling_residual(const DichotomyTransform& xf) {
  const MatrixPath& P = xf.riccati().P;
  const MatrixPath& E = xf.lyapunov().E;
  auto pdots = difference_derivatives(P.samples(), P.dt());
  auto edots = difference_derivatives(E.samples(), E.dt());
  int nn = xf.n();
  double sup = 0.0;
  for (int i = 0; i < P.size(); ++i) {
    double t = P.time_at(i);
    const Eigen::MatrixXd& p = P.sample(i);
    const Eigen::MatrixXd& e = E.sample(i);
    const Eigen::MatrixXd& pd = pdots[static_cast<size_t>(i)];
    const Eigen::MatrixXd& ed = edots[static_cast<size_t>(i)];
    Eigen::MatrixXd tmat(2 * nn, 2 * nn), tinv(2 * nn, 2 * nn), tdot(2 * nn, 2 * nn);
    tmat.topLeftCorner(nn, nn) = Eigen::MatrixXd::Identity(nn, nn) + e * p;
    tmat.topRightCorner(nn, nn) = e;
    tmat.bottomLeftCorner(nn, nn) = p;
    tmat.bottomRightCorner(nn, nn) = Eigen::MatrixXd::Identity(nn, nn);
    tinv.topLeftCorner(nn, nn) = Eigen::MatrixXd::Identity(nn, nn);
    tinv.topRightCorner(nn, nn) = -e;
    tinv.bottomLeftCorner(nn, nn) = -p;
    tinv.bottomRightCorner(nn, nn) = Eigen::MatrixXd::Identity(nn, nn) + p * e;
    tdot.topLeftCorner(nn, nn) = ed * p + e * pd;
    tdot.topRightCorner(nn, nn) = ed;
    tdot.bottomLeftCorner(nn, nn) = pd;
    tdot.bottomRightCorner(nn, nn) = Eigen::MatrixXd::Zero(nn, nn);
    Eigen::MatrixXd l = xf.L_at(t);
    Eigen::MatrixXd target = Eigen::MatrixXd::Zero(2 * nn, 2 * nn);
    target.topLeftCorner(nn, nn) = l;
    target.bottomRightCorner(nn, nn) = -l.transpose();
    Eigen::MatrixXd defect = tdot * tinv + tmat * xf.coupled_matrix(t) * tinv - target;
    sup = std::max(sup, defect.norm());
  }
  return sup;
}

/// Propagates one initial condition of the coupled system twice: directly
/// under M(t), and in decoupled coordinates (pdot = L p, qdot = -L* q)
/// mapped back at every node. Returns the sup deviation over one period
/// relative to the solution's sup magnitude: the q component grows like
/// exp(+nu t), so an absolute comparison would only measure how that growth
/// amplifies integrator truncation.
inline double propagation_equivalence(const DichotomyTransform& xf, const Eigen::VectorXd& y0,
                                      const Eigen::VectorXd& lam0) {
  int nn = xf.n();
  double theta = xf.theta();
  int spp = xf.transition().steps_per_period();
  Eigen::VectorXd z0(2 * nn);
  z0.head(nn) = y0;
  z0.tail(nn) = lam0;
  MatrixPath coupled = integrate_fixed(
      [&xf](double t, const Eigen::MatrixXd& z) -> Eigen::MatrixXd {
        return xf.coupled_matrix(t) * z;
      },
      0.0, theta, z0, spp);
  auto [p0, q0] = xf.to_decoupled(0.0, y0, lam0);
  MatrixPath p_path = integrate_fixed(
      [&xf](double t, const Eigen::MatrixXd& p) -> Eigen::MatrixXd { return xf.L_at(t) * p; },
      0.0, theta, p0, spp);
  MatrixPath q_path = integrate_fixed(
      [&xf](double t, const Eigen::MatrixXd& q) -> Eigen::MatrixXd {
        return -xf.L_at(t).transpose() * q;
      },
      0.0, theta, q0, spp);
  double sup = 0.0, scale = 1.0;
  for (int i = 0; i <= spp; ++i) {
    double t = coupled.time_at(i);
    auto [y, lam] = xf.from_decoupled(t, p_path.sample(i).col(0), q_path.sample(i).col(0));
    Eigen::VectorXd direct = coupled.sample(i).col(0);
    sup = std::max(sup, std::max((y - direct.head(nn)).norm(), (lam - direct.tail(nn)).norm()));
    scale = std::max(scale, direct.norm());
  }
  return sup / scale;
}

/// Largest deviation of T(t) T(t)^{-1} from the identity over the grid.
inline double inverse_identity_residual(const DichotomyTransform& xf) {
  const MatrixPath& P = xf.riccati().P;
  double sup = 0.0;
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2 * xf.n(), 2 * xf.n());
  for (int i = 0; i < P.size(); ++i) {
    double t = P.time_at(i);
    Eigen::MatrixXd tm = xf.T_at(t);
    Eigen::MatrixXd ti = xf.T_inv_at(t);
    sup = std::max(sup, std::max((tm * ti - eye).norm(), (ti * tm - eye).norm()));
  }
  return sup;
}

}  // namespace plq
