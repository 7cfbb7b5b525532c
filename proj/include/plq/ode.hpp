#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "plq/errors.hpp"
#include "plq/matrix_path.hpp"

namespace plq {

using OdeRhs = std::function<Eigen::MatrixXd(double, const Eigen::MatrixXd&)>;

/// Optional hook applied to the state after every accepted step
/// (e.g. symmetrization of a Riccati iterate).
using StepHook = std::function<void(Eigen::MatrixXd&)>;

namespace detail {

inline void check_finite(const Eigen::MatrixXd& x, double t) {
  if (!x.allFinite())
    throw DivergenceError("integration diverged (non-finite state) at t = " + std::to_string(t), t);
}

/// One classical RK4 step from (t, x) with signed step h.
inline Eigen::MatrixXd rk4_step(const OdeRhs& rhs, double t, const Eigen::MatrixXd& x, double h) {
  Eigen::MatrixXd k1 = rhs(t, x);
  Eigen::MatrixXd k2 = rhs(t + 0.5 * h, x + (0.5 * h) * k1);
  Eigen::MatrixXd k3 = rhs(t + 0.5 * h, x + (0.5 * h) * k2);
  Eigen::MatrixXd k4 = rhs(t + h, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/// Fixed-step classical RK4 over [t_start, t_end] (either direction) with
/// `nsteps` uniform steps. The returned path is always stored in ascending
/// time order with the right-hand side recorded at every node, so Hermite
/// interpolation matches the integrator's fourth order.
inline MatrixPath integrate_fixed(const OdeRhs& rhs, double t_start, double t_end,
                                  const Eigen::MatrixXd& x0, int nsteps,
                                  const StepHook& hook = nullptr) {
  if (nsteps < 1) throw ConfigError("integrate_fixed: nsteps must be >= 1");
  if (t_end == t_start) throw ConfigError("integrate_fixed: empty time span");
  double h = (t_end - t_start) / nsteps;
  std::vector<Eigen::MatrixXd> xs(static_cast<size_t>(nsteps) + 1);
  std::vector<Eigen::MatrixXd> ds(static_cast<size_t>(nsteps) + 1);
  Eigen::MatrixXd x = x0;
  detail::check_finite(x, t_start);
  xs[0] = x;
  ds[0] = rhs(t_start, x);
  for (int i = 0; i < nsteps; ++i) {
    double t = t_start + h * i;
    x = detail::rk4_step(rhs, t, x, h);
    if (hook) hook(x);
    detail::check_finite(x, t + h);
    xs[static_cast<size_t>(i) + 1] = x;
    ds[static_cast<size_t>(i) + 1] = rhs(t + h, x);
  }
  if (h > 0.0) return MatrixPath(t_start, h, std::move(xs), std::move(ds));
  // Backward run: reverse into ascending order.
  std::vector<Eigen::MatrixXd> rx(xs.rbegin(), xs.rend());
  std::vector<Eigen::MatrixXd> rd(ds.rbegin(), ds.rend());
  return MatrixPath(t_end, -h, std::move(rx), std::move(rd));
}

/// Convenience wrapper choosing the step count from a target step size:
/// the whole-span step count is ceil(|span| / dt_hint), at least 2.
inline MatrixPath integrate_ode(const OdeRhs& rhs, double t_start, double t_end,
                                const Eigen::MatrixXd& x0, double dt_hint,
                                const StepHook& hook = nullptr) {
  if (!(dt_hint > 0.0)) throw ConfigError("integrate_ode: dt_hint must be positive");
  double span = std::abs(t_end - t_start);
  int nsteps = std::max(2, static_cast<int>(std::ceil(span / dt_hint - 1e-12)));
  return integrate_fixed(rhs, t_start, t_end, x0, nsteps, hook);
}

/// Adaptive Dormand-Prince 5(4) returning only the terminal state. This is
/// a cross-check mode for the fixed-step pipeline, not the primary
/// integrator (the shared grid requires fixed steps for reproducibility).
inline Eigen::MatrixXd integrate_adaptive(const OdeRhs& rhs, double t_start, double t_end,
                                          const Eigen::MatrixXd& x0, double rtol = 1e-10,
                                          double atol = 1e-12) {
  static const double c[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static const double a[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static const double b5[7] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192,
                               -2187.0 / 6784, 11.0 / 84, 0.0};
  static const double b4[7] = {5179.0 / 57600, 0.0, 7571.0 / 16695, 393.0 / 640,
                               -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

  double dir = (t_end > t_start) ? 1.0 : -1.0;
  double t = t_start;
  Eigen::MatrixXd x = x0;
  double h = dir * std::min(std::abs(t_end - t_start), 0.1);
  int max_steps = 10'000'000;
  while (dir * (t_end - t) > 1e-14 * std::abs(t_end - t_start)) {
    if (--max_steps <= 0) throw ConvergenceError("integrate_adaptive: step budget exhausted");
    if (dir * (t + h - t_end) > 0.0) h = t_end - t;
    Eigen::MatrixXd k[7];
    for (int s = 0; s < 7; ++s) {
      Eigen::MatrixXd xs = x;
      for (int j = 0; j < s; ++j)
        if (a[s][j] != 0.0) xs += (h * a[s][j]) * k[j];
      k[s] = rhs(t + c[s] * h, xs);
    }
    Eigen::MatrixXd x5 = x, err = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    for (int s = 0; s < 7; ++s) {
      if (b5[s] != 0.0) x5 += (h * b5[s]) * k[s];
      err += (h * (b5[s] - b4[s])) * k[s];
    }
    double scale = atol + rtol * std::max(x.norm(), x5.norm());
    double e = err.norm() / scale;
    if (e <= 1.0) {
      t += h;
      x = x5;
      detail::check_finite(x, t);
    }
    double factor = 0.9 * std::pow(std::max(e, 1e-10), -0.2);
    h *= std::min(5.0, std::max(0.2, factor));
  }
  return x;
}

}  // namespace plq
