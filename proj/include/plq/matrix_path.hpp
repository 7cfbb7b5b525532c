#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "plq/errors.hpp"

namespace plq {

/// A matrix-valued function of time sampled on a uniform grid, interpolated
/// with cubic Hermite polynomials from stored derivative samples. Vector
/// paths are stored as n-by-1 matrices. Immutable after construction.
class MatrixPath {
 public:
  MatrixPath(double t0, double dt, std::vector<Eigen::MatrixXd> samples,
             std::vector<Eigen::MatrixXd> derivs)
      : t0_(t0), dt_(dt), samples_(std::move(samples)), derivs_(std::move(derivs)) {
    if (samples_.size() < 2 || samples_.size() != derivs_.size())
      throw ConfigError("MatrixPath: need >= 2 samples with matching derivatives");
    if (!(dt_ > 0.0)) throw ConfigError("MatrixPath: dt must be positive");
    for (const auto& s : samples_)
      if (s.rows() != samples_[0].rows() || s.cols() != samples_[0].cols())
        throw ConfigError("MatrixPath: inconsistent sample shapes");
  }

  int size() const { return static_cast<int>(samples_.size()); }
  double t0() const { return t0_; }
  double dt() const { return dt_; }
  double t_end() const { return t0_ + dt_ * (size() - 1); }
  double time_at(int i) const { return t0_ + dt_ * i; }
  Eigen::Index rows() const { return samples_[0].rows(); }
  Eigen::Index cols() const { return samples_[0].cols(); }

  const Eigen::MatrixXd& sample(int i) const { return samples_[static_cast<size_t>(i)]; }
  const Eigen::MatrixXd& deriv(int i) const { return derivs_[static_cast<size_t>(i)]; }
  const std::vector<Eigen::MatrixXd>& samples() const { return samples_; }
  const std::vector<Eigen::MatrixXd>& derivs() const { return derivs_; }

  /// Cubic Hermite evaluation. Exact at the nodes. A small tolerance of
  /// slack is allowed past the ends to absorb floating-point noise.
  Eigen::MatrixXd eval(double t) const {
    double span = t_end() - t0_;
    double slack = 1e-9 * std::max(1.0, std::abs(span));
    if (t < t0_ - slack || t > t_end() + slack)
      throw ConfigError("MatrixPath::eval: t outside sampled range");
    double u = (t - t0_) / dt_;
    int i = static_cast<int>(std::floor(u));
    if (i < 0) i = 0;
    if (i > size() - 2) i = size() - 2;
    double s = u - i;
    if (s <= 0.0) return samples_[static_cast<size_t>(i)];
    if (s >= 1.0) return samples_[static_cast<size_t>(i) + 1];
    double s2 = s * s, s3 = s2 * s;
    double h00 = 2 * s3 - 3 * s2 + 1;
    double h10 = s3 - 2 * s2 + s;
    double h01 = -2 * s3 + 3 * s2;
    double h11 = s3 - s2;
    return h00 * samples_[static_cast<size_t>(i)] + (h10 * dt_) * derivs_[static_cast<size_t>(i)] +
           h01 * samples_[static_cast<size_t>(i) + 1] + (h11 * dt_) * derivs_[static_cast<size_t>(i) + 1];
  }

  /// Evaluation with the argument reduced modulo `period` into the sampled
  /// range; intended for paths covering exactly one period starting at t0.
  Eigen::MatrixXd eval_periodic(double t, double period) const {
    double tau = std::fmod(t - t0_, period);
    if (tau < 0.0) tau += period;
    if (tau > t_end() - t0_) tau = t_end() - t0_;
    return eval(t0_ + tau);
  }

 private:
  double t0_, dt_;
  std::vector<Eigen::MatrixXd> samples_, derivs_;
};

/// Largest Frobenius-norm discrepancy between two equally shaped paths.
inline double sup_difference(const MatrixPath& a, const MatrixPath& b) {
  if (a.size() != b.size()) throw ConfigError("sup_difference: size mismatch");
  double sup = 0.0;
  for (int i = 0; i < a.size(); ++i)
    sup = std::max(sup, (a.sample(i) - b.sample(i)).norm());
  return sup;
}

/// Fourth-order finite-difference derivatives on a uniform grid: five-point
/// central stencils in the interior, one-sided five-point stencils at the
/// ends. No periodic wraparound (a periodicity gap at the seam would leak
/// into the derivative as gap/dt).
inline std::vector<Eigen::MatrixXd> difference_derivatives(
    const std::vector<Eigen::MatrixXd>& f, double dt) {
  int n = static_cast<int>(f.size());
  if (n < 5) throw ConfigError("difference_derivatives: need >= 5 samples");
  std::vector<Eigen::MatrixXd> d(f.size());
  double h12 = 12.0 * dt;
  d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / h12;
  d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / h12;
  for (int i = 2; i < n - 2; ++i)
    d[static_cast<size_t>(i)] =
        (f[static_cast<size_t>(i) - 2] - 8.0 * f[static_cast<size_t>(i) - 1] +
         8.0 * f[static_cast<size_t>(i) + 1] - f[static_cast<size_t>(i) + 2]) / h12;
  d[static_cast<size_t>(n) - 2] =
      (3.0 * f[static_cast<size_t>(n) - 1] + 10.0 * f[static_cast<size_t>(n) - 2] -
       18.0 * f[static_cast<size_t>(n) - 3] + 6.0 * f[static_cast<size_t>(n) - 4] -
       f[static_cast<size_t>(n) - 5]) / h12;
  d[static_cast<size_t>(n) - 1] =
      (25.0 * f[static_cast<size_t>(n) - 1] - 48.0 * f[static_cast<size_t>(n) - 2] +
       36.0 * f[static_cast<size_t>(n) - 3] - 16.0 * f[static_cast<size_t>(n) - 4] +
       3.0 * f[static_cast<size_t>(n) - 5]) / h12;
  return d;
}

/// Build a path from samples alone, deriving slopes by finite differences.
inline MatrixPath path_with_difference_derivs(double t0, double dt,
                                              std::vector<Eigen::MatrixXd> samples) {
  auto derivs = difference_derivatives(samples, dt);
  return MatrixPath(t0, dt, std::move(samples), std::move(derivs));
}

/// Composite Simpson quadrature over uniformly sampled values. An odd
/// interval count is handled with a closing 3/8 rule, keeping fourth order.
template <typename T>
inline T simpson(const std::vector<T>& f, double dt) {
  int n = static_cast<int>(f.size()) - 1;  // interval count
  if (n < 2) throw ConfigError("simpson: need >= 3 samples");
  T acc = 0.0 * f[0];
  int last = (n % 2 == 0) ? n : n - 3;
  for (int i = 0; i + 2 <= last; i += 2)
    acc += (dt / 3.0) * (f[static_cast<size_t>(i)] + 4.0 * f[static_cast<size_t>(i) + 1] +
                         f[static_cast<size_t>(i) + 2]);
  if (n % 2 != 0) {
    if (last < 0) throw ConfigError("simpson: need >= 4 samples for odd interval count");
    acc += (3.0 * dt / 8.0) * (f[static_cast<size_t>(last)] + 3.0 * f[static_cast<size_t>(last) + 1] +
                               3.0 * f[static_cast<size_t>(last) + 2] + f[static_cast<size_t>(last) + 3]);
  }
  return acc;
}

}  // namespace plq
