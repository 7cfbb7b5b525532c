#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plq/errors.hpp"
#include "plq/linalg.hpp"
#include "plq/matrix_path.hpp"
#include "plq/ode.hpp"

namespace plq {

using MatrixFunction = std::function<Eigen::MatrixXd(double)>;

/// Exponential-decay estimate for a periodic transition operator.
/// `stable` holds iff the monodromy spectral radius is below one; the rate
/// and amplitude are only present in that case.
struct DecayEstimate {
  bool stable = false;
  double spectral_radius = 0.0;
  std::optional<double> nu_hat;  // rate, 1/time
  std::optional<double> c_hat;   // amplitude constant
};

/// Transition (evolution) operator Psi(t, s) of a theta-periodic linear
/// generator, built from one fundamental-solution sweep over [0, theta].
/// Arbitrary spans are reduced modulo the period: partial-period factors at
/// each end sandwich an integer monodromy power, so long forward spans of a
/// stable generator stay contractive. Immutable after construction.
class TransitionOperator {
 public:
  TransitionOperator(MatrixFunction generator, double period, int steps_per_period)
      : generator_(std::move(generator)), period_(period), steps_(steps_per_period) {
    if (!(period_ > 0.0)) throw ConfigError("TransitionOperator: period must be positive");
    if (steps_ < 16) throw ConfigError("TransitionOperator: need >= 16 steps per period");
    Eigen::MatrixXd probe = generator_(0.0);
    dim_ = probe.rows();
    if (probe.cols() != dim_) throw ConfigError("TransitionOperator: generator must be square");
    auto rhs = [this](double t, const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
      return generator_(t) * x;
    };
    fundamental_.emplace(
        integrate_fixed(rhs, 0.0, period_, Eigen::MatrixXd::Identity(dim_, dim_), steps_));
    monodromy_ = fundamental_->sample(steps_);
    node_inverses_.reserve(static_cast<size_t>(steps_) + 1);
    for (int i = 0; i <= steps_; ++i)
      node_inverses_.push_back(guarded_inverse(fundamental_->sample(i), 1e12,
                                               "TransitionOperator: fundamental factor"));
    rho_ = plq::spectral_radius(monodromy_);
  }

  int dim() const { return dim_; }
  double period() const { return period_; }
  int steps_per_period() const { return steps_; }
  const MatrixPath& fundamental() const { return *fundamental_; }
  const Eigen::MatrixXd& monodromy() const { return monodromy_; }
  double spectral_radius() const { return rho_; }
  const MatrixFunction& generator() const { return generator_; }

  /// Phi(t_i, 0) at grid node i of [0, theta].
  const Eigen::MatrixXd& phi_node(int i) const { return fundamental_->sample(i); }
  /// Phi(t_i, 0)^{-1} at grid node i.
  const Eigen::MatrixXd& phi_inv_node(int i) const { return node_inverses_[static_cast<size_t>(i)]; }

  /// Phi(tau, 0) for tau in [0, theta], Hermite-interpolated between nodes.
  Eigen::MatrixXd phi(double tau) const { return fundamental_->eval(tau); }

  /// Psi(t, s) for arbitrary t, s. Backward spans (t < s) are served through
  /// an inverted monodromy power and rejected when the conditioning of that
  /// inversion exceeds 1e12.
  Eigen::MatrixXd operator()(double t, double s) const {
    auto [tau_t, k_t] = reduce(t);
    auto [tau_s, k_s] = reduce(s);
    long j = k_t - k_s;
    Eigen::MatrixXd left = phi(tau_t);
    Eigen::MatrixXd right = phi_inverse(tau_s);
    if (j == 0) return left * right;
    if (j > 0) return left * matrix_power(monodromy_, j) * right;
    Eigen::MatrixXd forward = matrix_power(monodromy_, -j);
    Eigen::MatrixXd back = guarded_inverse(forward, 1e12, "TransitionOperator: monodromy power");
    return left * back * right;
  }

  /// Adjoint propagator U*(T, t) = Psi(T, t)^T, the solution operator of the
  /// backward adjoint equation phi' = -L^T phi with data at T.
  Eigen::MatrixXd adjoint(double T, double t) const {
    if (t > T + 1e-12) throw ConfigError("adjoint: requires t <= T");
    return (*this)(T, t).transpose();
  }

 private:
  std::pair<double, long> reduce(double t) const {
    double k = std::floor(t / period_);
    double tau = t - k * period_;
    if (tau < 0.0) {
      tau += period_;
      k -= 1.0;
    }
    if (tau >= period_) {
      tau -= period_;
      k += 1.0;
    }
    return {tau, static_cast<long>(k)};
  }

  Eigen::MatrixXd phi_inverse(double tau) const {
    double u = tau / fundamental_->dt();
    double nearest = std::round(u);
    if (std::abs(u - nearest) < 1e-9 && nearest >= 0 && nearest <= steps_)
      return node_inverses_[static_cast<size_t>(nearest)];
    return guarded_inverse(phi(tau), 1e12, "TransitionOperator: partial factor");
  }

  MatrixFunction generator_;
  double period_;
  int steps_;
  int dim_ = 0;
  std::optional<MatrixPath> fundamental_;
  Eigen::MatrixXd monodromy_;
  std::vector<Eigen::MatrixXd> node_inverses_;
  double rho_ = 0.0;
};

inline TransitionOperator build_transition(MatrixFunction generator, double period,
                                           int steps_per_period) {
  return TransitionOperator(std::move(generator), period, steps_per_period);
}

/// Rate from the monodromy spectrum, amplitude from sweeping sampled spans:
/// c_hat = sup of ||Psi(s+tau, s)|| * exp(nu_hat * tau) over anchors s in
/// [0, theta) and spans tau up to span_periods periods, operator 2-norm.
/// The sweep covers ten periods: the envelope ||M^k|| / rho^k keeps growing
/// past short spans for non-normal monodromies, and the amplitude must
/// dominate every span it certifies.
inline DecayEstimate estimate_decay(const TransitionOperator& op, int anchors = 8,
                                    int span_samples = 800, double span_periods = 10.0) {
  DecayEstimate est;
  est.spectral_radius = op.spectral_radius();
  if (!(est.spectral_radius < 1.0)) return est;
  est.stable = true;
  double theta = op.period();
  double nu = -std::log(est.spectral_radius) / theta;
  est.nu_hat = nu;
  double c = 1.0;
  for (int a = 0; a < anchors; ++a) {
    double s = theta * a / anchors;
    for (int i = 0; i <= span_samples; ++i) {
      double tau = span_periods * theta * i / span_samples;
      double growth = operator_norm(op(s + tau, s)) * std::exp(nu * tau);
      c = std::max(c, growth);
    }
  }
  est.c_hat = c;
  return est;
}

}  // namespace plq
