#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plq/errors.hpp"
#include "plq/linalg.hpp"

namespace plq {

/// One harmonic of a truncated Fourier series; `freq` is the integer
/// multiple of the base frequency 2*pi/theta, so periodicity holds by
/// construction.
struct FourierTerm {
  int freq = 1;
  Eigen::MatrixXd cos_coef;
  Eigen::MatrixXd sin_coef;
};

struct BuiltinCoefficient {
  Eigen::Index rows = 0, cols = 0;
  std::function<Eigen::MatrixXd(double)> fn;
};

/// Registered closed-form coefficient functions. These carry the entries a
/// Fourier series cannot represent exactly (e.g. exp(-sin t)).
inline const std::map<std::string, BuiltinCoefficient>& builtin_coefficients() {
  static const std::map<std::string, BuiltinCoefficient> registry = [] {
    std::map<std::string, BuiltinCoefficient> r;
    r["paper-2d-A"] = BuiltinCoefficient{2, 2, [](double t) {
      Eigen::MatrixXd a(2, 2);
      a << std::sin(t), std::cos(t) * std::cos(t),
           std::exp(-std::sin(t)), -1.0 + std::cos(t);
      return a;
    }};
    return r;
  }();
  return registry;
}

/// A matrix-valued coefficient of the problem: constant, a truncated
/// Fourier series, or a named builtin closed form.
class CoefficientSpec {
 public:
  enum class Kind { Constant, Fourier, Builtin };

  static CoefficientSpec constant(Eigen::MatrixXd value) {
    CoefficientSpec s;
    s.kind_ = Kind::Constant;
    s.rows_ = value.rows();
    s.cols_ = value.cols();
    s.constant_ = std::move(value);
    return s;
  }

  static CoefficientSpec fourier(Eigen::MatrixXd const_term, std::vector<FourierTerm> terms) {
    CoefficientSpec s;
    s.kind_ = Kind::Fourier;
    s.rows_ = const_term.rows();
    s.cols_ = const_term.cols();
    for (const auto& term : terms) {
      if (term.cos_coef.rows() != s.rows_ || term.cos_coef.cols() != s.cols_ ||
          term.sin_coef.rows() != s.rows_ || term.sin_coef.cols() != s.cols_)
        throw ConfigError("CoefficientSpec: Fourier term shape mismatch");
    }
    s.fourier_const_ = std::move(const_term);
    s.terms_ = std::move(terms);
    return s;
  }

  static CoefficientSpec builtin(const std::string& name) {
    const auto& registry = builtin_coefficients();
    auto it = registry.find(name);
    if (it == registry.end())
      throw ConfigError("unknown builtin coefficient '" + name + "'");
    CoefficientSpec s;
    s.kind_ = Kind::Builtin;
    s.rows_ = it->second.rows;
    s.cols_ = it->second.cols;
    s.builtin_name_ = name;
    s.builtin_fn_ = it->second.fn;
    return s;
  }

  Kind kind() const { return kind_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  bool is_constant() const { return kind_ == Kind::Constant; }
  const std::string& builtin_name() const { return builtin_name_; }
  const Eigen::MatrixXd& constant_value() const { return constant_; }
  const Eigen::MatrixXd& fourier_const() const { return fourier_const_; }
  const std::vector<FourierTerm>& fourier_terms() const { return terms_; }

  Eigen::MatrixXd eval(double t, double theta) const {
    switch (kind_) {
      case Kind::Constant:
        return constant_;
      case Kind::Fourier: {
        Eigen::MatrixXd out = fourier_const_;
        double omega = 2.0 * M_PI / theta;
        for (const auto& term : terms_) {
          double arg = term.freq * omega * t;
          out += std::cos(arg) * term.cos_coef + std::sin(arg) * term.sin_coef;
        }
        return out;
      }
      case Kind::Builtin:
        return builtin_fn_(t);
    }
    throw ConfigError("CoefficientSpec: invalid kind");
  }

 private:
  Kind kind_ = Kind::Constant;
  Eigen::Index rows_ = 0, cols_ = 0;
  Eigen::MatrixXd constant_;
  Eigen::MatrixXd fourier_const_;
  std::vector<FourierTerm> terms_;
  std::string builtin_name_;
  std::function<Eigen::MatrixXd(double)> builtin_fn_;
};

/// All six coefficients evaluated at one time.
struct CoefficientSample {
  Eigen::MatrixXd A, B, C, Q;
  Eigen::VectorXd y_d, u_d;
};

/// Theta-periodic tracking problem data: state dimension n, control
/// dimension m, output dimension k, coefficients A (n x n), B (n x m),
/// C (k x n), Q (m x m, symmetric positive definite), and tracking signals
/// y_d (n), u_d (m). Immutable after construction; safe to share across
/// threads.
class PeriodicProblem {
 public:
  PeriodicProblem(int n, int m, int k, double theta, CoefficientSpec A, CoefficientSpec B,
                  CoefficientSpec C, CoefficientSpec Q, CoefficientSpec y_d, CoefficientSpec u_d)
      : n_(n), m_(m), k_(k), theta_(theta),
        A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), Q_(std::move(Q)),
        yd_(std::move(y_d)), ud_(std::move(u_d)) {
    if (n_ <= 0 || m_ <= 0 || k_ <= 0) throw ConfigError("PeriodicProblem: dimensions must be positive");
    if (!(theta_ > 0.0)) throw ConfigError("PeriodicProblem: period must be positive");
    require_shape(A_, n_, n_, "A");
    require_shape(B_, n_, m_, "B");
    require_shape(C_, k_, n_, "C");
    require_shape(Q_, m_, m_, "Q");
    require_shape(yd_, n_, 1, "y_d");
    require_shape(ud_, m_, 1, "u_d");
    if (B_.is_constant() && Q_.is_constant()) {
      Eigen::MatrixXd b = B_.constant_value();
      Eigen::MatrixXd qinv = Q_.constant_value().llt().solve(Eigen::MatrixXd::Identity(m_, m_));
      cached_weight_ = b * qinv * b.transpose();
      cached_q_inv_ = qinv;
    }
    if (C_.is_constant()) {
      Eigen::MatrixXd c = C_.constant_value();
      cached_ctc_ = c.transpose() * c;
    }
  }

  int n() const { return n_; }
  int m() const { return m_; }
  int k() const { return k_; }
  double theta() const { return theta_; }

  Eigen::MatrixXd A_at(double t) const { return A_.eval(t, theta_); }
  Eigen::MatrixXd B_at(double t) const { return B_.eval(t, theta_); }
  Eigen::MatrixXd C_at(double t) const { return C_.eval(t, theta_); }
  Eigen::MatrixXd Q_at(double t) const { return Q_.eval(t, theta_); }
  Eigen::VectorXd y_d_at(double t) const { return yd_.eval(t, theta_).col(0); }
  Eigen::VectorXd u_d_at(double t) const { return ud_.eval(t, theta_).col(0); }

  Eigen::MatrixXd Q_inv_at(double t) const {
    if (cached_q_inv_) return *cached_q_inv_;
    return Q_at(t).llt().solve(Eigen::MatrixXd::Identity(m_, m_));
  }

  /// B Q^{-1} B^T, the control weight appearing in every equation here.
  Eigen::MatrixXd weight_at(double t) const {
    if (cached_weight_) return *cached_weight_;
    Eigen::MatrixXd b = B_at(t);
    return b * Q_inv_at(t) * b.transpose();
  }

  /// C^T C, the state weight.
  Eigen::MatrixXd ctc_at(double t) const {
    if (cached_ctc_) return *cached_ctc_;
    Eigen::MatrixXd c = C_at(t);
    return c.transpose() * c;
  }

  CoefficientSample eval(double t) const {
    return CoefficientSample{A_at(t), B_at(t), C_at(t), Q_at(t), y_d_at(t), u_d_at(t)};
  }

  const CoefficientSpec& A_spec() const { return A_; }
  const CoefficientSpec& B_spec() const { return B_; }
  const CoefficientSpec& C_spec() const { return C_; }
  const CoefficientSpec& Q_spec() const { return Q_; }
  const CoefficientSpec& y_d_spec() const { return yd_; }
  const CoefficientSpec& u_d_spec() const { return ud_; }

 private:
  static void require_shape(const CoefficientSpec& s, Eigen::Index r, Eigen::Index c,
                            const std::string& name) {
    if (s.rows() != r || s.cols() != c)
      throw ConfigError("PeriodicProblem: coefficient " + name + " has shape " +
                        std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                        ", expected " + std::to_string(r) + "x" + std::to_string(c));
  }

  int n_, m_, k_;
  double theta_;
  CoefficientSpec A_, B_, C_, Q_, yd_, ud_;
  std::optional<Eigen::MatrixXd> cached_weight_, cached_q_inv_, cached_ctc_;
};

/// The named example problems.
///   paper-2d:  theta = 2*pi, oscillatory 2-D A with an exp(-sin t) entry,
///              B = C = Q = I, tracking y_d = (sin t, cos t), u_d = 0.
///   scalar-a0: scalar A = 0, B = C = Q = 1, y_d = 1, u_d = 0.
///   scalar-c3: scalar A = B = Q = 1, C = sqrt(3), zero tracking.
inline PeriodicProblem builtin_problem(const std::string& name) {
  const double theta = 2.0 * M_PI;
  auto c1 = [](double v) {
    return CoefficientSpec::constant(Eigen::MatrixXd::Constant(1, 1, v));
  };
  if (name == "paper-2d") {
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    FourierTerm yd_term;
    yd_term.freq = 1;
    yd_term.cos_coef = (Eigen::MatrixXd(2, 1) << 0.0, 1.0).finished();
    yd_term.sin_coef = (Eigen::MatrixXd(2, 1) << 1.0, 0.0).finished();
    return PeriodicProblem(
        2, 2, 2, theta, CoefficientSpec::builtin("paper-2d-A"), CoefficientSpec::constant(eye),
        CoefficientSpec::constant(eye), CoefficientSpec::constant(eye),
        CoefficientSpec::fourier(Eigen::MatrixXd::Zero(2, 1), {yd_term}),
        CoefficientSpec::constant(Eigen::MatrixXd::Zero(2, 1)));
  }
  if (name == "scalar-a0")
    return PeriodicProblem(1, 1, 1, theta, c1(0.0), c1(1.0), c1(1.0), c1(1.0), c1(1.0), c1(0.0));
  if (name == "scalar-c3")
    return PeriodicProblem(1, 1, 1, theta, c1(1.0), c1(1.0), c1(std::sqrt(3.0)), c1(1.0),
                           c1(0.0), c1(0.0));
  throw ConfigError("unknown builtin problem '" + name + "'");
}

struct ValidationReport {
  std::vector<std::string> violations;
  double min_eig_Q = 0.0;
  double max_periodicity_gap = 0.0;
  bool valid() const { return violations.empty(); }
};

/// Checks Q for symmetric positive definiteness on a sampling grid and each
/// spec for theta-periodicity at the seam. Violations are reported, not
/// thrown.
inline ValidationReport validate_problem(const PeriodicProblem& p, int grid_points = 256) {
  if (grid_points < 256) grid_points = 256;
  ValidationReport report;
  report.min_eig_Q = std::numeric_limits<double>::infinity();
  double dt = p.theta() / grid_points;
  for (int i = 0; i < grid_points; ++i) {
    double t = i * dt;
    Eigen::MatrixXd q = p.Q_at(t);
    double asym = (q - q.transpose()).norm();
    if (asym > 1e-12) {
      report.violations.push_back("Q not symmetric at t = " + std::to_string(t));
    }
    double lo = min_eigenvalue_sym(q);
    report.min_eig_Q = std::min(report.min_eig_Q, lo);
    if (lo <= 1e-12) {
      report.violations.push_back("Q not positive definite at t = " + std::to_string(t) +
                                  " (min eigenvalue " + std::to_string(lo) + ")");
      break;  // one witness is enough
    }
  }
  struct Named {
    const char* name;
    const CoefficientSpec* spec;
  };
  const Named specs[] = {{"A", &p.A_spec()}, {"B", &p.B_spec()}, {"C", &p.C_spec()},
                         {"Q", &p.Q_spec()}, {"y_d", &p.y_d_spec()}, {"u_d", &p.u_d_spec()}};
  for (const auto& s : specs) {
    double gap = (s.spec->eval(p.theta(), p.theta()) - s.spec->eval(0.0, p.theta())).norm();
    report.max_periodicity_gap = std::max(report.max_periodicity_gap, gap);
    if (gap > 1e-12)
      report.violations.push_back(std::string(s.name) + " not theta-periodic (seam gap " +
                                  std::to_string(gap) + ")");
  }
  return report;
}

}  // namespace plq
