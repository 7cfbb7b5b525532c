#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "plq/errors.hpp"

namespace plq {

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

/// Kronecker product, dense. Sizes here are tiny (n <= ~50).
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Column-stacking vectorization.
inline Eigen::VectorXd vec(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

inline Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

inline double spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Operator 2-norm (largest singular value).
inline double operator_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.jacobiSvd().singularValues()(0);
}

inline double min_eigenvalue_sym(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(m));
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue_sym(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(m));
  return es.eigenvalues().maxCoeff();
}

/// Inverse guarded by a Frobenius-norm condition estimate.
inline Eigen::MatrixXd guarded_inverse(const Eigen::MatrixXd& m, double cond_limit,
                                       const std::string& what) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  Eigen::MatrixXd inv = lu.inverse();
  double cond = m.norm() * inv.norm();
  if (!std::isfinite(cond) || cond > cond_limit)
    throw ConditioningError(what + ": condition estimate " + std::to_string(cond) +
                            " exceeds limit " + std::to_string(cond_limit));
  return inv;
}

/// Solve m * x = rhs with the same condition guard as guarded_inverse.
inline Eigen::MatrixXd guarded_solve(const Eigen::MatrixXd& m, const Eigen::MatrixXd& rhs,
                                     double cond_limit, const std::string& what) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  double cond = m.norm() * lu.inverse().norm();
  if (!std::isfinite(cond) || cond > cond_limit)
    throw ConditioningError(what + ": condition estimate " + std::to_string(cond) +
                            " exceeds limit " + std::to_string(cond_limit));
  return lu.solve(rhs);
}

/// Integer matrix power by repeated squaring, exponent >= 0.
inline Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& m, long k) {
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::MatrixXd base = m;
  while (k > 0) {
    if (k & 1) result = result * base;
    base = base * base;
    k >>= 1;
  }
  return result;
}

}  // namespace plq
