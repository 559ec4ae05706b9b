#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "dyadlab/errors.hpp"

namespace dyadlab {

/// Spectral norm of a small matrix via an exact symmetric eigensolve of the
/// Gram matrix (no iterative methods; n stays tiny throughout).
inline double spectral_norm(const Eigen::MatrixXd& A) {
  if (A.size() == 1) return std::abs(A(0, 0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A.transpose() * A);
  if (eig.info() != Eigen::Success) fail(errc::invalid_input, "spectral_norm eigensolve failed");
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

/// Largest eigenvalue of a symmetric matrix.
inline double max_eigenvalue(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (A + A.transpose()));
  if (eig.info() != Eigen::Success) fail(errc::invalid_input, "max_eigenvalue eigensolve failed");
  return eig.eigenvalues().maxCoeff();
}

inline double min_eigenvalue(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (A + A.transpose()));
  if (eig.info() != Eigen::Success) fail(errc::invalid_input, "min_eigenvalue eigensolve failed");
  return eig.eigenvalues().minCoeff();
}

}  // namespace dyadlab
