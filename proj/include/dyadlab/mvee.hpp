#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dyadlab/errors.hpp"
#include "dyadlab/linalg.hpp"
#include "dyadlab/weights.hpp"

namespace dyadlab {

/// Thrown when the iteration cap is exceeded; carries the last iterate.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, Eigen::MatrixXd last)
      : Error(errc::no_convergence, what), last_iterate(std::move(last)) {}
  Eigen::MatrixXd last_iterate;
};

/// Minimum-volume origin-centered ellipsoid of a centrally symmetric point
/// cloud (the caller supplies both signs). Returns the gauge matrix A of the
/// ellipsoid {x : |Ax| <= 1}: every input point satisfies |A p| <= 1 + tol and
/// the volume is minimal up to a (1+tol)^n factor.
///
/// Frank-Wolfe coordinate ascent on the D-optimal design dual with
/// Wolfe-Atwood away steps; per-iteration cost O(m n) via rank-one updates.
inline Eigen::MatrixXd mvee(const std::vector<Eigen::VectorXd>& points, double tol,
                            int max_iterations = 0) {
  if (points.empty()) fail(errc::degenerate_body, "mvee needs a nonempty point set");
  const Eigen::Index n = points.front().size();
  const auto m = static_cast<Eigen::Index>(points.size());
  for (const auto& p : points) {
    if (p.size() != n) fail(errc::shape_mismatch, "mvee points have mixed dimensions");
    if (!p.allFinite()) fail(errc::invalid_input, "mvee point is not finite");
  }
  if (!(tol > 0.0)) fail(errc::invalid_input, "mvee tolerance must be positive");

  Eigen::MatrixXd P(n, m);
  for (Eigen::Index i = 0; i < m; ++i) P.col(i) = points[static_cast<std::size_t>(i)];

  Eigen::VectorXd u = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));

  auto design_matrix = [&](const Eigen::VectorXd& weights) -> Eigen::MatrixXd {
    return P * weights.asDiagonal() * P.transpose();
  };

  Eigen::MatrixXd X = design_matrix(u);
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(X);
    if (eig.info() != Eigen::Success ||
        eig.eigenvalues().minCoeff() <= 1e-13 * std::max(1e-300, eig.eigenvalues().maxCoeff()))
      fail(errc::degenerate_body, "mvee point set does not span the space");
  }
  // g_i = p_i^T X(u)^{-1} p_i; optimality is g_i == n on the support.
  Eigen::MatrixXd M(n, n);
  Eigen::VectorXd g(m);
  auto refresh = [&]() {
    X = design_matrix(u);
    M = X.inverse();
    for (Eigen::Index i = 0; i < m; ++i) g(i) = P.col(i).dot(M * P.col(i));
  };
  refresh();

  const double nd = static_cast<double>(n);
  // Frank-Wolfe primal convergence is sublinear, so the default cap scales
  // with the requested accuracy.
  if (max_iterations <= 0)
    max_iterations = static_cast<int>(
        std::min(2e7, std::max(2e5, 4.0 * static_cast<double>(n) / tol)));
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    Eigen::Index j_add = 0, j_away = -1;
    double g_max = -1.0, g_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (g(i) > g_max) {
        g_max = g(i);
        j_add = i;
      }
      if (u(i) > 1e-14 && g(i) < g_min) {
        g_min = g(i);
        j_away = i;
      }
    }
    // Primal feasibility certifies both the covering and the volume bound;
    // the away-side gap is used only to pick faster steps.
    const double eps_add = g_max / nd - 1.0;
    const double eps_away = (j_away >= 0) ? 1.0 - g_min / nd : 0.0;
    if (eps_add <= tol) break;

    Eigen::Index j;
    double lambda;
    if (eps_add >= eps_away) {
      j = j_add;
      lambda = (g(j) - nd) / (nd * (g(j) - 1.0));
    } else {
      // Away step. The unconstrained line-search optimum is valid only for
      // g > 1; otherwise the best feasible move drops the point entirely.
      j = j_away;
      const double clamp = -u(j) / (1.0 - u(j));
      lambda = g(j) > 1.0 ? std::max((g(j) - nd) / (nd * (g(j) - 1.0)), clamp) : clamp;
    }

    const double c = lambda / (1.0 - lambda);
    const double denom = 1.0 + c * g(j);
    if (!(std::abs(denom) > 1e-14) || !(std::abs(1.0 - lambda) > 1e-14)) {
      refresh();
      continue;
    }
    u *= (1.0 - lambda);
    u(j) += lambda;
    u(j) = std::max(u(j), 0.0);
    Eigen::VectorXd Mp = M * P.col(j);
    Eigen::VectorXd s = P.transpose() * Mp;
    M = (M - (c / denom) * (Mp * Mp.transpose())) / (1.0 - lambda);
    g = (g - (c / denom) * s.cwiseProduct(s)) / (1.0 - lambda);
    if ((iter & 0xff) == 0xff || !g.allFinite()) refresh();  // shed rank-one drift
  }

  X = design_matrix(u);
  Eigen::MatrixXd Q = X.inverse() / nd;
  Eigen::MatrixXd gauge = matrix_power(0.5 * (Q + Q.transpose()), 0.5);
  if (iter >= max_iterations)
    throw NoConvergenceError("mvee iteration cap " + std::to_string(max_iterations) +
                                 " exceeded at tol " + std::to_string(tol),
                             gauge);
  return gauge;
}

}  // namespace dyadlab
