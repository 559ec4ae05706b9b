#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "dyadlab/errors.hpp"
#include "dyadlab/step_function.hpp"

namespace dyadlab {

/// Lebesgue exponent p > 1 with its conjugate p' = p/(p-1).
struct Exponent {
  double p;
  double conj;

  explicit Exponent(double p_) : p(p_), conj(p_ / (p_ - 1.0)) {
    if (!(p_ > 1.0) || !std::isfinite(p_))
      fail(errc::invalid_exponent, "exponent p must satisfy p > 1, got " + std::to_string(p_));
  }

  double primal_power() const { return 1.0 / p; }       // W^{1/p}
  double dual_power() const { return -1.0 / p; }        // W^{-1/p}
  double dual_density_power() const { return -conj / p; }  // W^{-p'/p}
};

/// Fractional power of a symmetric positive definite matrix via
/// eigendecomposition.
inline Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& A, double s) {
  if (A.rows() != A.cols()) fail(errc::invalid_weight, "matrix_power needs a square matrix");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(errc::invalid_weight, "matrix_power needs a symmetric matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (A + A.transpose()));
  if (eig.info() != Eigen::Success) fail(errc::invalid_weight, "eigendecomposition failed");
  Eigen::VectorXd lam = eig.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (!(lam(i) > 0.0))
      fail(errc::invalid_weight, "matrix_power needs positive eigenvalues, got " +
                                     std::to_string(lam(i)));
    lam(i) = std::pow(lam(i), s);
  }
  Eigen::MatrixXd out =
      eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

/// Matrix weight: an SPD-valued step function with memoized fractional powers
/// W^s. The power cache is write-once per exponent and safe under concurrent
/// readers; everything else is immutable.
class MatrixWeight {
 public:
  explicit MatrixWeight(StepFunction base)
      : base_(std::make_shared<const StepFunction>(std::move(base))) {
    if (base_->rows() != base_->cols())
      fail(errc::invalid_weight, "matrix weight cells must be square");
    for (Eigen::Index c = 0; c < base_->cell_count(); ++c) {
      const auto v = base_->cell(c);
      const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
      if ((v - v.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        fail(errc::invalid_weight, "weight cell " + std::to_string(c) + " is not symmetric");
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(v);
      if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0))
        fail(errc::invalid_weight,
             "weight cell " + std::to_string(c) + " is not positive definite");
    }
  }

  MatrixWeight(const MatrixWeight& other) : base_(other.base_) {
    std::lock_guard<std::mutex> lock(other.mutex_);
    powers_ = other.powers_;
  }
  MatrixWeight(MatrixWeight&& other) noexcept : base_(std::move(other.base_)) {
    std::lock_guard<std::mutex> lock(other.mutex_);
    powers_ = std::move(other.powers_);
  }
  MatrixWeight& operator=(const MatrixWeight& other) {
    if (this != &other) {
      std::scoped_lock lock(mutex_, other.mutex_);
      base_ = other.base_;
      powers_ = other.powers_;
    }
    return *this;
  }
  MatrixWeight& operator=(MatrixWeight&& other) noexcept {
    if (this != &other) {
      std::scoped_lock lock(mutex_, other.mutex_);
      base_ = std::move(other.base_);
      powers_ = std::move(other.powers_);
    }
    return *this;
  }

  const StepFunction& base() const { return *base_; }
  int resolution() const { return base_->resolution(); }
  Eigen::Index dim() const { return base_->rows(); }

  /// W^s as a step function, computed cellwise and cached per exponent.
  std::shared_ptr<const StepFunction> power(double s) const {
    if (s == 1.0) return base_;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = powers_.find(s);
      if (it != powers_.end()) return it->second;
    }
    auto p = std::make_shared<StepFunction>(resolution(), dim(), dim());
    for (Eigen::Index c = 0; c < base_->cell_count(); ++c)
      p->cell(c) = matrix_power(base_->cell(c), s);
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = powers_.emplace(s, std::move(p));
    (void)inserted;
    return it->second;
  }

  MatrixWeight coarsened(int resolution) const { return MatrixWeight(base_->coarsened(resolution)); }

 private:
  std::shared_ptr<const StepFunction> base_;
  mutable std::mutex mutex_;
  mutable std::map<double, std::shared_ptr<const StepFunction>> powers_;
};

enum class SamplingMode { midpoint, exact_average };

inline const char* sampling_name(SamplingMode m) {
  return m == SamplingMode::midpoint ? "midpoint" : "exact_average";
}

/// Parametric test-weight families.
struct WeightFamily {
  enum class Kind { constant, scalar_power, diagonal_powers, rotated_powers };

  Kind kind = Kind::constant;
  Eigen::MatrixXd constant_value;   // constant
  std::vector<double> alphas;       // power families
  double x0 = 0.5;
  double theta0 = 0.0;              // rotated: theta(x) = theta0 + omega x
  double omega = 0.0;
  Eigen::Index dim_override = 0;    // scalar_power embedded as w * Id_n

  static WeightFamily constant(const Eigen::MatrixXd& value) {
    WeightFamily f;
    f.kind = Kind::constant;
    f.constant_value = value;
    return f;
  }

  static WeightFamily scalar_power(double alpha, double x0, Eigen::Index dim = 1) {
    WeightFamily f;
    f.kind = Kind::scalar_power;
    f.alphas = {alpha};
    f.x0 = x0;
    f.dim_override = dim;
    return f;
  }

  static WeightFamily diagonal_powers(std::vector<double> alphas, double x0) {
    WeightFamily f;
    f.kind = Kind::diagonal_powers;
    f.alphas = std::move(alphas);
    f.x0 = x0;
    return f;
  }

  static WeightFamily rotated_powers(std::vector<double> alphas, double x0, double theta0,
                                     double omega) {
    WeightFamily f;
    f.kind = Kind::rotated_powers;
    f.alphas = std::move(alphas);
    f.x0 = x0;
    f.theta0 = theta0;
    f.omega = omega;
    return f;
  }

  Eigen::Index dim() const {
    switch (kind) {
      case Kind::constant: return constant_value.rows();
      case Kind::scalar_power: return dim_override > 0 ? dim_override : 1;
      case Kind::diagonal_powers:
      case Kind::rotated_powers: return static_cast<Eigen::Index>(alphas.size());
    }
    return 1;
  }
};

namespace detail {

/// Singularity placement: when x0 sits on an interior grid point it is offset
/// toward the nearest cell midpoint by 2^{-N-4}, so no cell evaluates the
/// profile at 0 in either sampling mode and the singular cell keeps strength
/// ~2^{-N a} as the resolution grows.
inline double perturb_x0(double x0, int resolution) {
  const double scaled = std::ldexp(x0, resolution);
  const double k = std::round(scaled);
  if (std::abs(scaled - k) > 1e-9) return x0;
  if (k <= 0.0 || k >= std::ldexp(1.0, resolution)) return x0;
  return std::ldexp(k, -resolution) + std::ldexp(1.0, -resolution - 4);
}

/// Exact average of |x - x0|^alpha over [a, b], alpha > -1 or x0 outside [a,b].
inline double power_cell_average(double alpha, double x0, double a, double b) {
  auto F = [&](double t) -> double {
    if (t == 0.0) return 0.0;
    if (alpha == -1.0) return std::log(std::abs(t)) * (t > 0 ? 1.0 : -1.0);
    return std::copysign(std::pow(std::abs(t), alpha + 1.0) / (alpha + 1.0), t);
  };
  return (F(b - x0) - F(a - x0)) / (b - a);
}

inline void check_integrable(const std::vector<double>& alphas, double x0) {
  for (double a : alphas)
    if (a <= -1.0 && x0 >= 0.0 && x0 <= 1.0)
      fail(errc::non_integrable_weight,
           "power " + std::to_string(a) + " with singularity at x0=" + std::to_string(x0) +
               " is not locally integrable on [0,1)");
}

}  // namespace detail

/// Discretize a weight family on the 2^N grid. Power-family singularities on
/// interior grid points are perturbed per detail::perturb_x0. Exact averages
/// are available where the family has a closed form (constant and unrotated
/// power families).
inline MatrixWeight make_weight(const WeightFamily& family, int resolution,
                                SamplingMode mode = SamplingMode::midpoint) {
  const Eigen::Index n = family.dim();
  StepFunction cells(resolution, n, n);
  const double h = std::ldexp(1.0, -resolution);

  switch (family.kind) {
    case WeightFamily::Kind::constant: {
      cells = StepFunction::constant(resolution, family.constant_value);
      break;
    }
    case WeightFamily::Kind::scalar_power:
    case WeightFamily::Kind::diagonal_powers: {
      detail::check_integrable(family.alphas, family.x0);
      const double x0 = detail::perturb_x0(family.x0, resolution);
      const std::size_t terms = family.alphas.size();
      for (Eigen::Index c = 0; c < cells.cell_count(); ++c) {
        const double a = static_cast<double>(c) * h;
        const double mid = a + 0.5 * h;
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double alpha = family.alphas[std::min<std::size_t>(i, terms - 1)];
          v(i, i) = mode == SamplingMode::midpoint
                        ? std::pow(std::abs(mid - x0), alpha)
                        : detail::power_cell_average(alpha, x0, a, a + h);
        }
        cells.cell(c) = v;
      }
      break;
    }
    case WeightFamily::Kind::rotated_powers: {
      if (n != 2) fail(errc::invalid_input, "rotated_powers supports n = 2 only");
      if (mode != SamplingMode::midpoint)
        fail(errc::invalid_input, "rotated_powers has no exact-average closed form");
      detail::check_integrable(family.alphas, family.x0);
      const double x0 = detail::perturb_x0(family.x0, resolution);
      for (Eigen::Index c = 0; c < cells.cell_count(); ++c) {
        const double mid = (static_cast<double>(c) + 0.5) * h;
        const double theta = family.theta0 + family.omega * mid;
        Eigen::Matrix2d rot;
        rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
        Eigen::Vector2d lam(std::pow(std::abs(mid - x0), family.alphas[0]),
                            std::pow(std::abs(mid - x0), family.alphas[1]));
        cells.cell(c) = rot * lam.asDiagonal() * rot.transpose();
      }
      break;
    }
  }
  return MatrixWeight(std::move(cells));
}

/// Cellwise matrix * vector (or matrix * matrix) product.
inline StepFunction multiply_pointwise(const StepFunction& M, const StepFunction& f) {
  if (M.resolution() != f.resolution() || M.cols() != f.rows())
    fail(errc::shape_mismatch, "multiply_pointwise shape mismatch");
  StepFunction out(f.resolution(), M.rows(), f.cols());
  for (Eigen::Index c = 0; c < f.cell_count(); ++c) out.cell(c) = M.cell(c) * f.cell(c);
  return out;
}

/// || W^{1/p} f ||_{L^p} on [0,1).
inline double weighted_lp_norm(const MatrixWeight& W, const Exponent& p, const StepFunction& f) {
  return lp_norm(multiply_pointwise(*W.power(p.primal_power()), f), p.p);
}

}  // namespace dyadlab
