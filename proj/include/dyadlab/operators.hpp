#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "dyadlab/errors.hpp"
#include "dyadlab/haar.hpp"
#include "dyadlab/interval.hpp"
#include "dyadlab/linalg.hpp"
#include "dyadlab/reducing.hpp"
#include "dyadlab/step_function.hpp"
#include "dyadlab/weights.hpp"

namespace dyadlab {

namespace detail {

/// Means of f over every dyadic interval, per level (level N = cells).
inline std::vector<Eigen::MatrixXd> dyadic_means(const StepFunction& f) {
  auto sums = dyadic_sums(f);
  const double cell_measure = std::ldexp(1.0, -f.resolution());
  for (int lvl = 0; lvl <= f.resolution(); ++lvl)
    sums[static_cast<std::size_t>(lvl)] *= cell_measure * std::pow(2.0, lvl);
  return sums;
}

}  // namespace detail

/// Dyadic paraproduct with a scalar symbol: sum_I b_I (m_I f) h_I. Acts
/// componentwise on vector-valued f.
inline StepFunction paraproduct(const SymbolCoefficients& b, const StepFunction& f) {
  if (b.resolution != f.resolution())
    fail(errc::shape_mismatch, "paraproduct resolution mismatch");
  if (!(b.rows == 1 && b.cols == 1))
    fail(errc::shape_mismatch, "paraproduct needs a scalar symbol");
  auto means = detail::dyadic_means(f);
  HaarCoefficients out = HaarCoefficients::zero(f.resolution(), f.rows(), f.cols());
  for (int lvl = 0; lvl < f.resolution(); ++lvl) {
    const auto& blvl = b.levels[static_cast<std::size_t>(lvl)];
    const auto& mlvl = means[static_cast<std::size_t>(lvl)];
    auto& olvl = out.levels[static_cast<std::size_t>(lvl)];
    for (Eigen::Index k = 0; k < olvl.cols(); ++k) olvl.col(k) = blvl(0, k) * mlvl.col(k);
  }
  return haar_synthesize(out);
}

/// Matrix-symbol paraproduct: sum_I (B_I m_I f) h_I.
inline StepFunction matrix_paraproduct(const SymbolCoefficients& B, const StepFunction& f) {
  if (B.resolution != f.resolution())
    fail(errc::shape_mismatch, "matrix_paraproduct resolution mismatch");
  if (B.rows != B.cols || f.cols() != 1 || B.cols != f.rows())
    fail(errc::shape_mismatch, "matrix_paraproduct shape mismatch");
  auto means = detail::dyadic_means(f);
  HaarCoefficients out = HaarCoefficients::zero(f.resolution(), f.rows(), 1);
  for (int lvl = 0; lvl < f.resolution(); ++lvl) {
    const auto& mlvl = means[static_cast<std::size_t>(lvl)];
    auto& olvl = out.levels[static_cast<std::size_t>(lvl)];
    for (Eigen::Index k = 0; k < olvl.cols(); ++k) {
      Eigen::Map<const Eigen::MatrixXd> Bk(
          B.levels[static_cast<std::size_t>(lvl)].data() + k * B.rows * B.cols, B.rows, B.cols);
      olvl.col(k) = Bk * mlvl.col(k);
    }
  }
  return haar_synthesize(out);
}

namespace detail {

/// Adjoint of the scalar paraproduct w.r.t. the L^2 pairing:
/// g |-> sum_I b_I g_I chi_I / |I|. Used by the norm-estimation machinery.
inline StepFunction paraproduct_adjoint(const SymbolCoefficients& b, const StepFunction& g) {
  if (b.resolution != g.resolution())
    fail(errc::shape_mismatch, "paraproduct_adjoint resolution mismatch");
  auto coeffs = haar_transform(g);
  const Eigen::Index vals = g.rows() * g.cols();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(vals, 1);
  for (int lvl = 0; lvl < g.resolution(); ++lvl) {
    const auto& blvl = b.levels[static_cast<std::size_t>(lvl)];
    const auto& glvl = coeffs.levels[static_cast<std::size_t>(lvl)];
    Eigen::MatrixXd next(vals, acc.cols() * 2);
    const double inv_len = std::pow(2.0, lvl);
    for (Eigen::Index k = 0; k < acc.cols(); ++k) {
      Eigen::VectorXd add = blvl(0, k) * glvl.col(k) * inv_len;
      next.col(2 * k) = acc.col(k) + add;
      next.col(2 * k + 1) = acc.col(k) + add;
    }
    acc = std::move(next);
  }
  StepFunction out(g.resolution(), g.rows(), g.cols());
  out.data() = std::move(acc);
  return out;
}

/// Adjoint of the matrix paraproduct: g |-> sum_I B_I^T g_I chi_I / |I|.
inline StepFunction matrix_paraproduct_adjoint(const SymbolCoefficients& B,
                                               const StepFunction& g) {
  if (B.resolution != g.resolution())
    fail(errc::shape_mismatch, "matrix_paraproduct_adjoint resolution mismatch");
  auto coeffs = haar_transform(g);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(g.rows(), 1);
  for (int lvl = 0; lvl < g.resolution(); ++lvl) {
    const auto& glvl = coeffs.levels[static_cast<std::size_t>(lvl)];
    Eigen::MatrixXd next(g.rows(), acc.cols() * 2);
    const double inv_len = std::pow(2.0, lvl);
    for (Eigen::Index k = 0; k < acc.cols(); ++k) {
      Eigen::Map<const Eigen::MatrixXd> Bk(
          B.levels[static_cast<std::size_t>(lvl)].data() + k * B.rows * B.cols, B.rows, B.cols);
      Eigen::VectorXd add = Bk.transpose() * glvl.col(k) * inv_len;
      next.col(2 * k) = acc.col(k) + add;
      next.col(2 * k + 1) = acc.col(k) + add;
    }
    acc = std::move(next);
  }
  StepFunction out(g.resolution(), g.rows(), 1);
  out.data() = std::move(acc);
  return out;
}

}  // namespace detail

/// Per-interval matrices of a constant Haar multiplier, with provenance.
struct MultiplierSpec {
  enum class Provenance { reducing, inverse_reducing, naive_average, custom };

  int resolution = 0;
  Eigen::Index dim = 1;
  Provenance provenance = Provenance::custom;
  ReducingBackend backend = ReducingBackend::auto_select;
  std::vector<std::vector<Eigen::MatrixXd>> levels;  // [level][index], dim x dim

  static MultiplierSpec identity(int resolution, Eigen::Index dim) {
    MultiplierSpec spec;
    spec.resolution = resolution;
    spec.dim = dim;
    spec.levels.resize(static_cast<std::size_t>(resolution));
    for (int lvl = 0; lvl < resolution; ++lvl)
      spec.levels[static_cast<std::size_t>(lvl)].assign(std::size_t{1} << lvl,
                                                        Eigen::MatrixXd::Identity(dim, dim));
    return spec;
  }

  const Eigen::MatrixXd& at(const DyadicInterval& I) const {
    if (I.level >= resolution)
      fail(errc::index_out_of_range, "multiplier has no entry at level " + std::to_string(I.level));
    return levels[static_cast<std::size_t>(I.level)][static_cast<std::size_t>(I.index)];
  }
};

inline const char* provenance_name(MultiplierSpec::Provenance p) {
  switch (p) {
    case MultiplierSpec::Provenance::reducing: return "reducing";
    case MultiplierSpec::Provenance::inverse_reducing: return "inverse_reducing";
    case MultiplierSpec::Provenance::naive_average: return "naive_average";
    case MultiplierSpec::Provenance::custom: return "custom";
  }
  return "unknown";
}

/// Fill the per-interval multiplier matrices from a weight. `invert` replaces
/// every entry by its matrix inverse.
inline MultiplierSpec build_multiplier(const MatrixWeight& W, const Exponent& p,
                                       MultiplierSpec::Provenance variant,
                                       ReducingBackend backend = ReducingBackend::auto_select,
                                       bool invert = false, const ReducingOptions& opt = {}) {
  MultiplierSpec spec;
  spec.resolution = W.resolution();
  spec.dim = W.dim();
  spec.provenance = variant;
  spec.backend = backend;
  spec.levels.resize(static_cast<std::size_t>(spec.resolution));
  for (int lvl = 0; lvl < spec.resolution; ++lvl) {
    auto& row = spec.levels[static_cast<std::size_t>(lvl)];
    row.reserve(std::size_t{1} << lvl);
    for (std::int64_t k = 0; k < (std::int64_t{1} << lvl); ++k) {
      const DyadicInterval I(lvl, k);
      Eigen::MatrixXd a;
      switch (variant) {
        case MultiplierSpec::Provenance::reducing:
          a = reducing_matrix(W, p, I, /*dual=*/false, backend, opt);
          break;
        case MultiplierSpec::Provenance::inverse_reducing:
          a = reducing_matrix(W, p, I, /*dual=*/false, backend, opt).inverse();
          break;
        case MultiplierSpec::Provenance::naive_average:
          a = matrix_power(mean_on(W.base(), I), p.primal_power());
          break;
        case MultiplierSpec::Provenance::custom:
          fail(errc::invalid_input, "custom multipliers are filled by the caller");
      }
      if (invert) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        if (!lu.isInvertible())
          fail(errc::singular_multiplier,
               "multiplier entry at " + I.to_string() + " is singular");
        a = lu.inverse();
      }
      row.push_back(std::move(a));
    }
  }
  return spec;
}

/// Constant Haar multiplier: sum_I a_I f_I h_I (the mean is annihilated).
inline StepFunction haar_multiplier(const MultiplierSpec& a, const StepFunction& f,
                                    bool transpose = false) {
  if (a.resolution != f.resolution())
    fail(errc::shape_mismatch, "haar_multiplier resolution mismatch");
  if (f.cols() != 1 || f.rows() != a.dim)
    fail(errc::shape_mismatch, "haar_multiplier expects vector cells of the multiplier dimension");
  auto coeffs = haar_transform(f);
  coeffs.mean.setZero();
  for (int lvl = 0; lvl < f.resolution(); ++lvl) {
    auto& clvl = coeffs.levels[static_cast<std::size_t>(lvl)];
    const auto& alvl = a.levels[static_cast<std::size_t>(lvl)];
    for (Eigen::Index k = 0; k < clvl.cols(); ++k)
      clvl.col(k) = transpose ? Eigen::VectorXd(alvl[static_cast<std::size_t>(k)].transpose() *
                                                clvl.col(k))
                              : Eigen::VectorXd(alvl[static_cast<std::size_t>(k)] * clvl.col(k));
  }
  return haar_synthesize(coeffs);
}

/// Dyadic square function S(f)(x) = (sum_I |f_I|^2 / |I| chi_I(x))^{1/2}.
inline StepFunction square_function(const StepFunction& f) {
  auto coeffs = haar_transform(f);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(1);
  for (int lvl = 0; lvl < f.resolution(); ++lvl) {
    const auto& clvl = coeffs.levels[static_cast<std::size_t>(lvl)];
    Eigen::VectorXd next(acc.size() * 2);
    const double inv_len = std::pow(2.0, lvl);
    for (Eigen::Index k = 0; k < acc.size(); ++k) {
      const double add = clvl.col(k).squaredNorm() * inv_len;
      next(2 * k) = acc(k) + add;
      next(2 * k + 1) = acc(k) + add;
    }
    acc = std::move(next);
  }
  StepFunction out(f.resolution(), 1, 1);
  out.data() = acc.array().sqrt().matrix().transpose();
  return out;
}

/// Dyadic maximal function of a nonnegative scalar function; the sup includes
/// every level down to the cells themselves.
inline StepFunction dyadic_maximal(const StepFunction& g) {
  if (!g.is_scalar()) fail(errc::shape_mismatch, "dyadic_maximal expects scalar cells");
  for (Eigen::Index c = 0; c < g.cell_count(); ++c)
    if (g.scalar(c) < 0.0)
      fail(errc::invalid_input, "dyadic_maximal needs a nonnegative function");
  auto means = detail::dyadic_means(g);
  Eigen::VectorXd acc = Eigen::VectorXd::Constant(1, means[0](0, 0));
  for (int lvl = 1; lvl <= g.resolution(); ++lvl) {
    const auto& mlvl = means[static_cast<std::size_t>(lvl)];
    Eigen::VectorXd next(acc.size() * 2);
    for (Eigen::Index k = 0; k < mlvl.cols(); ++k)
      next(k) = std::max(acc(k / 2), mlvl(0, k));
    acc = std::move(next);
  }
  StepFunction out(g.resolution(), 1, 1);
  out.data() = acc.transpose();
  return out;
}

namespace detail {

/// Subtree coefficient energies E(I) = sum_{J in D(I)} e_J for a per-interval
/// nonnegative quantity e, returned per level.
inline std::vector<Eigen::VectorXd> subtree_energies(
    const std::vector<Eigen::VectorXd>& per_interval) {
  std::vector<Eigen::VectorXd> acc = per_interval;
  for (int lvl = static_cast<int>(acc.size()) - 2; lvl >= 0; --lvl) {
    auto& here = acc[static_cast<std::size_t>(lvl)];
    const auto& below = acc[static_cast<std::size_t>(lvl) + 1];
    for (Eigen::Index k = 0; k < here.size(); ++k)
      here(k) += below(2 * k) + below(2 * k + 1);
  }
  return acc;
}

}  // namespace detail

/// Carleson-sum seminorm of a scalar symbol:
/// sup_{level(I) <= depth} ((1/|I|) sum_{J in D(I)} |b_J|^2)^{1/2}.
inline double bmo_norm(const SymbolCoefficients& b, int depth) {
  if (depth > b.resolution) fail(errc::index_out_of_range, "bmo_norm depth exceeds resolution");
  if (!(b.rows == 1 && b.cols == 1)) fail(errc::shape_mismatch, "bmo_norm needs a scalar symbol");
  std::vector<Eigen::VectorXd> e(static_cast<std::size_t>(b.resolution));
  for (int lvl = 0; lvl < b.resolution; ++lvl)
    e[static_cast<std::size_t>(lvl)] =
        b.levels[static_cast<std::size_t>(lvl)].row(0).transpose().cwiseAbs2();
  auto energy = detail::subtree_energies(e);
  double sup = 0.0;
  for (int lvl = 0; lvl <= std::min(depth, b.resolution - 1); ++lvl) {
    const double inv_len = std::pow(2.0, lvl);
    for (Eigen::Index k = 0; k < energy[static_cast<std::size_t>(lvl)].size(); ++k)
      sup = std::max(sup, energy[static_cast<std::size_t>(lvl)](k) * inv_len);
  }
  return std::sqrt(sup);
}

/// Matrix Carleson seminorm: sup ((1/|I|) sum_{J in D(I)} ||B_J^* B_J||)^{1/2}.
inline double matrix_carleson_norm(const SymbolCoefficients& B, int depth) {
  if (depth > B.resolution)
    fail(errc::index_out_of_range, "matrix_carleson_norm depth exceeds resolution");
  std::vector<Eigen::VectorXd> e(static_cast<std::size_t>(B.resolution));
  for (int lvl = 0; lvl < B.resolution; ++lvl) {
    const auto& lev = B.levels[static_cast<std::size_t>(lvl)];
    Eigen::VectorXd row(lev.cols());
    for (Eigen::Index k = 0; k < lev.cols(); ++k) {
      Eigen::Map<const Eigen::MatrixXd> Bk(lev.data() + k * B.rows * B.cols, B.rows, B.cols);
      const double s = spectral_norm(Bk);
      row(k) = s * s;
    }
    e[static_cast<std::size_t>(lvl)] = std::move(row);
  }
  auto energy = detail::subtree_energies(e);
  double sup = 0.0;
  for (int lvl = 0; lvl <= std::min(depth, B.resolution - 1); ++lvl) {
    const double inv_len = std::pow(2.0, lvl);
    for (Eigen::Index k = 0; k < energy[static_cast<std::size_t>(lvl)].size(); ++k)
      sup = std::max(sup, energy[static_cast<std::size_t>(lvl)](k) * inv_len);
  }
  return std::sqrt(sup);
}

/// W^{1/p} pi_b (W^{-1/p} f).
inline StepFunction conjugated_paraproduct(const MatrixWeight& W, const Exponent& p,
                                           const SymbolCoefficients& b, const StepFunction& f) {
  StepFunction inner = paraproduct(b, multiply_pointwise(*W.power(p.dual_power()), f));
  return multiply_pointwise(*W.power(p.primal_power()), inner);
}

/// The composite variant: the reducing Haar multiplier applied after
/// pi_b (W^{-1/p} f). The multiplier may be prebuilt and reused.
inline StepFunction conjugated_paraproduct_m(const MatrixWeight& W, const Exponent& p,
                                             const SymbolCoefficients& b, const StepFunction& f,
                                             const MultiplierSpec& reducing_multiplier) {
  StepFunction inner = paraproduct(b, multiply_pointwise(*W.power(p.dual_power()), f));
  return haar_multiplier(reducing_multiplier, inner);
}

inline StepFunction conjugated_paraproduct_m(const MatrixWeight& W, const Exponent& p,
                                             const SymbolCoefficients& b, const StepFunction& f,
                                             ReducingBackend backend = ReducingBackend::auto_select,
                                             const ReducingOptions& opt = {}) {
  return conjugated_paraproduct_m(
      W, p, b, f,
      build_multiplier(W, p, MultiplierSpec::Provenance::reducing, backend, false, opt));
}

}  // namespace dyadlab
