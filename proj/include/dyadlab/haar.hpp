#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "dyadlab/errors.hpp"
#include "dyadlab/interval.hpp"
#include "dyadlab/step_function.hpp"

namespace dyadlab {

/// Haar coefficients of a step function at resolution N: the mean over [0,1)
/// plus one coefficient per dyadic interval of level 0..N-1, stored densely
/// per level (column k of level ell belongs to interval (ell, k)).
struct HaarCoefficients {
  int resolution = 0;
  Eigen::Index rows = 1, cols = 1;
  Eigen::MatrixXd mean;                   // rows x cols
  std::vector<Eigen::MatrixXd> levels;    // level ell: (rows*cols) x 2^ell

  static HaarCoefficients zero(int resolution, Eigen::Index rows, Eigen::Index cols) {
    HaarCoefficients c;
    c.resolution = resolution;
    c.rows = rows;
    c.cols = cols;
    c.mean = Eigen::MatrixXd::Zero(rows, cols);
    c.levels.resize(static_cast<std::size_t>(resolution));
    for (int lvl = 0; lvl < resolution; ++lvl)
      c.levels[static_cast<std::size_t>(lvl)] =
          Eigen::MatrixXd::Zero(rows * cols, Eigen::Index{1} << lvl);
    return c;
  }

  Eigen::Map<const Eigen::MatrixXd> coeff(const DyadicInterval& I) const {
    check(I);
    return {levels[static_cast<std::size_t>(I.level)].data() + I.index * rows * cols, rows, cols};
  }
  Eigen::Map<Eigen::MatrixXd> coeff(const DyadicInterval& I) {
    check(I);
    return {levels[static_cast<std::size_t>(I.level)].data() + I.index * rows * cols, rows, cols};
  }

  double coeff_scalar(const DyadicInterval& I) const { return coeff(I)(0, 0); }

 private:
  void check(const DyadicInterval& I) const {
    if (I.level >= resolution)
      fail(errc::index_out_of_range,
           "no Haar coefficient at level " + std::to_string(I.level) + " for resolution " +
               std::to_string(resolution));
  }
};

/// Symbols of paraproducts share the coefficient layout (the mean is unused).
using SymbolCoefficients = HaarCoefficients;

/// The L^2-normalized Haar function of I: -|I|^{-1/2} on the left half,
/// +|I|^{-1/2} on the right half, 0 elsewhere.
inline StepFunction haar_function(const DyadicInterval& I, int resolution) {
  if (I.level >= resolution)
    fail(errc::resolution_too_coarse, "haar_function needs level(I) < resolution");
  StepFunction h(resolution, 1, 1);
  const double height = std::sqrt(static_cast<double>(std::int64_t{1} << I.level));
  const auto begin = I.cell_begin(resolution);
  const auto count = I.cell_count(resolution);
  h.data().middleCols(begin, count / 2).setConstant(-height);
  h.data().middleCols(begin + count / 2, count / 2).setConstant(height);
  return h;
}

inline HaarCoefficients haar_transform(const StepFunction& f) {
  const int n = f.resolution();
  auto sums = dyadic_sums(f);
  HaarCoefficients c = HaarCoefficients::zero(n, f.rows(), f.cols());
  const double cell_measure = std::ldexp(1.0, -n);
  Eigen::VectorXd m = sums[0].col(0) * cell_measure;
  c.mean = Eigen::Map<const Eigen::MatrixXd>(m.data(), f.rows(), f.cols());
  for (int lvl = 0; lvl < n; ++lvl) {
    const auto& half = sums[static_cast<std::size_t>(lvl) + 1];
    auto& out = c.levels[static_cast<std::size_t>(lvl)];
    const double scale = cell_measure * std::pow(2.0, 0.5 * lvl);
    for (Eigen::Index k = 0; k < out.cols(); ++k)
      out.col(k) = (half.col(2 * k + 1) - half.col(2 * k)) * scale;
  }
  return c;
}

inline StepFunction haar_synthesize(const HaarCoefficients& c) {
  const int n = c.resolution;
  const Eigen::Index vals = c.rows * c.cols;
  Eigen::MatrixXd current(vals, 1);
  current.col(0) = Eigen::Map<const Eigen::VectorXd>(c.mean.data(), vals);
  for (int lvl = 0; lvl < n; ++lvl) {
    const auto& coeffs = c.levels[static_cast<std::size_t>(lvl)];
    const double height = std::pow(2.0, 0.5 * lvl);
    Eigen::MatrixXd next(vals, current.cols() * 2);
    for (Eigen::Index k = 0; k < current.cols(); ++k) {
      next.col(2 * k) = current.col(k) - coeffs.col(k) * height;
      next.col(2 * k + 1) = current.col(k) + coeffs.col(k) * height;
    }
    current = std::move(next);
  }
  StepFunction f(n, c.rows, c.cols);
  f.data() = std::move(current);
  return f;
}

}  // namespace dyadlab
