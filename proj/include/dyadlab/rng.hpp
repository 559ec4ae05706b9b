#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

#include "dyadlab/step_function.hpp"

namespace dyadlab {

/// Deterministic stream splitting (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// mt19937_64 with a self-contained Box-Muller normal, so random streams are
/// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) { return normal_matrix(n, 1); }

  /// Uniform point on the unit sphere in R^n.
  Eigen::VectorXd unit_vector(Eigen::Index n) {
    Eigen::VectorXd v;
    do {
      v = normal_vector(n);
    } while (v.norm() < 1e-12);
    return v / v.norm();
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Cellwise iid standard normal entries; optionally mean-removed.
inline StepFunction random_step_function(int resolution, Eigen::Index rows, Eigen::Index cols,
                                         Rng& rng, bool remove_mean = false) {
  StepFunction f(resolution, rows, cols);
  for (Eigen::Index c = 0; c < f.cell_count(); ++c) f.cell(c) = rng.normal_matrix(rows, cols);
  if (remove_mean) {
    const Eigen::MatrixXd m = f.mean_value();
    for (Eigen::Index c = 0; c < f.cell_count(); ++c) f.cell(c) -= m;
  }
  return f;
}

}  // namespace dyadlab
