#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dyadlab/errors.hpp"
#include "dyadlab/rng.hpp"

namespace dyadlab {

namespace detail {

inline double fractional(double x) { return x - std::floor(x); }

/// Van der Corput radical inverse in the given base.
inline double radical_inverse(std::uint64_t k, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv, x = 0.0;
  while (k > 0) {
    x += static_cast<double>(k % base) * f;
    k /= base;
    f *= inv;
  }
  return x;
}

}  // namespace detail

/// Deterministic low-discrepancy directions on the unit sphere of R^n, with a
/// seeded phase so distinct configurations get distinct (but reproducible)
/// sequences. n=2 uses a golden-angle sequence, n=3 a Fibonacci spiral,
/// higher dimensions a Halton-driven Box-Muller map.
inline std::vector<Eigen::VectorXd> sphere_directions(Eigen::Index n, int count,
                                                      std::uint64_t seed) {
  if (n < 1 || count < 1) fail(errc::invalid_input, "sphere_directions needs n >= 1, count >= 1");
  std::vector<Eigen::VectorXd> dirs;
  dirs.reserve(static_cast<std::size_t>(count));
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  Rng phase_rng(derive_seed(seed, 0x5f3759df));
  const double phase = phase_rng.uniform();

  if (n == 1) {
    for (int k = 0; k < count; ++k) {
      Eigen::VectorXd v(1);
      v(0) = (k % 2 == 0) ? 1.0 : -1.0;
      dirs.push_back(v);
    }
    return dirs;
  }
  if (n == 2) {
    for (int k = 0; k < count; ++k) {
      const double theta = 2.0 * M_PI * detail::fractional(k * golden + phase);
      Eigen::VectorXd v(2);
      v << std::cos(theta), std::sin(theta);
      dirs.push_back(v);
    }
    return dirs;
  }
  if (n == 3) {
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double theta = 2.0 * M_PI * detail::fractional(k * golden + phase);
      Eigen::VectorXd v(3);
      v << r * std::cos(theta), r * std::sin(theta), z;
      dirs.push_back(v);
    }
    return dirs;
  }

  static constexpr std::uint64_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
  std::vector<double> offsets(static_cast<std::size_t>(n));
  for (auto& o : offsets) o = phase_rng.uniform();
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd v(n);
    for (Eigen::Index d = 0; d + 1 < n; d += 2) {
      const double u1 = std::max(
          1e-12, detail::fractional(detail::radical_inverse(static_cast<std::uint64_t>(k) + 1,
                                                            primes[d % 8]) +
                                    offsets[static_cast<std::size_t>(d)]));
      const double u2 = detail::fractional(
          detail::radical_inverse(static_cast<std::uint64_t>(k) + 1, primes[(d + 1) % 8]) +
          offsets[static_cast<std::size_t>(d) + 1]);
      const double r = std::sqrt(-2.0 * std::log(u1));
      v(d) = r * std::cos(2.0 * M_PI * u2);
      v(d + 1) = r * std::sin(2.0 * M_PI * u2);
    }
    if (n % 2 == 1) {
      const double u1 = std::max(
          1e-12, detail::fractional(detail::radical_inverse(static_cast<std::uint64_t>(k) + 1,
                                                            primes[(n - 1) % 8]) +
                                    offsets[static_cast<std::size_t>(n) - 1]));
      v(n - 1) = std::sqrt(-2.0 * std::log(u1)) *
                 std::cos(2.0 * M_PI * detail::fractional(u1 * 977.0 + phase));
    }
    const double norm = v.norm();
    dirs.push_back(norm > 1e-12 ? Eigen::VectorXd(v / norm)
                                : Eigen::VectorXd(Eigen::VectorXd::Unit(n, 0)));
  }
  return dirs;
}

/// Default direction counts for the ellipsoid backend.
inline int default_direction_count(Eigen::Index n) {
  if (n <= 2) return 256;
  if (n == 3) return 2048;
  return 4096;
}

}  // namespace dyadlab
