#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "dyadlab/step_function.hpp"

namespace testutil {

// Independent oracle for inner products: plain cell summation against the
// Lebesgue measure, no Haar machinery involved.
inline double inner_product(const dyadlab::StepFunction& a, const dyadlab::StepFunction& b) {
  const double cell = std::ldexp(1.0, -a.resolution());
  double acc = 0.0;
  for (Eigen::Index c = 0; c < a.cell_count(); ++c)
    acc += (a.cell(c).array() * b.cell(c).array()).sum();
  return acc * cell;
}

inline double rel_err(double got, double want) {
  const double scale = std::max(1.0, std::abs(want));
  return std::abs(got - want) / scale;
}

}  // namespace testutil
