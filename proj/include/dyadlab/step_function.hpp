#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dyadlab/errors.hpp"
#include "dyadlab/interval.hpp"

namespace dyadlab {

/// Function on [0,1) constant on each of the 2^N cells of the uniform dyadic
/// grid. Cell values are scalars (1x1), vectors (n x 1) or matrices (n x n),
/// stored flattened column-major as the columns of one Eigen matrix.
class StepFunction {
 public:
  StepFunction(int resolution, Eigen::Index rows, Eigen::Index cols)
      : resolution_(resolution), rows_(rows), cols_(cols) {
    if (resolution < 0 || resolution > 30)
      fail(errc::invalid_input, "resolution " + std::to_string(resolution) + " out of range");
    if (rows < 1 || cols < 1) fail(errc::invalid_input, "value shape must be at least 1x1");
    data_ = Eigen::MatrixXd::Zero(rows * cols, cell_count());
  }

  static StepFunction constant(int resolution, const Eigen::MatrixXd& value) {
    StepFunction f(resolution, value.rows(), value.cols());
    Eigen::Map<const Eigen::VectorXd> flat(value.data(), value.size());
    f.data_.colwise() = flat;
    return f;
  }

  static StepFunction constant_scalar(int resolution, double value) {
    return constant(resolution, Eigen::MatrixXd::Constant(1, 1, value));
  }

  static StepFunction from_scalars(int resolution, const Eigen::VectorXd& cells) {
    StepFunction f(resolution, 1, 1);
    if (cells.size() != f.cell_count()) fail(errc::shape_mismatch, "cell count mismatch");
    f.data_ = cells.transpose();
    return f;
  }

  int resolution() const { return resolution_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  Eigen::Index cell_count() const { return Eigen::Index{1} << resolution_; }
  bool is_scalar() const { return rows_ == 1 && cols_ == 1; }
  bool is_vector() const { return cols_ == 1; }

  bool same_shape(const StepFunction& other) const {
    return resolution_ == other.resolution_ && rows_ == other.rows_ && cols_ == other.cols_;
  }

  Eigen::Map<const Eigen::MatrixXd> cell(Eigen::Index c) const {
    return {data_.data() + c * rows_ * cols_, rows_, cols_};
  }
  Eigen::Map<Eigen::MatrixXd> cell(Eigen::Index c) {
    return {data_.data() + c * rows_ * cols_, rows_, cols_};
  }

  double scalar(Eigen::Index c) const { return data_(0, c); }

  void set_cell(Eigen::Index c, const Eigen::MatrixXd& value) {
    if (value.rows() != rows_ || value.cols() != cols_)
      fail(errc::shape_mismatch, "cell value shape mismatch");
    cell(c) = value;
  }

  /// Flattened storage, (rows*cols) x 2^N; column c is cell c.
  const Eigen::MatrixXd& data() const { return data_; }
  Eigen::MatrixXd& data() { return data_; }

  Eigen::MatrixXd mean_value() const {
    Eigen::VectorXd m = data_.rowwise().mean();
    return Eigen::Map<const Eigen::MatrixXd>(m.data(), rows_, cols_);
  }

  double max_abs() const { return data_.size() == 0 ? 0.0 : data_.cwiseAbs().maxCoeff(); }

  /// Average onto a coarser grid.
  StepFunction coarsened(int resolution) const {
    if (resolution > resolution_)
      fail(errc::invalid_input, "coarsened() target finer than source");
    StepFunction out(resolution, rows_, cols_);
    const Eigen::Index block = Eigen::Index{1} << (resolution_ - resolution);
    for (Eigen::Index c = 0; c < out.cell_count(); ++c)
      out.data_.col(c) = data_.middleCols(c * block, block).rowwise().mean();
    return out;
  }

  /// Replicate cells onto a finer grid (exact embedding).
  StepFunction refined(int resolution) const {
    if (resolution < resolution_) fail(errc::invalid_input, "refined() target coarser than source");
    StepFunction out(resolution, rows_, cols_);
    const Eigen::Index block = Eigen::Index{1} << (resolution - resolution_);
    for (Eigen::Index c = 0; c < cell_count(); ++c)
      out.data_.middleCols(c * block, block).colwise() = data_.col(c);
    return out;
  }

  StepFunction& operator+=(const StepFunction& other) {
    require_same_shape(other);
    data_ += other.data_;
    return *this;
  }
  StepFunction& operator-=(const StepFunction& other) {
    require_same_shape(other);
    data_ -= other.data_;
    return *this;
  }
  StepFunction& operator*=(double s) {
    data_ *= s;
    return *this;
  }

  friend StepFunction operator+(StepFunction a, const StepFunction& b) { return a += b; }
  friend StepFunction operator-(StepFunction a, const StepFunction& b) { return a -= b; }
  friend StepFunction operator*(StepFunction a, double s) { return a *= s; }
  friend StepFunction operator*(double s, StepFunction a) { return a *= s; }
  friend StepFunction operator-(StepFunction a) { return a *= -1.0; }

 private:
  void require_same_shape(const StepFunction& other) const {
    if (!same_shape(other)) fail(errc::shape_mismatch, "step function shapes differ");
  }

  int resolution_;
  Eigen::Index rows_, cols_;
  Eigen::MatrixXd data_;
};

/// Average of f over a dyadic interval (throws if I is finer than the grid).
inline Eigen::MatrixXd mean_on(const StepFunction& f, const DyadicInterval& I) {
  const auto begin = I.cell_begin(f.resolution());
  const auto count = I.cell_count(f.resolution());
  Eigen::VectorXd m = f.data().middleCols(begin, count).rowwise().mean();
  return Eigen::Map<const Eigen::MatrixXd>(m.data(), f.rows(), f.cols());
}

inline double mean_on_scalar(const StepFunction& f, const DyadicInterval& I) {
  return mean_on(f, I)(0, 0);
}

/// L^p norm on [0,1) with the Euclidean modulus per cell. Scalar or vector
/// valued input only.
inline double lp_norm(const StepFunction& f, double p) {
  if (p < 1.0) fail(errc::invalid_exponent, "lp_norm requires p >= 1");
  if (!f.is_vector()) fail(errc::shape_mismatch, "lp_norm expects scalar or vector cells");
  const double cell_measure = std::ldexp(1.0, -f.resolution());
  double acc = 0.0;
  for (Eigen::Index c = 0; c < f.cell_count(); ++c)
    acc += std::pow(f.data().col(c).norm(), p);
  return std::pow(acc * cell_measure, 1.0 / p);
}

inline double sup_diff(const StepFunction& a, const StepFunction& b) {
  if (!a.same_shape(b)) fail(errc::shape_mismatch, "sup_diff shapes differ");
  return (a.data() - b.data()).cwiseAbs().maxCoeff();
}

/// Sums of cell values over every dyadic interval: level ell of the result is
/// (rows*cols) x 2^ell, column k holding the sum of the cells under (ell, k).
/// Level N equals the raw cell data.
inline std::vector<Eigen::MatrixXd> dyadic_sums(const StepFunction& f) {
  std::vector<Eigen::MatrixXd> sums(static_cast<std::size_t>(f.resolution()) + 1);
  sums[static_cast<std::size_t>(f.resolution())] = f.data();
  for (int lvl = f.resolution() - 1; lvl >= 0; --lvl) {
    const auto& fine = sums[static_cast<std::size_t>(lvl) + 1];
    Eigen::MatrixXd coarse(fine.rows(), fine.cols() / 2);
    for (Eigen::Index k = 0; k < coarse.cols(); ++k)
      coarse.col(k) = fine.col(2 * k) + fine.col(2 * k + 1);
    sums[static_cast<std::size_t>(lvl)] = std::move(coarse);
  }
  return sums;
}

/// Scalar variant working directly on a vector of per-cell values.
inline std::vector<Eigen::VectorXd> dyadic_scalar_sums(const Eigen::VectorXd& cells) {
  int n = 0;
  while ((Eigen::Index{1} << n) < cells.size()) ++n;
  if ((Eigen::Index{1} << n) != cells.size())
    fail(errc::invalid_input, "cell count is not a power of two");
  std::vector<Eigen::VectorXd> sums(static_cast<std::size_t>(n) + 1);
  sums[static_cast<std::size_t>(n)] = cells;
  for (int lvl = n - 1; lvl >= 0; --lvl) {
    const auto& fine = sums[static_cast<std::size_t>(lvl) + 1];
    Eigen::VectorXd coarse(fine.size() / 2);
    for (Eigen::Index k = 0; k < coarse.size(); ++k)
      coarse(k) = fine(2 * k) + fine(2 * k + 1);
    sums[static_cast<std::size_t>(lvl)] = std::move(coarse);
  }
  return sums;
}

/// CSV layout: one header line `N=<res>,rows=<r>,cols=<c>`, then one row per
/// cell with the value entries flattened row-major.
inline void write_csv(const StepFunction& f, std::ostream& os) {
  os << "N=" << f.resolution() << ",rows=" << f.rows() << ",cols=" << f.cols() << "\n";
  os.precision(17);
  for (Eigen::Index c = 0; c < f.cell_count(); ++c) {
    auto v = f.cell(c);
    bool first = true;
    for (Eigen::Index i = 0; i < v.rows(); ++i)
      for (Eigen::Index j = 0; j < v.cols(); ++j) {
        if (!first) os << ",";
        os << v(i, j);
        first = false;
      }
    os << "\n";
  }
}

inline StepFunction read_step_function_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) fail(errc::io_error, "empty step function stream");
  int res = -1;
  Eigen::Index rows = 0, cols = 0;
  {
    std::istringstream hs(header);
    std::string field;
    while (std::getline(hs, field, ',')) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) fail(errc::io_error, "malformed header field: " + field);
      const std::string key = field.substr(0, eq);
      const long long value = std::stoll(field.substr(eq + 1));
      if (key == "N")
        res = static_cast<int>(value);
      else if (key == "rows")
        rows = value;
      else if (key == "cols")
        cols = value;
      else
        fail(errc::io_error, "unknown header key: " + key);
    }
  }
  if (res < 0 || rows < 1 || cols < 1) fail(errc::io_error, "incomplete step function header");
  StepFunction f(res, rows, cols);
  std::string line;
  for (Eigen::Index c = 0; c < f.cell_count(); ++c) {
    if (!std::getline(is, line)) fail(errc::io_error, "truncated step function data");
    std::istringstream ls(line);
    std::string field;
    auto v = f.cell(c);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!std::getline(ls, field, ',')) fail(errc::io_error, "short row in step function data");
        v(i, j) = std::stod(field);
      }
  }
  return f;
}

}  // namespace dyadlab
