#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fraclab/errors.hpp"

namespace fraclab {

/// Hurst index, strictly inside (0, 1).
class HurstIndex {
public:
  explicit HurstIndex(double value) : value_(value) {
    FRACLAB_REQUIRE(std::isfinite(value) && value > 0.0 && value < 1.0,
                    "Hurst index must lie in (0,1)");
  }
  double value() const noexcept { return value_; }
  friend bool operator==(HurstIndex a, HurstIndex b) { return a.value_ == b.value_; }

private:
  double value_;
};

/// Uniform grid t0 < t1 with n >= 2 points.
class TimeGrid {
public:
  TimeGrid(double t0, double t1, std::size_t n) : t0_(t0), t1_(t1), n_(n) {
    FRACLAB_REQUIRE(std::isfinite(t0) && std::isfinite(t1), "grid bounds must be finite");
    FRACLAB_REQUIRE(t0 >= 0.0, "grid must start at t0 >= 0");
    FRACLAB_REQUIRE(t1 > t0, "grid requires t1 > t0");
    FRACLAB_REQUIRE(n >= 2, "grid requires at least two points");
  }

  double t0() const noexcept { return t0_; }
  double t1() const noexcept { return t1_; }
  std::size_t size() const noexcept { return n_; }
  double step() const noexcept { return (t1_ - t0_) / static_cast<double>(n_ - 1); }

  double operator[](std::size_t k) const noexcept {
    if (k + 1 == n_) return t1_;
    return t0_ + static_cast<double>(k) * step();
  }

  /// Index of the grid point nearest to t (clamped to the grid).
  std::size_t nearest(double t) const noexcept {
    const double x = std::round((t - t0_) / step());
    if (x <= 0.0) return 0;
    if (x >= static_cast<double>(n_ - 1)) return n_ - 1;
    return static_cast<std::size_t>(x);
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.t0_ == b.t0_ && a.t1_ == b.t1_ && a.n_ == b.n_;
  }

private:
  double t0_;
  double t1_;
  std::size_t n_;
};

/// Dense row-major matrix used for d x n path values.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace fraclab
