#pragma once

#include <cstdint>
#include <span>

namespace fraclab::stats {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;  // 0 when fewer than 3 points
};

/// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

/// 95% Wilson score interval; with z = 1.959963984540054.
Interval wilson(std::uint64_t hits, std::uint64_t trials, double z = 1.959963984540054);

/// Exact (Clopper-Pearson) interval at confidence 1 - alpha.
Interval clopper_pearson(std::uint64_t hits, std::uint64_t trials, double alpha = 0.05);

}  // namespace fraclab::stats
