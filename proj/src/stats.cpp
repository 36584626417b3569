#include "fraclab/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/beta.hpp>
#include <cmath>

#include "fraclab/errors.hpp"

namespace fraclab::stats {

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("fit_line needs equal-length inputs");
  FRACLAB_REQUIRE(x.size() >= 2, "fit_line needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  FRACLAB_REQUIRE(sxx > 0.0, "fit_line needs distinct abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return fit;
}

Interval wilson(std::uint64_t hits, std::uint64_t trials, double z) {
  FRACLAB_REQUIRE(trials > 0 && hits <= trials, "wilson needs 0 <= hits <= trials, trials > 0");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  // Clamp so the interval always covers p despite rounding.
  return {std::min(p, std::max(0.0, centre - half)), std::max(p, std::min(1.0, centre + half))};
}

Interval clopper_pearson(std::uint64_t hits, std::uint64_t trials, double alpha) {
  FRACLAB_REQUIRE(trials > 0 && hits <= trials, "clopper_pearson needs 0 <= hits <= trials");
  FRACLAB_REQUIRE(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
  const double k = static_cast<double>(hits);
  const double n = static_cast<double>(trials);
  Interval out;
  out.low = hits == 0 ? 0.0
                      : boost::math::quantile(boost::math::beta_distribution<>(k, n - k + 1.0),
                                              alpha / 2.0);
  out.high = hits == trials
                 ? 1.0
                 : boost::math::quantile(boost::math::beta_distribution<>(k + 1.0, n - k),
                                         1.0 - alpha / 2.0);
  return out;
}

}  // namespace fraclab::stats
