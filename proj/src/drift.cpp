#include "fraclab/drift.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include "fraclab/stats.hpp"
#include "fraclab/stochastic_paths.hpp"

namespace fraclab::drift {
namespace {

void require_weierstrass_domain(double tau, double theta) {
  FRACLAB_REQUIRE(std::isfinite(tau) && std::isfinite(theta), "tau and theta must be finite");
  FRACLAB_REQUIRE(tau > 0.0 && tau < 1.0, "Weierstrass requires 0 < tau < 1");
  FRACLAB_REQUIRE(theta > 1.0, "Weierstrass requires theta > 1");
}

constexpr std::size_t kTrendSamples = 8;

bool is_integer(double x) { return x == std::floor(x) && x < 9.0e15; }

// Realizations are drawn once per key; later readers share the matrix.
using CacheKey = std::tuple<double, std::size_t, std::uint64_t, double, double, std::size_t>;

std::shared_ptr<const Matrix> cached_realization(const DriftSpec& spec, const TimeGrid& grid) {
  static std::mutex mutex;
  static std::map<CacheKey, std::shared_ptr<const Matrix>> cache;
  const CacheKey key{spec.alpha, spec.dim, spec.seed, grid.t0(), grid.t1(), grid.size()};
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto path = paths::sample_fbm(HurstIndex(spec.alpha), spec.dim, grid, spec.seed);
  auto values = std::make_shared<const Matrix>(std::move(path.values));
  cache.emplace(key, values);
  return values;
}

const char* kind_name(DriftKind kind) {
  switch (kind) {
    case DriftKind::zero: return "zero";
    case DriftKind::weierstrass: return "weierstrass";
    case DriftKind::weierstrass_diagonal: return "weierstrass_diagonal";
    case DriftKind::fbm_realization: return "fbm_realization";
    case DriftKind::tabulated: return "tabulated";
  }
  return "zero";
}

DriftKind kind_from_name(const std::string& name) {
  for (auto k : {DriftKind::zero, DriftKind::weierstrass, DriftKind::weierstrass_diagonal,
                 DriftKind::fbm_realization, DriftKind::tabulated}) {
    if (name == kind_name(k)) return k;
  }
  throw DomainError("unknown drift kind: " + name);
}

}  // namespace

DriftSpec DriftSpec::zero(std::size_t dim) {
  DriftSpec s;
  s.dim = dim;
  s.validate();
  return s;
}

DriftSpec DriftSpec::weierstrass(double tau, double theta, double tol) {
  DriftSpec s;
  s.kind = DriftKind::weierstrass;
  s.tau = tau;
  s.theta = theta;
  s.tol = tol;
  s.validate();
  return s;
}

DriftSpec DriftSpec::weierstrass_diagonal(std::size_t dim, double tau, double theta, double tol) {
  DriftSpec s = weierstrass(tau, theta, tol);
  s.kind = DriftKind::weierstrass_diagonal;
  s.dim = dim;
  s.validate();
  return s;
}

DriftSpec DriftSpec::fbm_realization(HurstIndex alpha, std::size_t dim, std::uint64_t seed) {
  DriftSpec s;
  s.kind = DriftKind::fbm_realization;
  s.alpha = alpha.value();
  s.dim = dim;
  s.seed = seed;
  s.validate();
  return s;
}

DriftSpec DriftSpec::tabulated(TimeGrid grid, Matrix values) {
  DriftSpec s;
  s.kind = DriftKind::tabulated;
  s.dim = values.rows();
  s.grid = grid;
  s.values = std::move(values);
  s.validate();
  return s;
}

void DriftSpec::validate() const {
  FRACLAB_REQUIRE(dim >= 1, "drift dimension must be positive");
  switch (kind) {
    case DriftKind::zero: break;
    case DriftKind::weierstrass:
    case DriftKind::weierstrass_diagonal:
      require_weierstrass_domain(tau, theta);
      FRACLAB_REQUIRE(tau * theta > 1.0, "Weierstrass drift requires tau * theta > 1");
      FRACLAB_REQUIRE(tol > 0.0, "truncation tolerance must be positive");
      if (kind == DriftKind::weierstrass) FRACLAB_REQUIRE(dim == 1, "scalar Weierstrass has dim 1");
      break;
    case DriftKind::fbm_realization: HurstIndex{alpha}; break;
    case DriftKind::tabulated:
      if (!grid) throw ShapeError("tabulated drift needs a grid");
      if (values.rows() != dim || values.cols() != grid->size()) {
        throw ShapeError("tabulated values must be dim x grid size");
      }
      break;
  }
}

bool DriftSpec::is_analytic() const noexcept {
  return kind == DriftKind::zero || kind == DriftKind::weierstrass ||
         kind == DriftKind::weierstrass_diagonal;
}

std::optional<double> DriftSpec::holder_exponent() const {
  switch (kind) {
    case DriftKind::weierstrass:
    case DriftKind::weierstrass_diagonal: return -std::log(tau) / std::log(theta);
    case DriftKind::fbm_realization: return alpha;
    default: return std::nullopt;
  }
}

std::size_t weierstrass_terms(double tau, double tol) {
  FRACLAB_REQUIRE(tau > 0.0 && tau < 1.0, "Weierstrass requires 0 < tau < 1");
  FRACLAB_REQUIRE(tol > 0.0, "truncation tolerance must be positive");
  // Smallest N with tau^{N+1} / (1 - tau) <= tol.
  std::size_t n = 0;
  double tail = tau / (1.0 - tau);
  while (tail > tol) {
    tail *= tau;
    ++n;
  }
  return n + 1;
}

double weierstrass_eval(double tau, double theta, double t, double tol) {
  require_weierstrass_domain(tau, theta);
  FRACLAB_REQUIRE(std::isfinite(t), "t must be finite");
  const std::size_t terms = weierstrass_terms(tau, tol);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double sum = 0.0;
  double weight = 1.0;
  if (is_integer(theta)) {
    // theta^n t mod 1 by iterated reduction; exact for theta a power of two.
    double u = t - std::floor(t);
    for (std::size_t n = 0; n < terms; ++n) {
      sum += weight * std::cos(two_pi * u);
      weight *= tau;
      u = theta * u;
      u -= std::floor(u);
    }
  } else {
    for (std::size_t n = 0; n < terms; ++n) {
      const double arg = std::pow(theta, static_cast<double>(n)) * t;
      sum += weight * std::cos(two_pi * (arg - std::floor(arg)));
      weight *= tau;
    }
  }
  return sum;
}

void eval_drift_at(const DriftSpec& spec, double t, std::span<double> out) {
  if (out.size() != spec.dim) throw ShapeError("output size must equal the drift dimension");
  switch (spec.kind) {
    case DriftKind::zero: std::fill(out.begin(), out.end(), 0.0); return;
    case DriftKind::weierstrass:
    case DriftKind::weierstrass_diagonal:
      std::fill(out.begin(), out.end(), weierstrass_eval(spec.tau, spec.theta, t, spec.tol));
      return;
    default: throw DomainError("drift kind has no closed form for pointwise evaluation");
  }
}

Matrix eval_drift(const DriftSpec& spec, const TimeGrid& grid) {
  spec.validate();
  const std::size_t n = grid.size();
  switch (spec.kind) {
    case DriftKind::zero: return Matrix(spec.dim, n);
    case DriftKind::weierstrass:
    case DriftKind::weierstrass_diagonal: {
      Matrix out(spec.dim, n);
      auto first = out.row(0);
      for (std::size_t k = 0; k < n; ++k) {
        first[k] = weierstrass_eval(spec.tau, spec.theta, grid[k], spec.tol);
      }
      for (std::size_t c = 1; c < spec.dim; ++c) {
        std::copy(first.begin(), first.end(), out.row(c).begin());
      }
      return out;
    }
    case DriftKind::fbm_realization: return *cached_realization(spec, grid);
    case DriftKind::tabulated:
      if (!(*spec.grid == grid)) throw ShapeError("tabulated drift grid does not match");
      return spec.values;
  }
  return Matrix(spec.dim, n);
}

HolderReport holder_diagnose(const Matrix& values, const TimeGrid& grid, double alpha,
                             const HolderOptions& options) {
  const std::size_t n = grid.size();
  if (values.cols() != n) throw ShapeError("values must have one column per grid point");
  FRACLAB_REQUIRE(values.rows() >= 1, "values need at least one row");
  FRACLAB_REQUIRE(n >= 16, "Hölder diagnosis needs at least 16 grid points");
  FRACLAB_REQUIRE(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
  const std::size_t d = values.rows();
  const double dt = grid.step();
  const double span = grid.t1() - grid.t0();

  HolderReport report;
  report.alpha = alpha;

  // Trends use medians so they do not drift with the number of pairs or windows per scale.
  std::vector<double> trend_x_upper, trend_y_upper, trend_x_reverse, trend_y_reverse;
  auto median = [](std::vector<double>& v) {
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
  };

  // Upper constant over pairs at dyadic lags.
  std::vector<double> increments;
  for (std::size_t lag = 1; lag < n; lag *= 2) {
    increments.clear();
    for (std::size_t k = 0; k + lag < n; ++k) {
      double sq = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = values(c, k + lag) - values(c, k);
        sq += diff * diff;
      }
      increments.push_back(std::sqrt(sq));
    }
    const double h = static_cast<double>(lag) * dt;
    const double scale = std::pow(h, alpha);
    report.upper_by_scale.push_back(*std::max_element(increments.begin(), increments.end()) /
                                    scale);
    if (increments.size() >= kTrendSamples) {
      const double m = median(increments);
      if (m > 0.0) {
        trend_x_upper.push_back(std::log(h));
        trend_y_upper.push_back(std::log(m / scale));
      }
    }
  }
  report.constant_upper = *std::max_element(report.upper_by_scale.begin(),
                                            report.upper_by_scale.end());

  // Reverse constant over disjoint dyadic windows no shorter than min_window_points steps.
  const double min_window = static_cast<double>(options.min_window_points) * dt;
  for (std::size_t j = options.level_min; j <= options.level_max; ++j) {
    const double width = span * std::ldexp(1.0, -static_cast<int>(j));
    if (width < min_window * (1.0 - 1e-12)) break;
    const std::size_t windows = std::size_t{1} << j;
    std::vector<double> ratios;
    ratios.reserve(windows);
    for (std::size_t w = 0; w < windows; ++w) {
      const double a = grid.t0() + static_cast<double>(w) * width;
      const std::size_t lo = grid.nearest(a);
      const std::size_t hi = std::min(grid.nearest(a + width), n - 1);
      double osc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const auto row = values.row(c);
        const auto [mn, mx] = std::minmax_element(row.begin() + static_cast<std::ptrdiff_t>(lo),
                                                  row.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
        osc = std::max(osc, *mx - *mn);
      }
      ratios.push_back(osc / std::pow(width, alpha));
    }
    report.scales_used.push_back(width);
    report.reverse_by_scale.push_back(*std::min_element(ratios.begin(), ratios.end()));
    if (windows >= kTrendSamples) {
      const double m = median(ratios);
      if (m > 0.0) {
        trend_x_reverse.push_back(std::log(width));
        trend_y_reverse.push_back(std::log(m));
      }
    }
  }
  report.constant_reverse =
      report.reverse_by_scale.empty()
          ? 0.0
          : *std::min_element(report.reverse_by_scale.begin(), report.reverse_by_scale.end());

  auto slope = [](const std::vector<double>& x, const std::vector<double>& y) {
    return x.size() >= 2 ? stats::fit_line(x, y).slope : 0.0;
  };
  report.upper_trend = slope(trend_x_upper, trend_y_upper);
  report.reverse_trend = slope(trend_x_reverse, trend_y_reverse);

  report.pass_holder = report.constant_upper <= options.upper_threshold &&
                       report.upper_trend >= -options.trend_tol;
  report.pass_reverse = report.constant_reverse >= options.reverse_threshold &&
                        report.reverse_trend <= options.trend_tol;
  return report;
}

nlohmann::json to_json(const DriftSpec& spec) {
  nlohmann::json doc{{"kind", kind_name(spec.kind)}, {"d", spec.dim}};
  switch (spec.kind) {
    case DriftKind::zero: break;
    case DriftKind::weierstrass:
    case DriftKind::weierstrass_diagonal:
      doc["tau"] = spec.tau;
      doc["theta"] = spec.theta;
      doc["tol"] = spec.tol;
      break;
    case DriftKind::fbm_realization:
      doc["alpha"] = spec.alpha;
      doc["seed"] = spec.seed;
      break;
    case DriftKind::tabulated: {
      doc["grid"] = {{"t0", spec.grid->t0()}, {"t1", spec.grid->t1()}, {"n", spec.grid->size()}};
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t c = 0; c < spec.dim; ++c) {
        auto r = spec.values.row(c);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
      }
      doc["values"] = std::move(rows);
      break;
    }
  }
  return doc;
}

DriftSpec drift_from_json(const nlohmann::json& doc) {
  try {
    DriftSpec s;
    s.kind = kind_from_name(doc.at("kind").get<std::string>());
    s.dim = doc.value("d", std::size_t{1});
    s.tau = doc.value("tau", 0.0);
    s.theta = doc.value("theta", 0.0);
    s.tol = doc.value("tol", 1e-12);
    s.alpha = doc.value("alpha", 0.0);
    s.seed = doc.value("seed", std::uint64_t{0});
    if (s.kind == DriftKind::tabulated) {
      const auto& g = doc.at("grid");
      s.grid = TimeGrid(g.at("t0").get<double>(), g.at("t1").get<double>(),
                        g.at("n").get<std::size_t>());
      const auto& rows = doc.at("values");
      s.dim = rows.size();
      s.values = Matrix(s.dim, s.grid->size());
      for (std::size_t c = 0; c < s.dim; ++c) {
        const auto r = rows.at(c).get<std::vector<double>>();
        if (r.size() != s.grid->size()) throw ShapeError("tabulated row length mismatch");
        std::copy(r.begin(), r.end(), s.values.row(c).begin());
      }
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("invalid drift spec: ") + e.what());
  }
}

nlohmann::json to_json(const HolderReport& r) {
  return {{"alpha", r.alpha},
          {"constant_upper", r.constant_upper},
          {"constant_reverse", r.constant_reverse},
          {"pass_holder", r.pass_holder},
          {"pass_reverse", r.pass_reverse},
          {"scales_used", r.scales_used},
          {"upper_by_scale", r.upper_by_scale},
          {"reverse_by_scale", r.reverse_by_scale},
          {"upper_trend", r.upper_trend},
          {"reverse_trend", r.reverse_trend}};
}

}  // namespace fraclab::drift
