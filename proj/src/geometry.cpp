#include "fraclab/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "fraclab/parallel.hpp"
#include "fraclab/stats.hpp"

namespace fraclab::geometry {
namespace {

constexpr std::size_t kMaxPointDim = 8;
using CellKey = std::array<std::int64_t, kMaxPointDim>;

double euclid(std::span<const double> a, std::span<const double> b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sq);
}

CellKey key_of(std::span<const double> p, const std::vector<double>& extents) {
  CellKey key{};
  for (std::size_t i = 0; i < p.size(); ++i) {
    key[i] = static_cast<std::int64_t>(std::floor(p[i] / extents[i]));
  }
  return key;
}

// Cells visited by the points in [begin, end) and, for joined points, by the
// segments leaving them. Segments are walked at half-cell steps per axis.
std::vector<CellKey> collect_keys(const PointCloud& cloud, std::size_t begin, std::size_t end,
                                  const std::vector<double>& extents) {
  const std::size_t k = cloud.metric.point_dim();
  std::vector<CellKey> keys;
  std::vector<double> buf(k);
  for (std::size_t i = begin; i < end; ++i) {
    const auto p = cloud.point(i);
    CellKey last = key_of(p, extents);
    keys.push_back(last);
    if (cloud.joined.empty() || cloud.joined[i] == 0 || i + 1 >= cloud.size()) continue;
    const auto q = cloud.point(i + 1);
    double steps = 0.0;
    for (std::size_t c = 0; c < k; ++c) steps = std::max(steps, std::abs(q[c] - p[c]) / extents[c]);
    const auto m = static_cast<std::size_t>(std::ceil(2.0 * steps));
    for (std::size_t j = 1; j < m; ++j) {
      const double s = static_cast<double>(j) / static_cast<double>(m);
      for (std::size_t c = 0; c < k; ++c) buf[c] = p[c] + s * (q[c] - p[c]);
      const CellKey key = key_of(buf, extents);
      if (key != last) {
        keys.push_back(key);
        last = key;
      }
    }
  }
  return keys;
}

const char* metric_kind_name(MetricKind k) {
  return k == MetricKind::euclidean ? "euclidean" : "parabolic";
}

}  // namespace

MetricSpec MetricSpec::euclidean(std::size_t d) {
  MetricSpec m{MetricKind::euclidean, d, 1.0};
  m.validate();
  return m;
}

MetricSpec MetricSpec::parabolic(double hurst, std::size_t d) {
  MetricSpec m{MetricKind::parabolic, d, hurst};
  m.validate();
  return m;
}

void MetricSpec::validate() const {
  FRACLAB_REQUIRE(d >= 1, "metric dimension must be positive");
  FRACLAB_REQUIRE(point_dim() <= kMaxPointDim, "metric dimension exceeds the supported maximum");
  if (kind == MetricKind::parabolic) {
    FRACLAB_REQUIRE(std::isfinite(hurst) && hurst > 0.0 && hurst <= 1.0,
                    "parabolic metric needs H in (0, 1]");
  }
}

std::size_t MetricSpec::point_dim() const noexcept {
  return kind == MetricKind::parabolic ? d + 1 : d;
}

double MetricSpec::distance(std::span<const double> u, std::span<const double> v) const {
  if (u.size() != point_dim() || v.size() != point_dim()) {
    throw ShapeError("point dimension does not match the metric");
  }
  return kind == MetricKind::parabolic ? rho_H(u, v, hurst) : euclid(u, v);
}

double rho_H(std::span<const double> u, std::span<const double> v, double hurst) {
  if (u.size() != v.size() || u.empty()) throw ShapeError("rho_H needs points of equal dimension");
  FRACLAB_REQUIRE(hurst > 0.0 && hurst <= 1.0, "rho_H needs H in (0, 1]");
  const double time = std::pow(std::abs(u[0] - v[0]), hurst);
  return std::max(time, euclid(u.subspan(1), v.subspan(1)));
}

void PointCloud::validate() const {
  metric.validate();
  const std::size_t k = metric.point_dim();
  if (coords.empty() || coords.size() % k != 0) throw ShapeError("point cloud is empty or ragged");
  if (!joined.empty() && joined.size() != size()) throw ShapeError("joined flags must match points");
  for (double x : coords) FRACLAB_REQUIRE(std::isfinite(x), "point coordinates must be finite");
}

PointCloud graph_cloud(const Matrix& values, const TimeGrid& grid,
                       std::span<const std::size_t> indices, const MetricSpec& metric) {
  if (values.cols() != grid.size()) throw ShapeError("values must have one column per grid point");
  if (metric.point_dim() != values.rows() + 1) {
    throw ShapeError("graph points need time plus one coordinate per drift row");
  }
  FRACLAB_REQUIRE(!indices.empty(), "graph needs at least one time");
  PointCloud cloud{metric, {}, {}};
  cloud.coords.reserve(indices.size() * metric.point_dim());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const std::size_t k = indices[j];
    cloud.coords.push_back(grid[k]);
    for (std::size_t c = 0; c < values.rows(); ++c) cloud.coords.push_back(values(c, k));
    cloud.joined.push_back(j + 1 < indices.size() && indices[j + 1] == k + 1 ? 1 : 0);
  }
  return cloud;
}

PointCloud time_set_cloud(const sets::TimeSet& set, double resolution) {
  FRACLAB_REQUIRE(resolution > 0.0, "resolution must be positive");
  PointCloud cloud{MetricSpec::euclidean(1), {}, {}};
  for (const auto& iv : set.pieces()) {
    const auto k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(iv.length() / resolution - 1e-9)));
    if (cloud.coords.size() + k > (std::size_t{1} << 26)) {
      throw ResourceError("time set cloud exceeds the point cap");
    }
    const double side = iv.length() / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
      cloud.coords.push_back(iv.a + (static_cast<double>(i) + 0.5) * side);
    }
  }
  return cloud;
}

std::vector<double> cell_extents(const MetricSpec& metric, double r) {
  std::vector<double> ext(metric.point_dim(), r);
  if (metric.kind == MetricKind::parabolic) ext[0] = std::pow(r, 1.0 / metric.hurst);
  return ext;
}

double cell_circumradius(const MetricSpec& metric, double r) {
  const double space = 0.5 * r * std::sqrt(static_cast<double>(metric.d));
  if (metric.kind == MetricKind::euclidean) return space;
  return std::max(std::pow(0.5 * std::pow(r, 1.0 / metric.hurst), metric.hurst), space);
}

std::size_t box_count(const PointCloud& cloud, double r) {
  cloud.validate();
  FRACLAB_REQUIRE(std::isfinite(r) && r > 0.0, "box size must be positive");
  const auto extents = cell_extents(cloud.metric, r);
  const std::size_t n = cloud.size();
  const std::size_t chunks = std::min<std::size_t>(n, 64);
  std::vector<std::vector<CellKey>> parts(chunks);
  parallel_for(chunks, [&](std::size_t c, std::size_t) {
    const std::size_t begin = n * c / chunks;
    const std::size_t end = n * (c + 1) / chunks;
    auto keys = collect_keys(cloud, begin, end, extents);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    parts[c] = std::move(keys);
  });
  std::vector<CellKey> all;
  for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  std::sort(all.begin(), all.end());
  return static_cast<std::size_t>(std::unique(all.begin(), all.end()) - all.begin());
}

DimensionEstimate minkowski_dim(const PointCloud& cloud, double r_min, double r_max,
                                std::size_t n_scales, const MinkowskiOptions& options) {
  FRACLAB_REQUIRE(n_scales >= 3, "dimension estimate needs at least 3 scales");
  FRACLAB_REQUIRE(r_min > 0.0 && r_min < r_max, "scales need 0 < r_min < r_max");
  FRACLAB_REQUIRE(options.trim >= 0.0 && options.trim < 0.5, "trim must lie in [0, 0.5)");
  DimensionEstimate est;
  const double ratio = std::pow(r_min / r_max, 1.0 / static_cast<double>(n_scales - 1));
  for (std::size_t i = 0; i < n_scales; ++i) {
    const double r = i + 1 == n_scales ? r_min : r_max * std::pow(ratio, static_cast<double>(i));
    est.scales.push_back(r);
    est.counts.push_back(box_count(cloud, r));
  }
  auto drop = static_cast<std::size_t>(std::floor(options.trim * static_cast<double>(n_scales)));
  if (n_scales - 2 * drop < 3) drop = (n_scales - 3) / 2;
  est.fit_first = drop;
  est.fit_last = n_scales - 1 - drop;
  std::vector<double> x, y;
  for (std::size_t i = est.fit_first; i <= est.fit_last; ++i) {
    x.push_back(std::log(1.0 / est.scales[i]));
    y.push_back(std::log(static_cast<double>(est.counts[i])));
  }
  const auto fit = stats::fit_line(x, y);
  est.value = fit.slope;
  est.stderr_ = fit.slope_stderr;
  return est;
}

double hausdorff_upper(const PointCloud& cloud, double beta, double delta, double r_floor,
                       double ladder_ratio) {
  FRACLAB_REQUIRE(beta > 0.0, "beta must be positive");
  FRACLAB_REQUIRE(delta > 0.0 && r_floor > 0.0 && r_floor <= delta, "need 0 < r_floor <= delta");
  FRACLAB_REQUIRE(ladder_ratio > 0.0 && ladder_ratio < 1.0, "ladder ratio must lie in (0, 1)");
  double best = std::numeric_limits<double>::infinity();
  for (double r = delta; r >= r_floor * (1.0 - 1e-12); r *= ladder_ratio) {
    const double sum = static_cast<double>(box_count(cloud, r)) *
                       std::pow(2.0 * cell_circumradius(cloud.metric, r), beta);
    best = std::min(best, sum);
  }
  return best;
}

HausdorffProfile hausdorff_profile(const PointCloud& cloud, double beta, double r_max,
                                   double r_min, std::size_t n_scales, double trend_tol) {
  FRACLAB_REQUIRE(beta > 0.0, "beta must be positive");
  FRACLAB_REQUIRE(n_scales >= 2 && r_min > 0.0 && r_min < r_max, "invalid scale ladder");
  HausdorffProfile p;
  p.beta = beta;
  const double ratio = std::pow(r_min / r_max, 1.0 / static_cast<double>(n_scales - 1));
  std::vector<double> x, y;
  for (std::size_t i = 0; i < n_scales; ++i) {
    const double r = r_max * std::pow(ratio, static_cast<double>(i));
    const double sum = static_cast<double>(box_count(cloud, r)) *
                       std::pow(2.0 * cell_circumradius(cloud.metric, r), beta);
    p.scales.push_back(r);
    p.sums.push_back(sum);
    x.push_back(std::log(r));
    y.push_back(std::log(sum));
  }
  p.trend = stats::fit_line(x, y).slope;
  p.vanishing = p.trend > trend_tol;
  p.diverging = p.trend < -trend_tol;
  bool up = true, down = true;
  for (std::size_t i = 1; i < p.sums.size(); ++i) {
    up = up && p.sums[i] >= p.sums[i - 1];
    down = down && p.sums[i] <= p.sums[i - 1];
  }
  p.monotone = up || down;
  return p;
}

std::optional<double> known_graph_dimension(const drift::DriftSpec& spec) {
  switch (spec.kind) {
    case drift::DriftKind::zero: return 1.0;
    case drift::DriftKind::weierstrass:
    case drift::DriftKind::weierstrass_diagonal:
      return 2.0 + std::log(spec.tau) / std::log(spec.theta);
    case drift::DriftKind::fbm_realization:
      if (spec.dim == 1) return 2.0 - spec.alpha;
      return std::nullopt;
    default: return std::nullopt;
  }
}

GraphDimension graph_dim_parabolic(const drift::DriftSpec& spec, const sets::TimeSet& set,
                                   HurstIndex hurst, const GraphDimOptions& options) {
  set.validate();
  const TimeGrid grid(0.0, 1.0, options.grid_points);
  const Matrix values = drift::eval_drift(spec, grid);
  const auto indices = set.grid_indices(grid);
  const auto metric = MetricSpec::parabolic(hurst.value(), spec.dim);
  const auto cloud = graph_cloud(values, grid, indices, metric);

  GraphDimension out;
  out.estimate = minkowski_dim(cloud, options.r_min, options.r_max, options.n_scales,
                               {options.trim});
  // The comparison bounds hold for graphs over intervals.
  if (set.kind != sets::TimeSetKind::cantor) {
    out.graph_dim = known_graph_dimension(spec);
    if (out.graph_dim) {
      out.lower_bound = *out.graph_dim;
      out.upper_bound = *out.graph_dim - 1.0 + 1.0 / hurst.value();
    }
  }
  return out;
}

nlohmann::json to_json(const MetricSpec& m) {
  nlohmann::json doc{{"kind", metric_kind_name(m.kind)}, {"d", m.d}};
  if (m.kind == MetricKind::parabolic) doc["hurst"] = m.hurst;
  return doc;
}

MetricSpec metric_from_json(const nlohmann::json& doc) {
  try {
    const auto kind = doc.at("kind").get<std::string>();
    const auto d = doc.value("d", std::size_t{1});
    if (kind == "euclidean") return MetricSpec::euclidean(d);
    if (kind == "parabolic") return MetricSpec::parabolic(doc.at("hurst").get<double>(), d);
    throw DomainError("unknown metric kind: " + kind);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("invalid metric: ") + e.what());
  }
}

nlohmann::json to_json(const DimensionEstimate& e) {
  return {{"value", e.value},
          {"stderr", e.stderr_},
          {"scales", e.scales},
          {"counts", e.counts},
          {"fit_window", {e.scales[e.fit_first], e.scales[e.fit_last]}}};
}

nlohmann::json to_json(const HausdorffProfile& p) {
  return {{"beta", p.beta},           {"scales", p.scales},
          {"sums", p.sums},           {"trend", p.trend},
          {"vanishing", p.vanishing}, {"diverging", p.diverging},
          {"monotone", p.monotone},   {"note", "upper bound only"}};
}

nlohmann::json to_json(const GraphDimension& g) {
  nlohmann::json doc = to_json(g.estimate);
  doc["graph_dim"] = g.graph_dim ? nlohmann::json(*g.graph_dim) : nlohmann::json();
  doc["lower_bound"] = g.lower_bound ? nlohmann::json(*g.lower_bound) : nlohmann::json();
  doc["upper_bound"] = g.upper_bound ? nlohmann::json(*g.upper_bound) : nlohmann::json();
  return doc;
}

void write_csv(const DimensionEstimate& e, std::ostream& out) {
  out << "log_inv_r,log_n\n";
  char buf[64];
  for (std::size_t i = 0; i < e.scales.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", std::log(1.0 / e.scales[i]),
                  std::log(static_cast<double>(e.counts[i])));
    out << buf;
  }
}

}  // namespace fraclab::geometry
