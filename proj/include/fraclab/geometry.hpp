#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "fraclab/drift.hpp"
#include "fraclab/sets.hpp"
#include "fraclab/types.hpp"

namespace fraclab::geometry {

enum class MetricKind { euclidean, parabolic };

/// Euclidean metric on R^d, or the parabolic metric on time x R^d. Parabolic
/// points carry the time first.
struct MetricSpec {
  MetricKind kind = MetricKind::euclidean;
  std::size_t d = 1;
  double hurst = 1.0;  // parabolic only, in (0, 1]

  static MetricSpec euclidean(std::size_t d);
  static MetricSpec parabolic(double hurst, std::size_t d);

  void validate() const;
  /// Coordinates per point: d, or 1 + d for parabolic.
  std::size_t point_dim() const noexcept;
  double distance(std::span<const double> u, std::span<const double> v) const;
};

/// max{|t_u - t_v|^H, ||x_u - x_v||} for time-augmented points, H in (0, 1].
double rho_H(std::span<const double> u, std::span<const double> v, double hurst);

/// Points stored row by row. When joined is nonempty, joined[i] != 0 means
/// point i is connected to point i + 1 by a straight segment (sampled graphs).
struct PointCloud {
  MetricSpec metric;
  std::vector<double> coords;
  std::vector<std::uint8_t> joined;

  std::size_t size() const noexcept { return coords.size() / metric.point_dim(); }
  std::span<const double> point(std::size_t i) const {
    const std::size_t k = metric.point_dim();
    return {coords.data() + i * k, k};
  }
  void validate() const;
};

/// Points (t_k, f(t_k)) for the given grid indices; consecutive indices are
/// joined so box counts see the piecewise-linear graph.
PointCloud graph_cloud(const Matrix& values, const TimeGrid& grid,
                       std::span<const std::size_t> indices, const MetricSpec& metric);

/// Time-only cloud of the pieces of E, one point per cell of side resolution.
PointCloud time_set_cloud(const sets::TimeSet& set, double resolution);

/// Cell extents used by box_count at scale r: r^{1/H} in time, r in space
/// (cubes of side r for the Euclidean kind).
std::vector<double> cell_extents(const MetricSpec& metric, double r);

/// Radius of the smallest metric ball containing one counting cell.
double cell_circumradius(const MetricSpec& metric, double r);

/// Occupied cells of the grid anchored at the origin.
std::size_t box_count(const PointCloud& cloud, double r);

struct DimensionEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::vector<double> scales;         // decreasing radii
  std::vector<std::uint64_t> counts;  // N(cloud, r), nondecreasing
  std::size_t fit_first = 0;          // regression window [fit_first, fit_last]
  std::size_t fit_last = 0;
};

struct MinkowskiOptions {
  double trim = 0.15;  // fraction of scales dropped at each end
};

DimensionEstimate minkowski_dim(const PointCloud& cloud, double r_min, double r_max,
                                std::size_t n_scales, const MinkowskiOptions& options = {});

/// min over the ladder delta, delta*ratio, ... >= r_floor of the covering sum
/// N(r) (2 circumradius(r))^beta. Upper bound only.
double hausdorff_upper(const PointCloud& cloud, double beta, double delta, double r_floor,
                       double ladder_ratio = 0.5);

struct HausdorffProfile {
  double beta = 0.0;
  std::vector<double> scales;
  std::vector<double> sums;  // covering sum at each scale
  double trend = 0.0;        // slope of log sum against log r
  bool vanishing = false;    // sums shrink under refinement
  bool diverging = false;    // sums grow under refinement
  bool monotone = false;     // sums monotone along the ladder
};

HausdorffProfile hausdorff_profile(const PointCloud& cloud, double beta, double r_max,
                                   double r_min, std::size_t n_scales, double trend_tol = 0.05);

struct GraphDimOptions {
  std::size_t grid_points = (std::size_t{1} << 16) + 1;
  double r_min = 1e-3;
  double r_max = 0.25;
  std::size_t n_scales = 16;
  double trim = 0.15;
};

struct GraphDimension {
  DimensionEstimate estimate;
  std::optional<double> graph_dim;    // Euclidean graph dimension when known
  std::optional<double> lower_bound;  // graph_dim
  std::optional<double> upper_bound;  // graph_dim - 1 + 1/H
};

/// Box dimension of Gr_E(f) under the parabolic metric of index H.
GraphDimension graph_dim_parabolic(const drift::DriftSpec& drift, const sets::TimeSet& set,
                                   HurstIndex hurst, const GraphDimOptions& options = {});

/// Known Euclidean dimension of the graph of f over an interval.
std::optional<double> known_graph_dimension(const drift::DriftSpec& drift);

nlohmann::json to_json(const MetricSpec& metric);
MetricSpec metric_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const DimensionEstimate& estimate);
nlohmann::json to_json(const HausdorffProfile& profile);
nlohmann::json to_json(const GraphDimension& result);

/// Two columns log(1/r), log N for the scales of an estimate.
void write_csv(const DimensionEstimate& estimate, std::ostream& out);

}  // namespace fraclab::geometry
