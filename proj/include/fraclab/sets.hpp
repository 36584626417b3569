#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "json.hpp"

#include "fraclab/types.hpp"

namespace fraclab::sets {

struct Interval {
  double a = 0.0;
  double b = 0.0;
  double length() const noexcept { return b - a; }
  bool contains(const Interval& other) const noexcept { return a <= other.a && other.b <= b; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// 2^level closed intervals of length lambda^level |carrier|, by iterated
/// removal of the middle (1 - 2 lambda) fraction, left to right.
std::vector<Interval> cantor_cells(double lambda, std::size_t level, Interval carrier);

enum class TimeSetKind { interval, cantor, finite_union };

/// Time set E within [0, 1]. A Cantor set of a given level is the union of
/// its level cells, carried on [epsilon0, 1].
struct TimeSet {
  TimeSetKind kind = TimeSetKind::interval;
  std::vector<Interval> intervals;  // interval / finite_union pieces
  double lambda = 0.0;
  std::size_t level = 0;
  double epsilon0 = 0.1;

  static TimeSet interval(double a, double b, double epsilon0 = 0.1);
  static TimeSet cantor(double lambda, std::size_t level, double epsilon0 = 0.1);
  static TimeSet finite_union(std::vector<Interval> pieces, double epsilon0 = 0.1);

  void validate() const;
  Interval carrier() const;
  /// Closed pieces whose union is E (Cantor: level cells).
  std::vector<Interval> pieces() const;
  /// Hausdorff (= Minkowski) dimension: 1, or log 2 / log(1/lambda).
  double dimension() const;
  double distance(double t) const;
  /// Grid indices within dt/2 of E, sorted.
  std::vector<std::size_t> grid_indices(const TimeGrid& grid) const;
};

enum class TargetKind { point, ball, cantor_product, ball_union };

struct Ball {
  std::vector<double> center;
  double radius = 0.0;
  friend bool operator==(const Ball&, const Ball&) = default;
};

/// Compact target F in R^d. A Cantor product of finite level is the union of
/// its level product cells inside the bounding box.
struct TargetSet {
  TargetKind kind = TargetKind::point;
  std::size_t dim = 1;
  std::vector<double> center;  // point / ball
  double radius = 0.0;         // ball
  std::vector<double> lambdas;  // cantor_product, one per axis
  std::size_t level = 0;
  std::vector<Interval> box;  // cantor_product bounding box, one per axis
  std::vector<Ball> balls;    // ball_union
  std::vector<std::vector<Interval>> axis_cells;  // cantor_product level cells, filled by the factory

  static TargetSet point(std::vector<double> x);
  static TargetSet ball(std::vector<double> center, double radius);
  static TargetSet cantor_product(std::vector<double> lambdas, std::size_t level,
                                  std::vector<Interval> box);
  static TargetSet ball_union(std::vector<Ball> balls);

  void validate() const;
  double dimension() const;
  /// Euclidean distance from x to F.
  double distance(std::span<const double> x) const;
  /// Euclidean distance from the segment [p, q] to F. Exact for points,
  /// balls and unions of balls; for Cantor products the endpoint minimum.
  double segment_distance(std::span<const double> p, std::span<const double> q) const;
  /// F translated by v.
  TargetSet shifted(std::span<const double> v) const;
};

/// Probability measure made of atoms, each representing a cell of side
/// cell_size. Coordinates are stored row by row (size() x dim).
struct DiscreteMeasure {
  std::size_t dim = 1;
  std::vector<double> coords;
  std::vector<double> weights;
  double cell_size = 0.0;

  std::size_t size() const noexcept { return weights.size(); }
  std::span<const double> atom(std::size_t i) const { return {coords.data() + i * dim, dim}; }
  void validate() const;
};

/// Uniform weights on the pieces of E: cell midpoints of 2^level equal cells
/// (interval), level Cantor cells (cantor), or length-proportional cells of
/// side total/2^level (finite_union).
DiscreteMeasure natural_measure(const TimeSet& set, std::size_t level);

/// Mass of [lo, hi] with each atom spread uniformly over its cell.
double interval_mass(const DiscreteMeasure& measure, double lo, double hi);

struct ConditionSOptions {
  double spread_bound = 1e3;
  /// Largest tolerated |slope| of log ratio against log delta.
  double trend_tol = 0.1;
};

struct ConditionSReport {
  double c9_lower = 0.0;  // min over atoms and scales of nu([a-d, a+d]) / d^beta
  double c9_upper = 0.0;  // max of the same ratio
  double spread = 0.0;
  double lower_trend = 0.0;
  double upper_trend = 0.0;
  std::vector<double> scales;
  std::vector<double> min_ratio;
  std::vector<double> max_ratio;
  bool pass = false;
};

ConditionSReport check_condition_S(const DiscreteMeasure& measure, double beta,
                                   std::span<const double> scales,
                                   const ConditionSOptions& options = {});

struct FrostmanOptions {
  /// Evaluate the supremum at every stride-th atom only.
  std::size_t probe_stride = 1;
};

/// sup over atoms t of sum_s nu(s) / max{r^d, |s - t|^{Hd}}, with the mass of
/// each atom spread uniformly over its cell (one-dimensional measures).
double frostman_kernel_sup(const DiscreteMeasure& measure, HurstIndex hurst, std::size_t d,
                           double r, const FrostmanOptions& options = {});

struct FrostmanProfile {
  std::vector<double> radii;
  std::vector<double> sup;
  std::vector<double> phi;    // phi_{d - beta/H}(r)
  std::vector<double> ratio;  // sup / phi
  double c4 = 0.0;            // max ratio
  double spread = 0.0;        // max ratio / min ratio
};

FrostmanProfile frostman_profile(const DiscreteMeasure& measure, HurstIndex hurst, std::size_t d,
                                 double beta, std::span<const double> radii,
                                 const FrostmanOptions& options = {});

struct Cell {
  std::vector<double> center;
  double side = 0.0;
};

/// Finite cover of F by axis-aligned cells of side <= resolution whose centers
/// lie within resolution of F.
std::vector<Cell> discretize_target(const TargetSet& target, double resolution,
                                    std::size_t max_cells = std::size_t{1} << 22);

nlohmann::json to_json(const TimeSet& set);
TimeSet time_set_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const TargetSet& set);
TargetSet target_set_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ConditionSReport& report);
nlohmann::json to_json(const FrostmanProfile& profile);

/// CSV with header x_1,...,x_dim,weight.
void write_csv(const DiscreteMeasure& measure, std::ostream& out);

}  // namespace fraclab::sets
