#include "fraclab/sets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "fraclab/potential.hpp"
#include "fraclab/stats.hpp"

namespace fraclab::sets {
namespace {

void require_lambda(double lambda) {
  FRACLAB_REQUIRE(std::isfinite(lambda) && lambda > 0.0 && lambda < 0.5,
                  "Cantor ratio lambda must lie in (0, 1/2)");
}

double cantor_dimension(double lambda) { return std::log(2.0) / std::log(1.0 / lambda); }

// Distance from t to a sorted list of disjoint closed intervals.
double distance_to_pieces(const std::vector<Interval>& pieces, double t) {
  auto it = std::lower_bound(pieces.begin(), pieces.end(), t,
                             [](const Interval& iv, double x) { return iv.b < x; });
  double best = std::numeric_limits<double>::infinity();
  if (it != pieces.end()) best = std::max(0.0, it->a - t);
  if (it != pieces.begin()) best = std::min(best, t - std::prev(it)->b);
  return best;
}

// Point-to-segment distance in R^d.
double segment_point_distance(std::span<const double> p, std::span<const double> q,
                              std::span<const double> x) {
  double dd = 0.0, dx = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double u = q[i] - p[i];
    dd += u * u;
    dx += u * (x[i] - p[i]);
  }
  const double s = dd > 0.0 ? std::clamp(dx / dd, 0.0, 1.0) : 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = p[i] + s * (q[i] - p[i]) - x[i];
    sq += diff * diff;
  }
  return std::sqrt(sq);
}

double euclid(std::span<const double> a, std::span<const double> b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sq);
}

const char* time_kind_name(TimeSetKind k) {
  switch (k) {
    case TimeSetKind::interval: return "interval";
    case TimeSetKind::cantor: return "cantor";
    case TimeSetKind::finite_union: return "finite_union";
  }
  return "interval";
}

const char* target_kind_name(TargetKind k) {
  switch (k) {
    case TargetKind::point: return "point";
    case TargetKind::ball: return "ball";
    case TargetKind::cantor_product: return "cantor_product";
    case TargetKind::ball_union: return "ball_union";
  }
  return "point";
}

}  // namespace

std::vector<Interval> cantor_cells(double lambda, std::size_t level, Interval carrier) {
  require_lambda(lambda);
  FRACLAB_REQUIRE(carrier.b > carrier.a, "carrier must be a nondegenerate interval");
  FRACLAB_REQUIRE(level <= 26, "Cantor level exceeds the resource budget");
  std::vector<Interval> cells{carrier};
  for (std::size_t k = 0; k < level; ++k) {
    std::vector<Interval> next;
    next.reserve(2 * cells.size());
    for (const auto& c : cells) {
      const double len = lambda * c.length();
      next.push_back({c.a, c.a + len});
      next.push_back({c.b - len, c.b});
    }
    cells = std::move(next);
  }
  return cells;
}

TimeSet TimeSet::interval(double a, double b, double epsilon0) {
  TimeSet s;
  s.kind = TimeSetKind::interval;
  s.intervals = {{a, b}};
  s.epsilon0 = epsilon0;
  s.validate();
  return s;
}

TimeSet TimeSet::cantor(double lambda, std::size_t level, double epsilon0) {
  TimeSet s;
  s.kind = TimeSetKind::cantor;
  s.lambda = lambda;
  s.level = level;
  s.epsilon0 = epsilon0;
  s.validate();
  return s;
}

TimeSet TimeSet::finite_union(std::vector<Interval> pieces, double epsilon0) {
  TimeSet s;
  s.kind = TimeSetKind::finite_union;
  std::sort(pieces.begin(), pieces.end(), [](auto& x, auto& y) { return x.a < y.a; });
  s.intervals = std::move(pieces);
  s.epsilon0 = epsilon0;
  s.validate();
  return s;
}

void TimeSet::validate() const {
  FRACLAB_REQUIRE(std::isfinite(epsilon0) && epsilon0 >= 0.0 && epsilon0 < 1.0,
                  "epsilon0 must lie in [0, 1)");
  switch (kind) {
    case TimeSetKind::cantor:
      require_lambda(lambda);
      FRACLAB_REQUIRE(level >= 1, "Cantor level must be at least 1");
      FRACLAB_REQUIRE(level <= 26, "Cantor level exceeds the resource budget");
      break;
    case TimeSetKind::interval:
    case TimeSetKind::finite_union:
      FRACLAB_REQUIRE(!intervals.empty(), "time set needs at least one interval");
      FRACLAB_REQUIRE(kind == TimeSetKind::finite_union || intervals.size() == 1,
                      "interval time set has exactly one piece");
      for (std::size_t i = 0; i < intervals.size(); ++i) {
        const auto& iv = intervals[i];
        FRACLAB_REQUIRE(std::isfinite(iv.a) && std::isfinite(iv.b) && iv.a >= 0.0 &&
                            iv.b <= 1.0 && iv.a <= iv.b,
                        "time intervals must satisfy 0 <= a <= b <= 1");
        if (i > 0) FRACLAB_REQUIRE(intervals[i - 1].b < iv.a, "union pieces must be disjoint");
      }
      break;
  }
}

Interval TimeSet::carrier() const {
  if (kind == TimeSetKind::cantor) return {epsilon0, 1.0};
  return {intervals.front().a, intervals.back().b};
}

std::vector<Interval> TimeSet::pieces() const {
  if (kind == TimeSetKind::cantor) return cantor_cells(lambda, level, carrier());
  return intervals;
}

double TimeSet::dimension() const {
  if (kind == TimeSetKind::cantor) return cantor_dimension(lambda);
  bool any_length = false;
  for (const auto& iv : intervals) any_length = any_length || iv.length() > 0.0;
  return any_length ? 1.0 : 0.0;
}

double TimeSet::distance(double t) const { return distance_to_pieces(pieces(), t); }

std::vector<std::size_t> TimeSet::grid_indices(const TimeGrid& grid) const {
  const double dt = grid.step();
  const double tol = 0.5 * dt * (1.0 + 1e-9);
  std::vector<std::size_t> out;
  for (const auto& iv : pieces()) {
    const double lo = std::ceil((iv.a - tol - grid.t0()) / dt);
    const double hi = std::floor((iv.b + tol - grid.t0()) / dt);
    const double last = static_cast<double>(grid.size() - 1);
    for (double k = std::max(lo, 0.0); k <= std::min(hi, last); k += 1.0) {
      out.push_back(static_cast<std::size_t>(k));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TargetSet TargetSet::point(std::vector<double> x) {
  TargetSet s;
  s.kind = TargetKind::point;
  s.dim = x.size();
  s.center = std::move(x);
  s.validate();
  return s;
}

TargetSet TargetSet::ball(std::vector<double> center, double radius) {
  TargetSet s;
  s.kind = TargetKind::ball;
  s.dim = center.size();
  s.center = std::move(center);
  s.radius = radius;
  s.validate();
  return s;
}

TargetSet TargetSet::cantor_product(std::vector<double> lambdas, std::size_t level,
                                    std::vector<Interval> box) {
  TargetSet s;
  s.kind = TargetKind::cantor_product;
  s.dim = lambdas.size();
  s.lambdas = std::move(lambdas);
  s.level = level;
  s.box = std::move(box);
  s.validate();
  for (std::size_t i = 0; i < s.dim; ++i) {
    s.axis_cells.push_back(cantor_cells(s.lambdas[i], s.level, s.box[i]));
  }
  return s;
}

TargetSet TargetSet::ball_union(std::vector<Ball> balls) {
  TargetSet s;
  s.kind = TargetKind::ball_union;
  s.dim = balls.empty() ? 0 : balls.front().center.size();
  s.balls = std::move(balls);
  s.validate();
  return s;
}

void TargetSet::validate() const {
  FRACLAB_REQUIRE(dim >= 1, "target dimension must be positive");
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  switch (kind) {
    case TargetKind::point:
    case TargetKind::ball:
      if (center.size() != dim) throw ShapeError("target center has the wrong dimension");
      FRACLAB_REQUIRE(finite(center), "target center must be finite (bounded F)");
      if (kind == TargetKind::ball) {
        FRACLAB_REQUIRE(std::isfinite(radius) && radius > 0.0, "ball radius must be positive");
      }
      break;
    case TargetKind::cantor_product:
      if (box.size() != dim) throw ShapeError("Cantor product needs one box interval per axis");
      for (double l : lambdas) require_lambda(l);
      FRACLAB_REQUIRE(level <= 26, "Cantor level exceeds the resource budget");
      for (const auto& iv : box) {
        FRACLAB_REQUIRE(std::isfinite(iv.a) && std::isfinite(iv.b) && iv.b > iv.a,
                        "Cantor product box must be bounded and nondegenerate");
      }
      break;
    case TargetKind::ball_union:
      FRACLAB_REQUIRE(!balls.empty(), "ball union needs at least one ball");
      for (const auto& b : balls) {
        if (b.center.size() != dim) throw ShapeError("ball union centers differ in dimension");
        FRACLAB_REQUIRE(finite(b.center) && std::isfinite(b.radius) && b.radius > 0.0,
                        "ball union needs bounded balls with positive radius");
      }
      break;
  }
}

double TargetSet::dimension() const {
  switch (kind) {
    case TargetKind::point: return 0.0;
    case TargetKind::cantor_product: {
      double sum = 0.0;
      for (double l : lambdas) sum += cantor_dimension(l);
      return sum;
    }
    default: return static_cast<double>(dim);
  }
}

double TargetSet::distance(std::span<const double> x) const {
  if (x.size() != dim) throw ShapeError("point dimension does not match the target");
  switch (kind) {
    case TargetKind::point: return euclid(x, center);
    case TargetKind::ball: return std::max(0.0, euclid(x, center) - radius);
    case TargetKind::ball_union: {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& b : balls) best = std::min(best, std::max(0.0, euclid(x, b.center) - b.radius));
      return best;
    }
    case TargetKind::cantor_product: {
      double sq = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double di = axis_cells.size() == dim
                              ? distance_to_pieces(axis_cells[i], x[i])
                              : distance_to_pieces(cantor_cells(lambdas[i], level, box[i]), x[i]);
        sq += di * di;
      }
      return std::sqrt(sq);
    }
  }
  return 0.0;
}

double TargetSet::segment_distance(std::span<const double> p, std::span<const double> q) const {
  if (p.size() != dim || q.size() != dim) throw ShapeError("segment dimension does not match");
  switch (kind) {
    case TargetKind::point: return segment_point_distance(p, q, center);
    case TargetKind::ball: return std::max(0.0, segment_point_distance(p, q, center) - radius);
    case TargetKind::ball_union: {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& b : balls) {
        best = std::min(best, std::max(0.0, segment_point_distance(p, q, b.center) - b.radius));
      }
      return best;
    }
    case TargetKind::cantor_product: return std::min(distance(p), distance(q));
  }
  return 0.0;
}

TargetSet TargetSet::shifted(std::span<const double> v) const {
  if (v.size() != dim) throw ShapeError("shift dimension does not match the target");
  TargetSet out = *this;
  for (std::size_t i = 0; i < dim; ++i) {
    if (!out.center.empty()) out.center[i] += v[i];
    if (!out.box.empty()) {
      out.box[i].a += v[i];
      out.box[i].b += v[i];
    }
    if (i < out.axis_cells.size()) {
      for (auto& c : out.axis_cells[i]) {
        c.a += v[i];
        c.b += v[i];
      }
    }
  }
  for (auto& b : out.balls) {
    for (std::size_t i = 0; i < dim; ++i) b.center[i] += v[i];
  }
  return out;
}

void DiscreteMeasure::validate() const {
  FRACLAB_REQUIRE(dim >= 1, "measure dimension must be positive");
  if (coords.size() != weights.size() * dim) throw ShapeError("atoms and weights differ in count");
  FRACLAB_REQUIRE(!weights.empty(), "measure needs at least one atom");
  FRACLAB_REQUIRE(std::isfinite(cell_size) && cell_size > 0.0, "cell_size must be positive");
  double total = 0.0;
  for (double w : weights) {
    FRACLAB_REQUIRE(w >= 0.0, "weights must be nonnegative");
    total += w;
  }
  FRACLAB_REQUIRE(std::abs(total - 1.0) <= 1e-12, "weights must sum to 1");
}

DiscreteMeasure natural_measure(const TimeSet& set, std::size_t level) {
  set.validate();
  FRACLAB_REQUIRE(level <= 24, "measure level exceeds the resource budget");
  DiscreteMeasure m;
  m.dim = 1;
  const std::size_t count = std::size_t{1} << level;
  switch (set.kind) {
    case TimeSetKind::interval: {
      const Interval iv = set.intervals.front();
      FRACLAB_REQUIRE(iv.length() > 0.0, "natural measure needs a nondegenerate interval");
      m.cell_size = iv.length() / static_cast<double>(count);
      for (std::size_t i = 0; i < count; ++i) {
        m.coords.push_back(iv.a + (static_cast<double>(i) + 0.5) * m.cell_size);
      }
      m.weights.assign(count, 1.0 / static_cast<double>(count));
      break;
    }
    case TimeSetKind::cantor: {
      const auto cells = cantor_cells(set.lambda, level, set.carrier());
      m.cell_size = cells.front().length();
      for (const auto& c : cells) m.coords.push_back(0.5 * (c.a + c.b));
      m.weights.assign(cells.size(), 1.0 / static_cast<double>(cells.size()));
      break;
    }
    case TimeSetKind::finite_union: {
      double total = 0.0;
      for (const auto& iv : set.intervals) total += iv.length();
      FRACLAB_REQUIRE(total > 0.0, "natural measure needs positive total length");
      m.cell_size = total / static_cast<double>(count);
      for (const auto& iv : set.intervals) {
        const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                    std::ceil(iv.length() / m.cell_size - 1e-9)));
        const double side = iv.length() / static_cast<double>(k);
        for (std::size_t i = 0; i < k; ++i) {
          m.coords.push_back(iv.a + (static_cast<double>(i) + 0.5) * side);
          m.weights.push_back(side / total);
        }
      }
      const double sum = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
      for (auto& w : m.weights) w /= sum;
      break;
    }
  }
  return m;
}

double interval_mass(const DiscreteMeasure& m, double lo, double hi) {
  if (m.dim != 1) throw ShapeError("interval_mass needs a one-dimensional measure");
  if (hi <= lo) return 0.0;
  const double half = 0.5 * m.cell_size;
  double mass = 0.0;
  // Atoms are not assumed sorted here; callers on hot paths use the sorted variant below.
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double a = std::max(lo, m.coords[i] - half);
    const double b = std::min(hi, m.coords[i] + half);
    if (b > a) mass += m.weights[i] * (b - a) / m.cell_size;
  }
  return mass;
}

namespace {

// Sorted one-dimensional atoms with prefix sums for O(log n) interval mass.
class SortedMeasure {
public:
  explicit SortedMeasure(const DiscreteMeasure& m) : half_(0.5 * m.cell_size), cell_(m.cell_size) {
    if (m.dim != 1) throw ShapeError("a one-dimensional measure is required");
    std::vector<std::size_t> order(m.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return m.coords[i] < m.coords[j]; });
    for (auto i : order) {
      x_.push_back(m.coords[i]);
      w_.push_back(m.weights[i]);
    }
    prefix_.assign(w_.size() + 1, 0.0);
    for (std::size_t i = 0; i < w_.size(); ++i) prefix_[i + 1] = prefix_[i] + w_[i];
  }

  double mass(double lo, double hi) const {
    if (hi <= lo) return 0.0;
    // Atoms whose cells meet [lo, hi]: centers in (lo - half, hi + half).
    const auto first = std::upper_bound(x_.begin(), x_.end(), lo - half_) - x_.begin();
    const auto last = std::lower_bound(x_.begin(), x_.end(), hi + half_) - x_.begin();
    if (last <= first) return 0.0;
    // Fully covered atoms: centers in [lo + half, hi - half].
    const auto in_first = std::lower_bound(x_.begin(), x_.end(), lo + half_) - x_.begin();
    const auto in_last = std::upper_bound(x_.begin(), x_.end(), hi - half_) - x_.begin();
    double total = 0.0;
    auto partial = [&](std::ptrdiff_t i) {
      const double a = std::max(lo, x_[i] - half_);
      const double b = std::min(hi, x_[i] + half_);
      if (b > a) total += w_[i] * (b - a) / cell_;
    };
    if (in_first < in_last) {
      total += prefix_[in_last] - prefix_[in_first];
      for (auto i = first; i < in_first; ++i) partial(i);
      for (auto i = in_last; i < last; ++i) partial(i);
    } else {
      for (auto i = first; i < last; ++i) partial(i);
    }
    return total;
  }

  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& w() const { return w_; }

private:
  double half_;
  double cell_;
  std::vector<double> x_;
  std::vector<double> w_;
  std::vector<double> prefix_;
};

}  // namespace

ConditionSReport check_condition_S(const DiscreteMeasure& measure, double beta,
                                   std::span<const double> scales,
                                   const ConditionSOptions& options) {
  measure.validate();
  FRACLAB_REQUIRE(!scales.empty(), "condition (S) check needs at least one scale");
  FRACLAB_REQUIRE(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1]");
  for (double s : scales) FRACLAB_REQUIRE(std::isfinite(s) && s > 0.0, "scales must be positive");
  const SortedMeasure sorted(measure);

  ConditionSReport report;
  report.c9_lower = std::numeric_limits<double>::infinity();
  std::vector<double> lx, lmin, lmax;
  for (double delta : scales) {
    double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
    const double scale = std::pow(delta, beta);
    for (double a : sorted.x()) {
      const double ratio = sorted.mass(a - delta, a + delta) / scale;
      mn = std::min(mn, ratio);
      mx = std::max(mx, ratio);
    }
    report.scales.push_back(delta);
    report.min_ratio.push_back(mn);
    report.max_ratio.push_back(mx);
    report.c9_lower = std::min(report.c9_lower, mn);
    report.c9_upper = std::max(report.c9_upper, mx);
    lx.push_back(std::log(delta));
    lmin.push_back(std::log(mn));
    lmax.push_back(std::log(mx));
  }
  report.spread = report.c9_upper / report.c9_lower;
  if (lx.size() >= 2) {
    report.lower_trend = stats::fit_line(lx, lmin).slope;
    report.upper_trend = stats::fit_line(lx, lmax).slope;
  }
  report.pass = std::isfinite(report.spread) && report.c9_lower > 0.0 &&
                report.spread <= options.spread_bound &&
                std::abs(report.lower_trend) <= options.trend_tol &&
                std::abs(report.upper_trend) <= options.trend_tol;
  return report;
}

namespace {

// Integral of u -> 1 / max{r^d, u^{Hd}} over [0, x].
class KernelPrimitive {
public:
  KernelPrimitive(double r, double hd, double d)
      : cap_(std::pow(r, -d)), knee_(std::pow(r, d / hd)), p_(hd) {}

  double operator()(double x) const {
    if (x <= knee_) return x * cap_;
    return knee_ * cap_ + tail(knee_, x);
  }

private:
  double tail(double a, double b) const {
    if (std::abs(p_ - 1.0) < 1e-12) return std::log(b / a);
    return (std::pow(b, 1.0 - p_) - std::pow(a, 1.0 - p_)) / (1.0 - p_);
  }
  double cap_;
  double knee_;
  double p_;
};

}  // namespace

double frostman_kernel_sup(const DiscreteMeasure& measure, HurstIndex hurst, std::size_t d,
                           double r, const FrostmanOptions& options) {
  measure.validate();
  if (measure.dim != 1) throw ShapeError("Frostman kernel needs a measure on the time axis");
  FRACLAB_REQUIRE(d >= 1, "d must be positive");
  FRACLAB_REQUIRE(std::isfinite(r) && r > 0.0, "r must be positive");
  FRACLAB_REQUIRE(options.probe_stride >= 1, "probe stride must be positive");
  const double dd = static_cast<double>(d);
  const KernelPrimitive primitive(r, hurst.value() * dd, dd);
  const double half = 0.5 * measure.cell_size;
  const double inv_cell = 1.0 / measure.cell_size;

  // Signed primitive so that cell integrals are K(b) - K(a) for any a < b.
  auto signed_primitive = [&](double x) { return x >= 0.0 ? primitive(x) : -primitive(-x); };
  double best = 0.0;
  for (std::size_t i = 0; i < measure.size(); i += options.probe_stride) {
    const double t = measure.coords[i];
    double sum = 0.0;
    for (std::size_t j = 0; j < measure.size(); ++j) {
      const double a = measure.coords[j] - half - t;
      sum += measure.weights[j] * inv_cell *
             (signed_primitive(a + measure.cell_size) - signed_primitive(a));
    }
    best = std::max(best, sum);
  }
  return best;
}

FrostmanProfile frostman_profile(const DiscreteMeasure& measure, HurstIndex hurst, std::size_t d,
                                 double beta, std::span<const double> radii,
                                 const FrostmanOptions& options) {
  FRACLAB_REQUIRE(!radii.empty(), "profile needs at least one radius");
  FrostmanProfile p;
  const double order = static_cast<double>(d) - beta / hurst.value();
  double lo = std::numeric_limits<double>::infinity();
  for (double r : radii) {
    const double sup = frostman_kernel_sup(measure, hurst, d, r, options);
    const double phi = potential::phi_alpha(order, r);
    p.radii.push_back(r);
    p.sup.push_back(sup);
    p.phi.push_back(phi);
    p.ratio.push_back(sup / phi);
    p.c4 = std::max(p.c4, sup / phi);
    lo = std::min(lo, sup / phi);
  }
  p.spread = p.c4 / lo;
  return p;
}

std::vector<Cell> discretize_target(const TargetSet& target, double resolution,
                                    std::size_t max_cells) {
  target.validate();
  FRACLAB_REQUIRE(std::isfinite(resolution) && resolution > 0.0, "resolution must be positive");
  const std::size_t d = target.dim;
  std::vector<Cell> out;

  if (target.kind == TargetKind::point) {
    out.push_back({target.center, resolution});
    return out;
  }

  if (target.kind == TargetKind::cantor_product) {
    std::vector<std::vector<Interval>> axes(d);
    std::size_t total = 1;
    double side = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      // Subdivide level cells so every cell side is at most the resolution.
      auto cells = cantor_cells(target.lambdas[i], target.level, target.box[i]);
      const auto split = static_cast<std::size_t>(std::ceil(cells.front().length() / resolution - 1e-9));
      std::vector<Interval> fine;
      for (const auto& c : cells) {
        const double s = c.length() / static_cast<double>(std::max<std::size_t>(split, 1));
        side = std::max(side, s);
        for (std::size_t k = 0; k < std::max<std::size_t>(split, 1); ++k) {
          fine.push_back({c.a + static_cast<double>(k) * s, c.a + static_cast<double>(k + 1) * s});
        }
      }
      total *= fine.size();
      if (total > max_cells) throw ResourceError("target discretization exceeds the cell cap");
      axes[i] = std::move(fine);
    }
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t n = 0; n < total; ++n) {
      Cell c;
      c.side = side;
      for (std::size_t i = 0; i < d; ++i) c.center.push_back(0.5 * (axes[i][idx[i]].a + axes[i][idx[i]].b));
      out.push_back(std::move(c));
      for (std::size_t i = d; i-- > 0;) {
        if (++idx[i] < axes[i].size()) break;
        idx[i] = 0;
      }
    }
    return out;
  }

  // Balls: cells of a grid anchored at the origin; side chosen so every
  // retained center is within the resolution of F.
  const double side = std::min(resolution, 2.0 * resolution / std::sqrt(static_cast<double>(d)));
  std::vector<Ball> balls = target.kind == TargetKind::ball
                                ? std::vector<Ball>{{target.center, target.radius}}
                                : target.balls;
  std::set<std::vector<long long>> seen;
  for (const auto& b : balls) {
    std::vector<long long> lo(d), hi(d);
    std::size_t count = 1;
    for (std::size_t i = 0; i < d; ++i) {
      lo[i] = static_cast<long long>(std::floor((b.center[i] - b.radius) / side));
      hi[i] = static_cast<long long>(std::ceil((b.center[i] + b.radius) / side)) - 1;
      count *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
      if (count > max_cells) throw ResourceError("target discretization exceeds the cell cap");
    }
    std::vector<long long> k = lo;
    for (std::size_t n = 0; n < count; ++n) {
      // Keep the cell when it meets the open ball.
      double sq = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double a = static_cast<double>(k[i]) * side;
        const double nearest = std::clamp(b.center[i], a, a + side);
        sq += (nearest - b.center[i]) * (nearest - b.center[i]);
      }
      if (sq < b.radius * b.radius && seen.insert(k).second) {
        Cell c;
        c.side = side;
        for (std::size_t i = 0; i < d; ++i) c.center.push_back((static_cast<double>(k[i]) + 0.5) * side);
        out.push_back(std::move(c));
        if (out.size() > max_cells) throw ResourceError("target discretization exceeds the cell cap");
      }
      for (std::size_t i = d; i-- > 0;) {
        if (++k[i] <= hi[i]) break;
        k[i] = lo[i];
      }
    }
  }
  return out;
}

nlohmann::json to_json(const TimeSet& set) {
  nlohmann::json doc{{"kind", time_kind_name(set.kind)}, {"epsilon0", set.epsilon0}};
  if (set.kind == TimeSetKind::cantor) {
    doc["lambda"] = set.lambda;
    doc["level"] = set.level;
  } else if (set.kind == TimeSetKind::interval) {
    doc["a"] = set.intervals.front().a;
    doc["b"] = set.intervals.front().b;
  } else {
    nlohmann::json pieces = nlohmann::json::array();
    for (const auto& iv : set.intervals) pieces.push_back({iv.a, iv.b});
    doc["intervals"] = std::move(pieces);
  }
  return doc;
}

TimeSet time_set_from_json(const nlohmann::json& doc) {
  try {
    const auto kind = doc.at("kind").get<std::string>();
    const double eps = doc.value("epsilon0", 0.1);
    if (kind == "interval") return TimeSet::interval(doc.value("a", eps), doc.value("b", 1.0), eps);
    if (kind == "cantor") {
      return TimeSet::cantor(doc.at("lambda").get<double>(), doc.at("level").get<std::size_t>(), eps);
    }
    if (kind == "finite_union") {
      std::vector<Interval> pieces;
      for (const auto& p : doc.at("intervals")) pieces.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      return TimeSet::finite_union(std::move(pieces), eps);
    }
    throw DomainError("unknown time set kind: " + kind);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("invalid time set: ") + e.what());
  }
}

nlohmann::json to_json(const TargetSet& set) {
  nlohmann::json doc{{"kind", target_kind_name(set.kind)}, {"d", set.dim}};
  switch (set.kind) {
    case TargetKind::point: doc["center"] = set.center; break;
    case TargetKind::ball:
      doc["center"] = set.center;
      doc["radius"] = set.radius;
      break;
    case TargetKind::cantor_product: {
      doc["lambda"] = set.lambdas;
      doc["level"] = set.level;
      nlohmann::json box = nlohmann::json::array();
      for (const auto& iv : set.box) box.push_back({iv.a, iv.b});
      doc["box"] = std::move(box);
      break;
    }
    case TargetKind::ball_union: {
      nlohmann::json balls = nlohmann::json::array();
      for (const auto& b : set.balls) balls.push_back({{"center", b.center}, {"radius", b.radius}});
      doc["balls"] = std::move(balls);
      break;
    }
  }
  return doc;
}

TargetSet target_set_from_json(const nlohmann::json& doc) {
  try {
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "point") return TargetSet::point(doc.at("center").get<std::vector<double>>());
    if (kind == "ball") {
      return TargetSet::ball(doc.at("center").get<std::vector<double>>(), doc.at("radius").get<double>());
    }
    if (kind == "cantor_product") {
      std::vector<Interval> box;
      for (const auto& p : doc.at("box")) box.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      const auto& lam = doc.at("lambda");
      std::vector<double> lambdas = lam.is_array() ? lam.get<std::vector<double>>()
                                                   : std::vector<double>(box.size(), lam.get<double>());
      return TargetSet::cantor_product(std::move(lambdas), doc.at("level").get<std::size_t>(),
                                       std::move(box));
    }
    if (kind == "ball_union") {
      std::vector<Ball> balls;
      for (const auto& b : doc.at("balls")) {
        balls.push_back({b.at("center").get<std::vector<double>>(), b.at("radius").get<double>()});
      }
      return TargetSet::ball_union(std::move(balls));
    }
    throw DomainError("unknown target kind: " + kind);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("invalid target set: ") + e.what());
  }
}

nlohmann::json to_json(const ConditionSReport& r) {
  return {{"c9_lower", r.c9_lower},       {"c9_upper", r.c9_upper},
          {"spread", r.spread},           {"lower_trend", r.lower_trend},
          {"upper_trend", r.upper_trend}, {"scales", r.scales},
          {"min_ratio", r.min_ratio},     {"max_ratio", r.max_ratio},
          {"pass", r.pass}};
}

nlohmann::json to_json(const FrostmanProfile& p) {
  return {{"radii", p.radii}, {"sup", p.sup},  {"phi", p.phi},
          {"ratio", p.ratio}, {"c4", p.c4},    {"spread", p.spread}};
}

void write_csv(const DiscreteMeasure& m, std::ostream& out) {
  for (std::size_t i = 0; i < m.dim; ++i) out << "x_" << (i + 1) << ',';
  out << "weight\n";
  char buf[32];
  for (std::size_t k = 0; k < m.size(); ++k) {
    for (double x : m.atom(k)) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", m.weights[k]);
    out << buf << '\n';
  }
}

}  // namespace fraclab::sets
