#include "fraclab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <ostream>

#include "fraclab/parallel.hpp"

namespace fraclab::potential {
namespace {

constexpr std::size_t kBuilderCap = std::size_t{1} << 22;
constexpr std::size_t kDoubleDenseCap = std::size_t{1} << 13;
constexpr std::size_t kRefreshEvery = 25000;

double fast_distance(const geometry::MetricSpec& metric, const double* a, const double* b) {
  const std::size_t k = metric.point_dim();
  std::size_t first = 0;
  double time = 0.0;
  if (metric.kind == geometry::MetricKind::parabolic) {
    time = std::pow(std::abs(a[0] - b[0]), metric.hurst);
    first = 1;
  }
  double sq = 0.0;
  for (std::size_t c = first; c < k; ++c) sq += (a[c] - b[c]) * (a[c] - b[c]);
  return std::max(time, std::sqrt(sq));
}

void check_support(const Support& s, const geometry::MetricSpec& metric) {
  metric.validate();
  if (s.point_dim != metric.point_dim()) throw ShapeError("support dimension does not match the metric");
  if (s.coords.empty() || s.coords.size() % s.point_dim != 0) {
    throw ShapeError("support is empty or ragged");
  }
  FRACLAB_REQUIRE(std::isfinite(s.cell_size) && s.cell_size > 0.0, "cell size must be positive");
}

// Kernel entries for the support, with the diagonal regularized at half a cell.
struct Entries {
  const Support& s;
  const geometry::MetricSpec& metric;
  Kernel kernel;
  double diag;

  double operator()(std::size_t i, std::size_t j) const {
    if (i == j) return diag;
    const double r = fast_distance(metric, s.coords.data() + i * s.point_dim,
                                   s.coords.data() + j * s.point_dim);
    if (r <= 0.0) throw DomainError("support has coincident atoms");
    return kernel(r);
  }
};

template <class T>
std::vector<T> assemble(const Entries& entries, std::size_t n) {
  std::vector<T> g(n * n);
  parallel_for(n, [&](std::size_t i, std::size_t) {
    g[i * n + i] = static_cast<T>(entries.diag);
    for (std::size_t j = i + 1; j < n; ++j) {
      const T v = static_cast<T>(entries(i, j));
      g[i * n + j] = v;
      g[j * n + i] = v;
    }
  });
  return g;
}

// Column access for the solver: a dense matrix when it fits, else on the fly.
class Gram {
public:
  Gram(const Entries& entries, std::size_t n) : entries_(entries), n_(n) {
    if (n <= kDoubleDenseCap) {
      dense_ = assemble<double>(entries, n);
    } else if (n <= (std::size_t{1} << 14)) {
      dense_f_ = assemble<float>(entries, n);
    }
  }

  double operator()(std::size_t i, std::size_t j) const {
    if (!dense_.empty()) return dense_[i * n_ + j];
    if (!dense_f_.empty()) return dense_f_[i * n_ + j];
    return entries_(i, j);
  }

  // g += s * (G e_i - G e_j)
  void add_column_difference(std::vector<double>& g, std::size_t i, std::size_t j, double s) const {
    if (!dense_.empty()) {
      const double* ci = dense_.data() + i * n_;
      const double* cj = dense_.data() + j * n_;
      for (std::size_t k = 0; k < n_; ++k) g[k] += s * (ci[k] - cj[k]);
    } else if (!dense_f_.empty()) {
      const float* ci = dense_f_.data() + i * n_;
      const float* cj = dense_f_.data() + j * n_;
      for (std::size_t k = 0; k < n_; ++k) {
        g[k] += s * (static_cast<double>(ci[k]) - static_cast<double>(cj[k]));
      }
    } else {
      for (std::size_t k = 0; k < n_; ++k) g[k] += s * (entries_(i, k) - entries_(j, k));
    }
  }

  std::vector<double> apply(const std::vector<double>& w) const {
    std::vector<double> g(n_, 0.0);
    parallel_for(n_, [&](std::size_t i, std::size_t) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n_; ++k) {
        if (w[k] != 0.0) acc += (*this)(i, k) * w[k];
      }
      g[i] = acc;
    });
    return g;
  }

private:
  const Entries& entries_;
  std::size_t n_;
  std::vector<double> dense_;
  std::vector<float> dense_f_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Exact double-precision quadratic form, upper-triangle rows summed in index order.
double quadratic_form(const Entries& entries, const std::vector<double>& w) {
  const std::size_t n = w.size();
  std::vector<double> rows(n, 0.0);
  parallel_for(n, [&](std::size_t i, std::size_t) {
    if (w[i] == 0.0) return;
    double acc = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (w[j] != 0.0) acc += w[j] * entries(i, j);
    }
    rows[i] = w[i] * acc;
  });
  double off = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    off += rows[i];
    sq += w[i] * w[i];
  }
  return 2.0 * off + sq * entries.diag;
}

std::vector<double> normalized_start(const std::vector<double>& init, std::size_t n) {
  if (init.empty()) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  if (init.size() != n) throw ShapeError("initial weights must match the support size");
  double total = 0.0;
  for (double x : init) {
    FRACLAB_REQUIRE(std::isfinite(x) && x >= 0.0, "initial weights must be nonnegative");
    total += x;
  }
  FRACLAB_REQUIRE(total > 0.0, "initial weights must not all vanish");
  std::vector<double> w(init);
  for (double& x : w) x /= total;
  return w;
}

// Spreads each coarse weight evenly over the fine atoms nearest to it.
std::vector<double> transfer_weights(const Support& coarse, const std::vector<double>& weights,
                                     const Support& fine, const geometry::MetricSpec& metric) {
  const std::size_t nf = fine.size();
  const std::size_t nc = coarse.size();
  std::vector<std::size_t> owner(nf);
  parallel_for(nf, [&](std::size_t i, std::size_t) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < nc; ++c) {
      const double r = fast_distance(metric, fine.coords.data() + i * fine.point_dim,
                                     coarse.coords.data() + c * coarse.point_dim);
      if (r < best) {
        best = r;
        arg = c;
      }
    }
    owner[i] = arg;
  });
  std::vector<std::size_t> share(nc, 0);
  for (std::size_t o : owner) ++share[o];
  std::vector<double> w(nf);
  for (std::size_t i = 0; i < nf; ++i) w[i] = weights[owner[i]] / static_cast<double>(share[owner[i]]);
  return w;
}

void push_cell(Support& s, std::span<const double> x) {
  if (s.size() >= kBuilderCap) throw ResourceError("support exceeds the atom cap");
  s.coords.insert(s.coords.end(), x.begin(), x.end());
}

}  // namespace

double phi_alpha(double alpha, double r) {
  FRACLAB_REQUIRE(std::isfinite(alpha), "kernel order must be finite");
  if (!(r > 0.0)) throw DomainError("kernel needs r > 0");
  if (alpha > 0.0) return std::pow(r, -alpha);
  if (alpha == 0.0) return 1.0 + std::log(1.0 / std::min(r, 1.0));
  return 1.0;
}

EnergyParts energy_parts(const sets::DiscreteMeasure& measure, Kernel kernel,
                         const geometry::MetricSpec& metric) {
  measure.validate();
  metric.validate();
  if (measure.dim != metric.point_dim()) throw ShapeError("measure dimension does not match the metric");
  FRACLAB_REQUIRE(measure.cell_size > 0.0, "cell size must be positive");
  const Support view{measure.dim, measure.coords, measure.cell_size};
  const Entries entries{view, metric, kernel, kernel(0.5 * measure.cell_size)};
  const auto& w = measure.weights;
  EnergyParts parts;
  double sq = 0.0;
  for (double x : w) sq += x * x;
  parts.diagonal = sq * entries.diag;
  parts.off_diagonal = quadratic_form(entries, w) - parts.diagonal;
  return parts;
}

double energy(const sets::DiscreteMeasure& measure, Kernel kernel,
              const geometry::MetricSpec& metric) {
  return energy_parts(measure, kernel, metric).total();
}

EnergyReport min_energy(const Support& support, Kernel kernel, const geometry::MetricSpec& metric,
                        const MinEnergyOptions& options) {
  check_support(support, metric);
  FRACLAB_REQUIRE(options.tol > 0.0, "solver tolerance must be positive");
  const std::size_t n = support.size();
  if (n > options.atom_cap) throw ResourceError("support exceeds the atom cap");

  EnergyReport report;
  report.weights = normalized_start(options.initial_weights, n);
  if (kernel.alpha < 0.0) {
    // Constant kernel: every probability measure has energy one.
    report.energy = 1.0;
    report.converged = true;
    return report;
  }

  const Entries entries{support, metric, kernel, kernel(0.5 * support.cell_size)};
  const Gram gram(entries, n);
  auto& w = report.weights;
  std::vector<double> g = gram.apply(w);
  double e = dot(w, g);

  std::size_t it = 0;
  while (true) {
    std::size_t imin = 0, jmax = n;
    for (std::size_t k = 1; k < n; ++k) {
      if (g[k] < g[imin]) imin = k;
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (w[k] > 0.0 && (jmax == n || g[k] > g[jmax])) jmax = k;
    }
    report.duality_gap = std::max(0.0, 2.0 * (e - g[imin]));
    if (report.duality_gap <= options.tol * e) {
      report.converged = true;
      break;
    }
    if (it >= options.max_iters || imin == jmax) break;
    ++it;

    const double a = gram(imin, imin) + gram(jmax, jmax) - 2.0 * gram(imin, jmax);
    const double b = g[imin] - g[jmax];
    double s = w[jmax];
    if (a > 0.0) s = std::min(s, -b / a);
    w[imin] += s;
    w[jmax] = s == w[jmax] ? 0.0 : w[jmax] - s;
    gram.add_column_difference(g, imin, jmax, s);
    e += 2.0 * s * b + s * s * a;

    if (it % kRefreshEvery == 0) {
      g = gram.apply(w);
      e = dot(w, g);
    }
  }
  report.iterations = it;
  // Single-precision storage above the double cap perturbs this by ~1e-7 relative.
  report.energy = dot(w, gram.apply(w));
  if (!std::isfinite(report.energy)) throw NumericError("energy is not finite");
  return report;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::positive: return "positive";
    case Verdict::zero: return "zero";
    default: return "inconclusive";
  }
}

Verdict classify_energies(std::span<const double> energies, const CapacityOptions& options) {
  if (energies.size() < 2) return Verdict::inconclusive;
  bool growing = true;
  for (std::size_t i = 1; i < energies.size(); ++i) {
    if (energies[i] < (1.0 + options.growth) * energies[i - 1]) growing = false;
  }
  if (growing) return Verdict::zero;
  const double last = energies.back();
  const double prev = energies[energies.size() - 2];
  if (std::abs(last - prev) <= options.stable_change * prev) return Verdict::positive;
  return Verdict::inconclusive;
}

CapacityEstimate capacity_estimate(const SupportBuilder& builder, double alpha,
                                   const geometry::MetricSpec& metric,
                                   std::span<const double> resolutions,
                                   const CapacityOptions& options) {
  FRACLAB_REQUIRE(resolutions.size() >= 3, "capacity needs at least three resolutions");
  for (std::size_t i = 0; i < resolutions.size(); ++i) {
    FRACLAB_REQUIRE(resolutions[i] > 0.0, "resolutions must be positive");
    if (i > 0) FRACLAB_REQUIRE(resolutions[i] < resolutions[i - 1], "resolutions must decrease");
  }
  CapacityEstimate out;
  const Kernel kernel{alpha};
  Support previous;
  std::vector<double> previous_weights;
  for (double res : resolutions) {
    const Support support = builder(res);
    MinEnergyOptions solver = options.solver;
    if (options.warm_start && !previous_weights.empty() && solver.initial_weights.empty() &&
        support.size() <= solver.atom_cap && alpha >= 0.0) {
      check_support(support, metric);
      solver.initial_weights = transfer_weights(previous, previous_weights, support, metric);
    }
    auto report = min_energy(support, kernel, metric, solver);
    out.resolutions.push_back(res);
    out.energies.push_back(report.energy);
    out.atoms.push_back(support.size());
    out.gaps.push_back(report.duality_gap);
    out.converged.push_back(report.converged);
    previous = support;
    previous_weights = std::move(report.weights);
  }
  out.verdict = classify_energies(out.energies, options);
  out.value = out.verdict == Verdict::zero ? 0.0 : 1.0 / out.energies.back();
  return out;
}

Support time_set_support(const sets::TimeSet& set, double resolution) {
  set.validate();
  FRACLAB_REQUIRE(std::isfinite(resolution) && resolution > 0.0, "resolution must be positive");
  std::vector<sets::Interval> pieces;
  if (set.kind == sets::TimeSetKind::cantor) {
    const auto carrier = set.carrier();
    const double ratio = resolution / carrier.length();
    std::size_t level = 0;
    if (ratio < 1.0) {
      level = static_cast<std::size_t>(
          std::max(0.0, std::ceil(std::log(ratio) / std::log(set.lambda) - 1e-9)));
    }
    pieces = sets::cantor_cells(set.lambda, std::min(level, set.level), carrier);
  } else {
    pieces = set.pieces();
  }
  Support s{1, {}, 0.0};
  for (const auto& iv : pieces) {
    const auto k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(iv.length() / resolution - 1e-9)));
    const double side = iv.length() / static_cast<double>(k);
    s.cell_size = std::max(s.cell_size, side);
    for (std::size_t i = 0; i < k; ++i) {
      const double x = iv.a + (static_cast<double>(i) + 0.5) * side;
      push_cell(s, std::span<const double>(&x, 1));
    }
  }
  if (s.cell_size <= 0.0) s.cell_size = resolution;
  return s;
}

Support target_support(const sets::TargetSet& target, double resolution) {
  const auto cells = sets::discretize_target(target, resolution, kBuilderCap);
  Support s{target.dim, {}, 0.0};
  for (const auto& c : cells) {
    push_cell(s, c.center);
    s.cell_size = std::max(s.cell_size, c.side);
  }
  return s;
}

Support product_support(const sets::TimeSet& set, const sets::TargetSet& target, double hurst,
                        double resolution) {
  FRACLAB_REQUIRE(hurst > 0.0 && hurst <= 1.0, "H must lie in (0, 1]");
  const Support time = time_set_support(set, std::pow(resolution, 1.0 / hurst));
  const Support space = target_support(target, resolution);
  if (time.size() * space.size() > kBuilderCap) throw ResourceError("support exceeds the atom cap");
  Support s{1 + target.dim, {}, std::max(std::pow(time.cell_size, hurst), space.cell_size)};
  std::vector<double> buf(1 + target.dim);
  for (std::size_t i = 0; i < time.size(); ++i) {
    for (std::size_t j = 0; j < space.size(); ++j) {
      buf[0] = time.coords[i];
      const auto x = space.point(j);
      std::copy(x.begin(), x.end(), buf.begin() + 1);
      push_cell(s, buf);
    }
  }
  return s;
}

Support graph_support(const drift::DriftSpec& drift, const sets::TimeSet& set, double hurst,
                      double resolution) {
  drift.validate();
  set.validate();
  FRACLAB_REQUIRE(hurst > 0.0 && hurst <= 1.0, "H must lie in (0, 1]");
  FRACLAB_REQUIRE(resolution > 0.0 && resolution < 1.0, "resolution must lie in (0, 1)");
  const auto metric = geometry::MetricSpec::parabolic(hurst, drift.dim);
  const double time_side = std::pow(resolution, 1.0 / hurst);
  const double wanted = std::ceil(4.0 / time_side) + 1.0;
  if (wanted > static_cast<double>(std::size_t{1} << 22)) {
    throw ResourceError("graph support needs too many samples");
  }
  std::size_t n = 17;
  while (static_cast<double>(n) < wanted) n = 2 * n - 1;
  const TimeGrid grid(0.0, 1.0, n);
  const Matrix values = drift::eval_drift(drift, grid);
  const auto indices = set.grid_indices(grid);
  FRACLAB_REQUIRE(!indices.empty(), "time set misses the sampling grid");

  const auto extents = geometry::cell_extents(metric, resolution);
  const std::size_t k = metric.point_dim();
  std::map<std::vector<std::int64_t>, std::size_t> seen;
  Support s{k, {}, resolution};
  std::vector<double> p(k);
  std::vector<std::int64_t> key(k);
  for (std::size_t idx : indices) {
    p[0] = grid[idx];
    for (std::size_t c = 0; c < drift.dim; ++c) p[1 + c] = values(c, idx);
    for (std::size_t c = 0; c < k; ++c) key[c] = static_cast<std::int64_t>(std::floor(p[c] / extents[c]));
    if (seen.emplace(key, s.size()).second) push_cell(s, p);
  }
  return s;
}

void write_kernel_matrix(const Support& support, Kernel kernel, const geometry::MetricSpec& metric,
                         std::ostream& out) {
  check_support(support, metric);
  const std::size_t n = support.size();
  if (n > (std::size_t{1} << 14)) throw ResourceError("kernel matrix exceeds the atom cap");
  const Entries entries{support, metric, kernel,
                        kernel.alpha < 0.0 ? 1.0 : kernel(0.5 * support.cell_size)};
  auto put = [&out](const auto& v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  out.write("FRACKERN", 8);
  put(std::uint32_t{1});
  put(static_cast<std::uint64_t>(n));
  put(static_cast<std::uint32_t>(support.point_dim));
  put(kernel.alpha);
  put(static_cast<std::uint32_t>(metric.kind == geometry::MetricKind::parabolic ? 1 : 0));
  put(metric.hurst);
  put(support.cell_size);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row[j] = entries(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!out) throw Error("failed to write kernel matrix");
}

nlohmann::json to_json(const EnergyReport& r, bool include_weights) {
  nlohmann::json doc{{"energy", r.energy},
                     {"iterations", r.iterations},
                     {"converged", r.converged},
                     {"duality_gap", r.duality_gap},
                     {"atoms", r.weights.size()}};
  if (include_weights) doc["weights"] = r.weights;
  return doc;
}

nlohmann::json to_json(const CapacityEstimate& c) {
  nlohmann::json converged = nlohmann::json::array();
  for (bool b : c.converged) converged.push_back(b);
  return {{"value", c.value},
          {"verdict", verdict_name(c.verdict)},
          {"resolutions", c.resolutions},
          {"energies", c.energies},
          {"atoms", c.atoms},
          {"duality_gaps", c.gaps},
          {"converged", converged},
          {"notes", "minimum energy over measures on a finite grid of atoms; the finest-grid "
                    "value underestimates the capacity of the set"}};
}

}  // namespace fraclab::potential
