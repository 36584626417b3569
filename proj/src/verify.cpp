#include "fraclab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>

#include "fraclab/errors.hpp"
#include "fraclab/geometry.hpp"
#include "fraclab/hitting.hpp"
#include "fraclab/parallel.hpp"
#include "fraclab/potential.hpp"
#include "fraclab/rng.hpp"
#include "fraclab/sets.hpp"
#include "fraclab/stochastic_paths.hpp"

namespace fraclab::verify {
namespace {

using nlohmann::json;

const double kCantorDim = std::log(2.0) / std::log(3.0);

void add(SuiteReport& r, std::string name, std::string property, std::string tolerance,
         double observed, bool pass) {
  r.checks.push_back({std::move(name), std::move(property), std::move(tolerance), observed, pass});
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::vector<double> dyadic(int first, int last) {
  std::vector<double> out;
  for (int k = first; k <= last; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

// ---------------------------------------------------------------- covariance

SuiteReport covariance(std::uint64_t seed) {
  SuiteReport r{"covariance", seed, {}, json::object()};
  const double closed = std::max(std::abs(paths::fbm_covariance(0.3, 0.7, HurstIndex(0.5)) - 0.3),
                                 std::abs(paths::fbm_covariance(0.5, 1.0, HurstIndex(0.75)) - 0.5));
  add(r, "closed forms", "R(0.3,0.7)=0.3 at H=0.5, R(0.5,1)=0.5 at H=0.75", "abs error <= 1e-14",
      closed, closed <= 1e-14);

  const std::size_t n_paths = 10000, n_pairs = 10;
  const TimeGrid grid(0.0, 1.0, 1025);
  NormalStream pick(seed, 0, 0xC0u);
  for (double h : {0.3, 0.5, 0.75}) {
    std::vector<std::size_t> idx(2 * n_pairs);
    for (auto& k : idx) k = 1 + std::min<std::size_t>(1023, static_cast<std::size_t>(pick.next_uniform() * 1024));
    const paths::FbmSampler sampler(HurstIndex(h), grid);
    const std::uint64_t path_seed = seed + static_cast<std::uint64_t>(std::lround(h * 100));
    std::vector<double> picked(n_paths * idx.size());
    std::vector<std::unique_ptr<paths::FbmSampler::Workspace>> ws(thread_count());
    parallel_for(n_paths, [&](std::size_t p, std::size_t w) {
      if (!ws[w]) ws[w] = sampler.make_workspace();
      std::vector<double> row(grid.size());
      sampler.sample_component(path_seed, p, 0, row, *ws[w]);
      for (std::size_t j = 0; j < idx.size(); ++j) picked[p * idx.size() + j] = row[idx[j]];
    });
    double worst = 0.0;
    json table = json::array();
    for (std::size_t q = 0; q < n_pairs; ++q) {
      double s = 0.0, s2 = 0.0;
      for (std::size_t p = 0; p < n_paths; ++p) {
        const double v = picked[p * idx.size() + 2 * q] * picked[p * idx.size() + 2 * q + 1];
        s += v;
        s2 += v * v;
      }
      const double n = static_cast<double>(n_paths);
      const double mean = s / n;
      const double se = std::sqrt((s2 / n - mean * mean) / n);
      const double t1 = grid[idx[2 * q]], t2 = grid[idx[2 * q + 1]];
      const double expect = paths::fbm_covariance(t1, t2, HurstIndex(h));
      worst = std::max(worst, std::abs(mean - expect) / se);
      table.push_back({{"s", t1}, {"t", t2}, {"expected", expect}, {"empirical", mean}, {"stderr", se}});
    }
    r.data["H=" + num(h)] = table;
    add(r, "empirical covariance H=" + num(h),
        "sample covariance of 10^4 paths on 2^10 steps at 10 random pairs",
        "max |empirical - R| / stderr <= 4", worst, worst <= 4.0);
  }
  return r;
}

// ---------------------------------------------------------------------- slnd

SuiteReport slnd(std::uint64_t seed) {
  SuiteReport r{"slnd", seed, {}, json::object()};
  NormalStream u(seed, 1, 0x51u);
  auto uniform = [&](double a, double b) { return a + (b - a) * u.next_uniform(); };
  for (double h : {0.3, 0.7}) {
    double lowest = INFINITY;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> cond(5);
      for (auto& c : cond) c = uniform(0.05, 1.0);
      const double t = uniform(0.05, 1.0);
      double gap = INFINITY;
      for (double c : cond) gap = std::min(gap, std::abs(t - c));
      lowest = std::min(lowest, paths::conditional_variance(t, cond, HurstIndex(h)) / std::pow(gap, 2 * h));
    }
    add(r, "local nondeterminism H=" + num(h),
        "Var(B(t) | B(t_1..t_5)) / min_j |t - t_j|^{2H} over 100 random sets",
        "minimum ratio >= 0.01", lowest, lowest >= 0.01);
  }
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> cond(5);
    for (auto& c : cond) c = uniform(0.05, 0.9);
    const double s = *std::max_element(cond.begin(), cond.end());
    const double t = uniform(s, 1.0);
    worst = std::max(worst, std::abs(paths::conditional_variance(t, cond, HurstIndex(0.5)) - (t - s)));
  }
  add(r, "brownian conditioning", "Var(B(t) | past) = t - s for H = 1/2", "max abs error <= 1e-10",
      worst, worst <= 1e-10);
  return r;
}

// ------------------------------------------------------------------ frostman

SuiteReport frostman(std::uint64_t seed) {
  SuiteReport r{"frostman", seed, {}, json::object()};
  const auto radii = dyadic(1, 10);
  struct Case {
    std::string name;
    sets::DiscreteMeasure measure;
    double hurst;
    std::size_t d;
    double beta;
    std::size_t stride;
  };
  const auto lebesgue = sets::natural_measure(sets::TimeSet::interval(0.0, 1.0, 0.0), 10);
  const auto cantor = sets::natural_measure(sets::TimeSet::cantor(1.0 / 3.0, 14, 0.0), 14);
  const std::vector<Case> cases{{"lebesgue H=0.5 d=1", lebesgue, 0.5, 1, 1.0, 1},
                                {"lebesgue H=0.8 d=2", lebesgue, 0.8, 2, 1.0, 1},
                                {"cantor H=0.4 d=2", cantor, 0.4, 2, kCantorDim, 256},
                                {"cantor H=0.5 d=1", cantor, 0.5, 1, kCantorDim, 256}};
  for (const auto& c : cases) {
    const auto p = sets::frostman_profile(c.measure, HurstIndex(c.hurst), c.d, c.beta, radii, {c.stride});
    r.data[c.name] = sets::to_json(p);
    add(r, c.name, "sup_t int max{r^d, |s-t|^{Hd}}^{-1} nu(ds) <= C phi_{d-beta/H}(r), r = 2^-1..2^-10",
        "max/min of the ratio <= 10", p.spread, std::isfinite(p.spread) && p.spread <= 10.0);
  }
  return r;
}

// ----------------------------------------------------------------- dimension

SuiteReport dimension(std::uint64_t seed) {
  SuiteReport r{"dimension", seed, {}, json::object()};
  using namespace geometry;
  const auto interval = minkowski_dim(time_set_cloud(sets::TimeSet::interval(0.0, 1.0, 0.0), 1e-5),
                                      1e-3, 0.1, 12);
  r.data["interval"] = to_json(interval);
  add(r, "interval", "box dimension of [0,1] is 1", "|value - 1| <= 0.05", interval.value,
      std::abs(interval.value - 1.0) <= 0.05);

  const auto cantor = minkowski_dim(time_set_cloud(sets::TimeSet::cantor(1.0 / 3.0, 12, 0.0), 1e-6),
                                    1e-5, 0.1, 16);
  r.data["cantor"] = to_json(cantor);
  add(r, "cantor(1/3)", "dimension log 2 / log 3", "|value - 0.6309| <= 0.05", cantor.value,
      std::abs(cantor.value - kCantorDim) <= 0.05);

  const std::size_t n = 100001;
  const TimeGrid grid(0.0, 1.0, n);
  const auto values = drift::eval_drift(drift::DriftSpec::weierstrass(0.7, 2.0), grid);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  const auto w = minkowski_dim(graph_cloud(values, grid, idx, MetricSpec::euclidean(2)), 2e-4, 0.05, 14);
  r.data["weierstrass graph"] = to_json(w);
  const double expect = 2.0 + std::log(0.7) / std::log(2.0);
  add(r, "graph of W(0.7,2)", "Euclidean graph dimension 2 + log tau / log theta",
      "|value - 1.485| <= 0.1", w.value, std::abs(w.value - expect) <= 0.1);

  GraphDimOptions opts;
  opts.grid_points = (std::size_t{1} << 17) + 1;
  opts.r_min = 2e-3;
  opts.r_max = 0.1;
  for (double h : {0.5, 0.8}) {
    const auto g = graph_dim_parabolic(drift::DriftSpec::zero(1), sets::TimeSet::interval(0.0, 1.0, 0.0),
                                       HurstIndex(h), opts);
    const std::string name = "parabolic [0,1]x{0} H=" + num(h);
    r.data[name] = to_json(g);
    add(r, name, "rho_H dimension of the time axis is 1/H", "|value - 1/H| <= 0.1",
        g.estimate.value, std::abs(g.estimate.value - 1.0 / h) <= 0.1);
  }
  return r;
}

// ------------------------------------------------------------------ capacity

SuiteReport capacity(std::uint64_t seed) {
  SuiteReport r{"capacity", seed, {}, json::object()};
  using namespace potential;
  const auto euclid = geometry::MetricSpec::euclidean(1);

  const double e = energy(sets::natural_measure(sets::TimeSet::interval(0.0, 1.0, 0.0), 14),
                          Kernel{0.5}, euclid);
  add(r, "uniform energy alpha=0.5", "int int |s-t|^{-1/2} ds dt = 8/3 on [0,1], 2^14 atoms",
      "|value - 8/3| <= 0.02", e, std::abs(e - 8.0 / 3.0) <= 0.02);

  const std::vector<double> halving{1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512};
  const auto point = sets::TargetSet::point({0.4});
  const auto single = capacity_estimate([&](double res) { return target_support(point, res); }, 1.0,
                                        euclid, halving);
  r.data["singleton"] = to_json(single);
  add(r, "singleton", "a point has zero capacity for alpha > 0", "verdict zero",
      single.value, single.verdict == Verdict::zero);

  const auto unit = sets::TimeSet::interval(0.0, 1.0, 0.0);
  auto on_unit = [&](double res) { return time_set_support(unit, res); };
  const auto pos = capacity_estimate(on_unit, 0.5, euclid, halving);
  r.data["interval"] = to_json(pos);
  add(r, "interval alpha=0.5", "[0,1] has positive capacity below its dimension", "verdict positive",
      pos.value, pos.verdict == Verdict::positive);

  const auto neg = capacity_estimate(on_unit, -0.5, euclid, halving);
  add(r, "negative order", "capacity is 1 for alpha < 0", "value == 1 exactly", neg.value,
      neg.value == 1.0);

  const auto cantor = sets::TimeSet::cantor(1.0 / 3.0, 20, 0.1);
  std::vector<double> ladder;
  for (int k : {5, 8, 11, 14}) ladder.push_back(0.9 * std::pow(3.0, -k));
  auto on_cantor = [&](double res) { return time_set_support(cantor, res); };
  const auto above = capacity_estimate(on_cantor, kCantorDim + 0.1, euclid, ladder);
  const auto below = capacity_estimate(on_cantor, kCantorDim - 0.1, euclid, ladder);
  r.data["cantor above"] = to_json(above);
  r.data["cantor below"] = to_json(below);
  add(r, "cantor alpha=beta+0.1", "capacity vanishes above the dimension", "verdict zero",
      above.energies.back(), above.verdict == Verdict::zero);
  add(r, "cantor alpha=beta-0.1", "capacity is positive below the dimension", "verdict positive",
      below.value, below.verdict == Verdict::positive);
  return r;
}

// ------------------------------------------------------------------- hitting

hitting::HitExperiment point_experiment(double hurst, std::size_t d, std::vector<double> x,
                                        std::size_t n_paths, std::size_t grid_points,
                                        std::uint64_t seed) {
  hitting::HitExperiment e;
  e.hurst = HurstIndex(hurst);
  e.d = d;
  e.drift = drift::DriftSpec::zero(d);
  e.time_set = sets::TimeSet::interval(0.1, 1.0);
  e.target = sets::TargetSet::point(std::move(x));
  e.n_paths = n_paths;
  e.grid = TimeGrid(0.0, 1.0, grid_points);
  e.hit_rule.segment = true;
  e.seed = seed;
  return e;
}

json scaling_json(const hitting::HitExperiment& e, const hitting::ScalingResult& s) {
  return {{"experiment", hitting::to_json(e)}, {"scaling", hitting::to_json(s)}};
}

SuiteReport dichotomy(std::uint64_t seed) {
  SuiteReport r{"dichotomy", seed, {}, json::object()};
  const auto radii = dyadic(3, 7);

  auto brownian = point_experiment(0.5, 3, {0.0, 0.0, 0.0}, 20000, 4097, seed);
  brownian.hit_rule.segment = false;
  brownian.hit_rule.bridge_refine = true;
  const auto v3 = hitting::dichotomy_predict(brownian.time_set, brownian.target, brownian.hurst, 3);
  const auto s3 = hitting::point_hit_scaling(brownian, radii);
  r.data["H=0.5 d=3"] = scaling_json(brownian, s3);
  r.data["H=0.5 d=3"]["verdict"] = hitting::to_json(v3);
  add(r, "H=0.5 d=3 prediction", "points are polar when Hd > dim E", "prediction zero",
      v3.threshold - v3.dim_f, v3.prediction == hitting::Prediction::zero);
  add(r, "H=0.5 d=3 decay", "p(r) -> 0 with the radius", "log-log slope >= 0.5", s3.slope,
      !s3.degenerate && s3.slope >= 0.5);
  const double curve = s3.p_table.front().p_hat * std::sqrt(radii.back() / radii.front());
  add(r, "H=0.5 d=3 smallest radius", "upper confidence bound below the decay curve p(r_max)(r/r_max)^{1/2}",
      "ci_high(r_min) < curve", s3.p_table.back().ci_high, s3.p_table.back().ci_high < curve);

  const auto rough = point_experiment(0.3, 1, {0.0}, 10000, 16385, seed + 1);
  const auto v1 = hitting::dichotomy_predict(rough.time_set, rough.target, rough.hurst, 1);
  const auto s1 = hitting::point_hit_scaling(rough, radii);
  r.data["H=0.3 d=1"] = scaling_json(rough, s1);
  r.data["H=0.3 d=1"]["verdict"] = hitting::to_json(v1);
  add(r, "H=0.3 d=1 prediction", "points are hit with positive probability when Hd < dim E",
      "prediction positive", v1.dim_f - v1.threshold, v1.prediction == hitting::Prediction::positive);
  add(r, "H=0.3 d=1 plateau", "p(r) stays bounded away from 0", "plateau detected", s1.tail_slope,
      s1.plateau);

  const auto vc = hitting::dichotomy_predict(sets::TimeSet::cantor(1.0 / 3.0, 10),
                                             sets::TargetSet::ball({0.0, 0.0}, 0.5), HurstIndex(0.5), 2);
  r.data["cantor ball"] = hitting::to_json(vc);
  add(r, "cantor time set, ball in the plane", "threshold d - beta/H = 0.7381 below dim F = 2",
      "|threshold - 0.7381| <= 1e-4 and prediction positive", vc.threshold,
      std::abs(vc.threshold - 0.7381) <= 1e-4 && vc.prediction == hitting::Prediction::positive);
  return r;
}

std::vector<double> radii_to_modulus(const hitting::HitExperiment& e, double top, double factor) {
  std::vector<double> radii;
  const double floor = factor * hitting::grid_modulus(e);
  for (double rad = top; rad >= floor; rad /= 2) radii.push_back(rad);
  return radii;
}

SuiteReport weierstrass_nonpolar(std::uint64_t seed) {
  SuiteReport r{"weierstrass-nonpolar", seed, {}, json::object()};
  const double x = drift::weierstrass_eval(0.7, 2.0, 0.55, 1e-12);
  auto e = point_experiment(0.7, 1, {x}, 100000, 16385, seed);
  e.drift = drift::DriftSpec::weierstrass(0.7, 2.0);
  const auto radii = radii_to_modulus(e, 0.5, 8.0);
  const auto s = hitting::point_hit_scaling(e, radii);
  r.data["scaling"] = scaling_json(e, s);
  r.data["grid_modulus"] = hitting::grid_modulus(e);
  add(r, "smallest radius", "radii reach down to 8 grid moduli", "r_min / modulus >= 8",
      radii.back() / hitting::grid_modulus(e), radii.size() >= 3 && radii.back() >= 8.0 * hitting::grid_modulus(e));
  add(r, "plateau", "B^H + W_{0.7,2} hits points with positive probability in d = 1", "plateau detected",
      s.tail_slope, s.plateau);
  return r;
}

SuiteReport counterexample(std::uint64_t seed) {
  SuiteReport r{"counterexample", seed, {}, json::object()};
  const double tau = 0.6, theta = 2.0, hurst = 0.6;
  add(r, "tau range", "tau in (1/2, 2^{-2/3})", "1/2 < tau < 0.63", tau,
      tau > 0.5 && tau < std::pow(2.0, -2.0 / 3.0));
  const auto f = drift::DriftSpec::weierstrass_diagonal(2, tau, theta);
  const auto unit = sets::TimeSet::interval(0.0, 1.0, 0.0);

  geometry::GraphDimOptions opts;
  opts.grid_points = (std::size_t{1} << 17) + 1;
  opts.r_min = 2e-3;
  opts.r_max = 0.1;
  const auto g = geometry::graph_dim_parabolic(f, unit, HurstIndex(hurst), opts);
  r.data["graph_dimension"] = geometry::to_json(g);
  add(r, "graph dimension", "rho_H dimension of the graph stays below d = 2", "value <= 2.03 and < 2",
      g.estimate.value, g.estimate.value <= 1.93 + 0.1 && g.estimate.value < 2.0);

  const std::size_t n = std::size_t{1} << 18;
  const TimeGrid grid(0.0, 1.0, n + 1);
  std::vector<std::size_t> idx(n + 1);
  for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
  const auto cloud = geometry::graph_cloud(drift::eval_drift(f, grid), grid, idx,
                                           geometry::MetricSpec::parabolic(hurst, 2));
  const auto haus = geometry::hausdorff_profile(cloud, 2.0, 0.1, 2e-3, 10);
  r.data["hausdorff"] = geometry::to_json(haus);

  const double x = drift::weierstrass_eval(tau, theta, 0.55, 1e-12);
  auto e = point_experiment(hurst, 2, {x, x}, 20000, 16385, seed);
  e.drift = f;
  const auto s = hitting::point_hit_scaling(e, dyadic(3, 7));
  r.data["scaling"] = scaling_json(e, s);
  add(r, "no plateau", "B^H + f misses the point x almost surely", "plateau not detected",
      s.tail_slope, !s.plateau);
  add(r, "decay", "p(r) decays with the radius", "log-log slope >= 0.1", s.slope,
      !s.degenerate && s.slope >= 0.1);

  // Energy growth of order d - dim is below what the capacity ladder resolves,
  // so only the covering-sum side enters the comparison.
  potential::CapacityEstimate not_estimated;
  not_estimated.verdict = potential::Verdict::inconclusive;
  const auto sandwich = hitting::bound_sandwich(s.p_table.back(), not_estimated, haus, s.plateau);
  r.data["sandwich"] = hitting::to_json(sandwich);
  add(r, "covering sums", "H^d of the graph vanishes and the hit curve decays",
      "sums vanish and sandwich consistent", haus.trend, haus.vanishing && sandwich.consistent);
  return r;
}

SuiteReport scaling(std::uint64_t seed) {
  SuiteReport r{"scaling", seed, {}, json::object()};
  const auto radii = dyadic(3, 7);
  struct Case {
    std::size_t d;
    double hurst;
    std::size_t n_paths;
    std::size_t grid_points;
    bool bridge;
  };
  const Case cases[] = {{2, 0.6, 100000, 16385, false},
                        {3, 0.5, 100000, 4097, true},
                        {2, 0.8, 20000, 16385, false}};
  for (const auto& c : cases) {
    auto e = point_experiment(c.hurst, c.d, std::vector<double>(c.d, 0.0), c.n_paths, c.grid_points,
                              seed + c.d);
    if (c.bridge) {
      e.hit_rule.segment = false;
      e.hit_rule.bridge_refine = true;
    }
    const auto s = hitting::point_hit_scaling(e, radii);
    const double expect = static_cast<double>(c.d) - 1.0 / c.hurst;
    const std::string name = "d=" + std::to_string(c.d) + " H=" + num(c.hurst);
    // p(r) / r^{d - 1/H} is the empirical sandwich constant at each radius.
    double lo = INFINITY, hi = 0.0;
    for (const auto& row : s.p_table) {
      const double ratio = row.p_hat / std::pow(row.radius, expect);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    r.data[name] = scaling_json(e, s);
    r.data[name]["sandwich_band"] = {lo, hi};
    add(r, name + " slope", "log-log slope of p(r) equals d - 1/H", "|slope - (d - 1/H)| <= 0.2",
        s.slope, !s.degenerate && std::abs(s.slope - expect) <= 0.2);
    add(r, name + " sandwich", "c^{-1} r^{d-1/H} <= p(r) <= c r^{d-1/H} over r = 2^-3..2^-7",
        "max/min of p(r) / r^{d-1/H} <= 4", hi / lo, lo > 0.0 && hi / lo <= 4.0);
  }
  return r;
}

using Runner = std::function<SuiteReport(std::uint64_t)>;

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table{
      {"covariance", covariance},         {"slnd", slnd},
      {"frostman", frostman},             {"dimension", dimension},
      {"capacity", capacity},             {"dichotomy", dichotomy},
      {"weierstrass-nonpolar", weierstrass_nonpolar},
      {"counterexample", counterexample}, {"scaling", scaling}};
  return table;
}

}  // namespace

bool SuiteReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"covariance", "slnd",      "frostman",
                                              "dimension",  "capacity",  "dichotomy",
                                              "weierstrass-nonpolar", "counterexample", "scaling"};
  return names;
}

SuiteReport run_suite(const std::string& name, std::uint64_t seed) {
  const auto it = runners().find(name);
  if (it == runners().end()) throw DomainError("unknown verification suite: " + name);
  return it->second(seed);
}

json to_json(const Check& c) {
  return {{"name", c.name},
          {"property", c.property},
          {"tolerance", c.tolerance},
          {"observed", std::isfinite(c.observed) ? json(c.observed) : json(nullptr)},
          {"pass", c.pass}};
}

json to_json(const SuiteReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  return {{"suite", r.suite}, {"seed", r.seed}, {"pass", r.pass()}, {"checks", checks}, {"data", r.data}};
}

}  // namespace fraclab::verify
