#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fraclab/errors.hpp"
#include "fraclab/hitting.hpp"
#include "fraclab/parallel.hpp"
#include "fraclab/stats.hpp"

using namespace fraclab;
using namespace fraclab::hitting;

namespace {

HitExperiment at_time_one(double hurst, std::size_t d, sets::TargetSet target) {
  HitExperiment e;
  e.hurst = HurstIndex(hurst);
  e.d = d;
  e.drift = drift::DriftSpec::zero(d);
  e.time_set = sets::TimeSet::interval(1.0, 1.0);
  e.target = std::move(target);
  e.n_paths = 10000;
  e.grid = TimeGrid(0.0, 1.0, 257);
  e.seed = 11;
  return e;
}

HitExperiment small_plane(std::uint64_t seed) {
  HitExperiment e;
  e.hurst = HurstIndex(0.6);
  e.d = 2;
  e.drift = drift::DriftSpec::zero(2);
  e.time_set = sets::TimeSet::interval(0.1, 1.0);
  e.target = sets::TargetSet::point({0.2, -0.1});
  e.n_paths = 500;
  e.grid = TimeGrid(0.0, 1.0, 1025);
  e.hit_rule.radius = 0.05;
  e.seed = seed;
  return e;
}

Matrix constant_values(const TimeGrid& grid, const std::vector<double>& x) {
  Matrix m(x.size(), grid.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    for (std::size_t k = 0; k < grid.size(); ++k) m(c, k) = x[c];
  }
  return m;
}

}  // namespace

TEST_CASE("single-time hitting probabilities") {
  auto line = at_time_one(0.7, 1, sets::TargetSet::ball({0.0}, 1.0));
  const auto p1 = estimate_hitting_prob(line);
  CHECK(std::abs(p1.p_hat - 0.682689) <= 0.02);

  auto plane = at_time_one(0.5, 2, sets::TargetSet::ball({0.0, 0.0}, 1.0));
  const auto p2 = estimate_hitting_prob(plane);
  CHECK(std::abs(p2.p_hat - (1.0 - std::exp(-0.5))) <= 0.02);
  CHECK(p2.ci_low <= p2.p_hat);
  CHECK(p2.p_hat <= p2.ci_high);
}

TEST_CASE("far targets are not hit") {
  auto e = at_time_one(0.5, 1, sets::TargetSet::ball({10.0}, 0.1));
  e.time_set = sets::TimeSet::interval(0.1, 1.0);
  const auto r = estimate_hitting_prob(e);
  CHECK(r.hits == 0);
  CHECK(r.ci_high < 1e-3);
}

TEST_CASE("hit frequency grows with the radius and with the target") {
  auto e = small_plane(3);
  const auto dist = path_min_distances(e);
  std::uint64_t previous = 0;
  for (double r : {0.01, 0.02, 0.05, 0.1, 0.3}) {
    const auto res = tally(e, dist, r);
    CHECK(res.hits >= previous);
    previous = res.hits;
  }

  // ball(c, 0.1) inside ball(c', 0.3) with |c - c'| = 0.2: pathwise inclusion.
  auto inner = small_plane(3);
  inner.target = sets::TargetSet::ball({0.2, 0.0}, 0.1);
  inner.hit_rule.radius = 0.0;
  auto outer = inner;
  outer.target = sets::TargetSet::ball({0.0, 0.0}, 0.3);
  const auto a = path_min_distances(inner);
  const auto b = path_min_distances(outer);
  std::size_t inner_hits = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] <= 0.0) {
      ++inner_hits;
      CHECK(b[i] <= 0.0);
    }
  }
  CHECK(inner_hits > 0);
}

TEST_CASE("translating the drift and the target together changes nothing") {
  auto base = small_plane(5);
  base.target = sets::TargetSet::ball({0.0, 0.0}, 0.05);
  auto moved = base;
  const std::vector<double> x{0.75, -1.25};
  moved.drift = drift::DriftSpec::tabulated(base.grid, constant_values(base.grid, x));
  moved.target = sets::TargetSet::ball(x, 0.05);
  const auto a = path_min_distances(base);
  const auto b = path_min_distances(moved);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
  CHECK(estimate_hitting_prob(base).hits == estimate_hitting_prob(moved).hits);
}

TEST_CASE("a drift is the same as a moving target") {
  auto drifted = small_plane(9);
  drifted.n_paths = 100;
  drifted.drift = drift::DriftSpec::weierstrass_diagonal(2, 0.6, 2.0);
  auto plain = drifted;
  plain.drift = drift::DriftSpec::zero(2);

  const auto dist = path_min_distances(drifted);
  const auto f = drift::eval_drift(drifted.drift, drifted.grid);
  const auto idx = drifted.time_set.grid_indices(drifted.grid);
  const auto& x = drifted.target.center;
  for (std::size_t p = 0; p < drifted.n_paths; p += 7) {
    const auto with = experiment_path(drifted, p);
    const auto without = experiment_path(plain, p);
    double best = INFINITY;
    for (std::size_t k : idx) {
      // distance from B(t) to the moving point x - f(t)
      const double dx = without(0, k) - (x[0] - f(0, k));
      const double dy = without(1, k) - (x[1] - f(1, k));
      best = std::min(best, std::hypot(dx, dy));
      CHECK(with(0, k) == without(0, k) + f(0, k));
    }
    CHECK(best == doctest::Approx(dist[p]).epsilon(1e-12));
  }
}

TEST_CASE("wilson intervals contain the estimate") {
  for (std::uint64_t n : {100u, 1000u, 12345u}) {
    for (std::uint64_t k = 0; k <= n; k += std::max<std::uint64_t>(1, n / 50)) {
      const auto ci = stats::wilson(k, n);
      const double p = static_cast<double>(k) / static_cast<double>(n);
      CHECK(ci.low <= p);
      CHECK(p <= ci.high);
      CHECK(ci.low >= 0.0);
      CHECK(ci.high <= 1.0);
    }
  }
  auto e = small_plane(1);
  e.hit_rule.exact_interval = true;
  const auto r = estimate_hitting_prob(e);
  CHECK(r.ci_low <= r.p_hat);
  CHECK(r.p_hat <= r.ci_high);
}

TEST_CASE("holder correction and segment rule only add hits") {
  auto e = small_plane(4);
  e.hit_rule.holder_correction = true;
  const auto r = estimate_hitting_prob(e);
  CHECK(r.effective_radius == doctest::Approx(0.05 + 2.0 * grid_modulus(e)));
  CHECK(r.hits >= r.hits_uncorrected);

  auto grid_only = small_plane(4);
  auto segment = grid_only;
  segment.hit_rule.segment = true;
  const auto a = path_min_distances(grid_only);
  const auto b = path_min_distances(segment);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] <= a[i]);
}

TEST_CASE("experiment validation") {
  auto e = small_plane(0);
  e.n_paths = 50;
  CHECK_THROWS_AS(e.validate(), DomainError);

  e = small_plane(0);
  e.time_set = sets::TimeSet::interval(0.0, 1.0, 0.0);
  CHECK_THROWS_AS(e.validate(), DomainError);

  e = small_plane(0);
  e.hit_rule.bridge_refine = true;
  CHECK_THROWS_AS(e.validate(), DomainError);

  e = small_plane(0);
  e.time_set = sets::TimeSet::cantor(1.0 / 3.0, 8);
  CHECK_THROWS_AS(e.validate(), DomainError);

  e = small_plane(0);
  e.grid = TimeGrid(0.0, 1.0, (std::size_t{1} << 23) + 1);
  CHECK_THROWS_AS(e.validate(), ResourceError);

  e = small_plane(0);
  e.target = sets::TargetSet::point({0.0});
  CHECK_THROWS_AS(e.validate(), ShapeError);
}

TEST_CASE("scaling of point hitting from one set of paths") {
  auto e = small_plane(2);
  e.n_paths = 2000;
  e.hit_rule.segment = true;
  const std::vector<double> radii{0.125, 0.0625, 0.03125, 0.015625};
  const auto s = point_hit_scaling(e, radii);
  REQUIRE(s.p_table.size() == radii.size());
  for (std::size_t i = 1; i < radii.size(); ++i) CHECK(s.p_table[i].hits <= s.p_table[i - 1].hits);
  CHECK_FALSE(s.degenerate);
  CHECK(s.slope > 0.1);
  CHECK_FALSE(s.plateau);

  auto far = e;
  far.target = sets::TargetSet::point({20.0, 20.0});
  const auto none = point_hit_scaling(far, radii);
  CHECK(none.degenerate);
  CHECK_FALSE(none.plateau);
}

TEST_CASE("dichotomy predictions") {
  const auto interval = sets::TimeSet::interval(0.1, 1.0);
  const auto zero = dichotomy_predict(interval, sets::TargetSet::point({0.0, 0.0, 0.0}),
                                      HurstIndex(0.5), 3);
  CHECK(zero.threshold == doctest::Approx(1.0));
  CHECK(zero.prediction == Prediction::zero);

  const auto positive = dichotomy_predict(interval, sets::TargetSet::point({0.0}), HurstIndex(0.3), 1);
  CHECK(positive.prediction == Prediction::positive);

  const auto cantor = dichotomy_predict(sets::TimeSet::cantor(1.0 / 3.0, 10),
                                        sets::TargetSet::ball({0.0, 0.0}, 0.5), HurstIndex(0.5), 2);
  CHECK(cantor.beta == doctest::Approx(0.6309).epsilon(1e-4));
  CHECK(cantor.threshold == doctest::Approx(0.7381).epsilon(1e-4));
  CHECK(cantor.prediction == Prediction::positive);

  const auto edge = dichotomy_predict(interval, sets::TargetSet::point({0.0, 0.0}), HurstIndex(0.5), 2);
  CHECK(edge.prediction == Prediction::boundary);

  const auto degenerate = dichotomy_predict(sets::TimeSet::interval(0.5, 0.5),
                                            sets::TargetSet::point({0.0}), HurstIndex(0.5), 1);
  CHECK(degenerate.prediction == Prediction::inconclusive);
  CHECK_FALSE(degenerate.reason.empty());
}

TEST_CASE("bound sandwich") {
  // Drift-free, E = [0.1, 1], d = 1, H = 0.7, F a point: E x {x} has
  // positive capacity and the hit frequency is positive.
  const auto set = sets::TimeSet::interval(0.1, 1.0);
  const auto target = sets::TargetSet::point({0.0});
  const std::vector<double> res{0.2, 0.1, 0.05, 0.025};
  const auto cap = potential::capacity_estimate(
      [&](double r) { return potential::product_support(set, target, 0.7, r); }, 1.0,
      geometry::MetricSpec::parabolic(0.7, 1), res);
  CHECK(cap.verdict == potential::Verdict::positive);

  HitExperiment e;
  e.hurst = HurstIndex(0.7);
  e.target = target;
  e.n_paths = 1000;
  e.grid = TimeGrid(0.0, 1.0, 1025);
  e.hit_rule.radius = 0.01;
  e.hit_rule.segment = true;
  const auto hit = estimate_hitting_prob(e);
  const auto ok = bound_sandwich(hit, cap, std::nullopt, true);
  CHECK(ok.consistent);
  REQUIRE(ok.c1_from_capacity);
  CHECK(*ok.c1_from_capacity > 0.0);

  // Vanishing covering sums with a decaying hit curve.
  geometry::HausdorffProfile vanish;
  vanish.beta = 2.0;
  vanish.scales = {0.1, 0.05, 0.025};
  vanish.sums = {0.5, 0.3, 0.18};
  vanish.vanishing = true;
  potential::CapacityEstimate inconclusive;
  inconclusive.verdict = potential::Verdict::inconclusive;
  CHECK(bound_sandwich(hit, inconclusive, vanish, false).consistent);
  CHECK_FALSE(bound_sandwich(hit, inconclusive, vanish, true).consistent);

  potential::CapacityEstimate zero;
  zero.verdict = potential::Verdict::zero;
  CHECK_FALSE(bound_sandwich(hit, zero, std::nullopt, true).consistent);
  CHECK(bound_sandwich(hit, zero, std::nullopt, false).consistent);

  HitResult none;
  none.n_paths = 1000;
  CHECK_FALSE(bound_sandwich(none, cap, std::nullopt).consistent);
}

TEST_CASE("experiment json round trip and hash") {
  auto e = small_plane(42);
  e.alpha_mix = HurstIndex(0.8);
  e.drift = drift::DriftSpec::weierstrass_diagonal(2, 0.6, 2.0);
  e.time_set = sets::TimeSet::cantor(1.0 / 3.0, 6);
  e.hit_rule.holder_correction = true;
  e.hit_rule.kappa = 1.5;
  const auto back = experiment_from_json(to_json(e));
  CHECK(to_json(back).dump() == to_json(e).dump());
  CHECK(experiment_hash(back) == experiment_hash(e));
  CHECK(experiment_hash(e).size() == 16);

  auto other = e;
  other.seed = 43;
  CHECK(experiment_hash(other) != experiment_hash(e));
  CHECK_THROWS(experiment_from_json(nlohmann::json{{"hurst", 0.5}}));
}

TEST_CASE("ledger round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "fraclab_ledger_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto file = dir / "hits.csv";

  auto e = small_plane(8);
  const auto r1 = estimate_hitting_prob(e);
  append_ledger(file, e, r1);
  e.hit_rule.radius = 0.1;
  const auto r2 = estimate_hitting_prob(e);
  append_ledger(file, e, r2);

  std::ifstream in(file);
  std::string header;
  std::getline(in, header);
  CHECK(header == "experiment_hash,p_hat,ci_low,ci_high,radius,n_paths,seed,hits,effective_radius");

  const auto rows = read_ledger(file);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].hits == r1.hits);
  CHECK(rows[1].p_hat == r2.p_hat);
  CHECK(rows[1].ci_high == r2.ci_high);
  CHECK(rows[1].seed == 8);
  const auto found = find_ledger_row(rows, experiment_hash(e), 0.1);
  REQUIRE(found);
  CHECK(found->hits == r2.hits);
  CHECK_FALSE(find_ledger_row(rows, experiment_hash(e), 0.2));
  std::filesystem::remove_all(dir);
}

TEST_CASE("results do not depend on the thread count") {
  const auto saved = thread_count();
  auto e = small_plane(21);
  e.hit_rule.segment = true;
  set_thread_count(1);
  const auto one = path_min_distances(e);
  set_thread_count(4);
  const auto four = path_min_distances(e);
  set_thread_count(saved);
  CHECK(one == four);

  HitExperiment bm;
  bm.hurst = HurstIndex(0.5);
  bm.d = 3;
  bm.drift = drift::DriftSpec::zero(3);
  bm.target = sets::TargetSet::point({0.0, 0.0, 0.0});
  bm.n_paths = 200;
  bm.grid = TimeGrid(0.0, 1.0, 257);
  bm.hit_rule.radius = 0.1;
  bm.hit_rule.bridge_refine = true;
  set_thread_count(1);
  const auto b1 = path_min_distances(bm);
  set_thread_count(3);
  const auto b3 = path_min_distances(bm);
  set_thread_count(saved);
  CHECK(b1 == b3);
}
