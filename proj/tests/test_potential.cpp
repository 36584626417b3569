#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "fraclab/errors.hpp"
#include "fraclab/potential.hpp"

using namespace fraclab;
using namespace fraclab::potential;
using geometry::MetricSpec;

namespace {

sets::DiscreteMeasure with_weights(const Support& s, std::vector<double> w) {
  return {s.point_dim, s.coords, std::move(w), s.cell_size};
}

std::vector<double> random_simplex(std::mt19937_64& gen, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (double& x : w) total += (x = e(gen));
  for (double& x : w) x /= total;
  return w;
}

}  // namespace

TEST_CASE("phi alpha branches") {
  CHECK(phi_alpha(2.0, 0.5) == doctest::Approx(4.0));
  CHECK(phi_alpha(0.0, 0.5) == doctest::Approx(1.0 + std::log(2.0)));
  CHECK(phi_alpha(0.0, 3.0) == doctest::Approx(1.0));
  CHECK(phi_alpha(-1.0, 7.0) == 1.0);
  CHECK_THROWS_AS(phi_alpha(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(phi_alpha(1.0, -1.0), DomainError);
}

TEST_CASE("energy examples") {
  const auto metric = MetricSpec::euclidean(1);
  const auto uniform = sets::natural_measure(sets::TimeSet::interval(0.0, 1.0, 0.0), 8);
  CHECK(energy(uniform, Kernel{-0.5}, metric) == 1.0);

  const auto fine = sets::natural_measure(sets::TimeSet::interval(0.0, 1.0, 0.0), 14);
  CHECK(std::abs(energy(fine, Kernel{0.5}, metric) - 8.0 / 3.0) <= 0.02);

  const sets::DiscreteMeasure pair{1, {0.0, 1.0}, {0.5, 0.5}, 1e-6};
  const auto parts = energy_parts(pair, Kernel{1.0}, metric);
  CHECK(parts.off_diagonal == doctest::Approx(0.5));
  CHECK(parts.diagonal == doctest::Approx(0.5 * 2e6));

  const sets::DiscreteMeasure clash{1, {0.2, 0.2}, {0.5, 0.5}, 0.1};
  CHECK_THROWS_AS(energy(clash, Kernel{1.0}, metric), DomainError);
  CHECK_THROWS_AS(energy(pair, Kernel{1.0}, MetricSpec::euclidean(2)), ShapeError);
}

TEST_CASE("energy is permutation invariant and convex") {
  const auto metric = MetricSpec::parabolic(0.6, 1);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Support s{2, {}, 0.01};
  for (int i = 0; i < 60; ++i) {
    s.coords.push_back(u(gen));
    s.coords.push_back(u(gen));
  }
  for (int trial = 0; trial < 20; ++trial) {
    const auto w1 = random_simplex(gen, s.size());
    const auto w2 = random_simplex(gen, s.size());
    std::vector<double> mid(s.size());
    for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (w1[i] + w2[i]);
    const Kernel k{0.8};
    const double e1 = energy(with_weights(s, w1), k, metric);
    const double e2 = energy(with_weights(s, w2), k, metric);
    CHECK(energy(with_weights(s, mid), k, metric) <= 0.5 * (e1 + e2) + 1e-12);

    // Reverse the atom order.
    Support r{2, {}, s.cell_size};
    std::vector<double> rw;
    for (std::size_t i = s.size(); i-- > 0;) {
      r.coords.push_back(s.coords[2 * i]);
      r.coords.push_back(s.coords[2 * i + 1]);
      rw.push_back(w1[i]);
    }
    CHECK(energy(with_weights(r, rw), k, metric) == doctest::Approx(e1).epsilon(1e-12));
  }
}

TEST_CASE("equilibrium weights on small supports") {
  const auto metric = MetricSpec::euclidean(1);
  const Support two{1, {0.0, 1.0}, 0.1};
  const auto sym = min_energy(two, Kernel{1.0}, metric);
  CHECK(sym.converged);
  CHECK(sym.weights[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(sym.weights[1] == doctest::Approx(0.5).epsilon(1e-6));

  const Support three{1, {0.0, 0.5, 1.0}, 0.1};
  const auto eq = min_energy(three, Kernel{1.0}, metric, {1e-10});
  CHECK(eq.converged);
  CHECK(eq.weights[1] < eq.weights[0]);
  CHECK(eq.weights[1] < eq.weights[2]);

  // Grid search over the 2-simplex at step 1e-3.
  double best = INFINITY;
  for (int i = 0; i <= 1000; ++i) {
    for (int j = 0; i + j <= 1000; ++j) {
      const double w0 = i * 1e-3, w1 = j * 1e-3, w2 = 1.0 - w0 - w1;
      const double diag = phi_alpha(1.0, 0.05);
      const double e = diag * (w0 * w0 + w1 * w1 + w2 * w2) +
                       2.0 * (2.0 * w0 * w1 + 2.0 * w1 * w2 + w0 * w2);
      best = std::min(best, e);
    }
  }
  CHECK(eq.energy <= best + 1e-12);
  CHECK(eq.energy >= best - 1e-3);
}

TEST_CASE("min energy is feasible and certifies its gap") {
  const auto metric = MetricSpec::euclidean(1);
  const auto s = time_set_support(sets::TimeSet::interval(0.0, 1.0, 0.0), 1.0 / 512.0);
  REQUIRE(s.size() == 512);
  const auto report = min_energy(s, Kernel{0.5}, metric);
  const double uniform = energy(with_weights(s, std::vector<double>(512, 1.0 / 512.0)),
                                Kernel{0.5}, metric);
  CHECK(report.energy <= uniform + 1e-12);
  CHECK(report.energy <= 8.0 / 3.0);
  CHECK(report.converged);
  CHECK(report.duality_gap >= 0.0);
  CHECK(report.duality_gap <= 1e-6 * report.energy);
  CHECK(energy(with_weights(s, report.weights), Kernel{0.5}, metric) ==
        doctest::Approx(report.energy).epsilon(1e-12));

  MinEnergyOptions capped;
  capped.atom_cap = 100;
  CHECK_THROWS_AS(min_energy(s, Kernel{0.5}, metric, capped), ResourceError);
  MinEnergyOptions short_run;
  short_run.max_iters = 3;
  short_run.tol = 1e-12;
  CHECK_FALSE(min_energy(s, Kernel{0.5}, metric, short_run).converged);
}

TEST_CASE("capacity verdicts") {
  const auto metric = MetricSpec::euclidean(1);
  const std::vector<double> halving{1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512};

  const auto point = sets::TargetSet::point({0.4});
  const auto single = capacity_estimate([&](double r) { return target_support(point, r); }, 1.0,
                                        metric, halving);
  CHECK(single.verdict == Verdict::zero);
  CHECK(single.value == 0.0);

  const auto interval = sets::TimeSet::interval(0.0, 1.0, 0.0);
  auto builder = [&](double r) { return time_set_support(interval, r); };
  const auto pos = capacity_estimate(builder, 0.5, metric, halving);
  CHECK(pos.verdict == Verdict::positive);
  CHECK(pos.value >= 3.0 / 8.0);
  CHECK(pos.value == doctest::Approx(1.0 / pos.energies.back()));

  const auto neg = capacity_estimate(builder, -0.5, metric, halving);
  CHECK(neg.verdict == Verdict::positive);
  CHECK(neg.value == 1.0);
  const auto neg_point = capacity_estimate([&](double r) { return target_support(point, r); },
                                           -2.0, metric, halving);
  CHECK(neg_point.verdict == Verdict::positive);
  CHECK(neg_point.value == 1.0);

  CHECK_THROWS_AS(capacity_estimate(builder, 0.5, metric, std::vector<double>{0.1, 0.05}),
                  DomainError);
}

TEST_CASE("capacity verdict is monotone in alpha on intervals") {
  const auto metric = MetricSpec::euclidean(1);
  const std::vector<double> ladder{1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512};
  const auto interval = sets::TimeSet::interval(0.1, 1.0);
  auto builder = [&](double r) { return time_set_support(interval, r); };
  const double alphas[] = {2.0, 1.5, 1.2, 0.9, 0.6, 0.3, 0.0};
  bool seen_positive = false;
  for (double a : alphas) {
    const auto c = capacity_estimate(builder, a, metric, ladder);
    if (seen_positive) CHECK(c.verdict == Verdict::positive);
    if (c.verdict == Verdict::positive) seen_positive = true;
  }
  CHECK(seen_positive);
  CHECK(capacity_estimate(builder, 2.0, metric, ladder).verdict == Verdict::zero);
}

TEST_CASE("classify energies") {
  CHECK(classify_energies(std::vector<double>{1.0, 1.6, 2.5, 4.0}) == Verdict::zero);
  CHECK(classify_energies(std::vector<double>{1.0, 1.3, 1.35, 1.4}) == Verdict::positive);
  CHECK(classify_energies(std::vector<double>{1.0, 1.3, 1.6, 2.0}) == Verdict::inconclusive);
}

TEST_CASE("supports") {
  const auto cantor = sets::TimeSet::cantor(1.0 / 3.0, 20);
  const double carrier = 0.9;
  for (std::size_t k : {3u, 6u}) {
    const auto s = time_set_support(cantor, carrier * std::pow(3.0, -static_cast<double>(k)));
    CHECK(s.size() == (std::size_t{1} << k));
  }
  const auto prod = product_support(sets::TimeSet::interval(0.1, 1.0),
                                    sets::TargetSet::ball({0.0, 0.0}, 0.1), 0.5, 0.1);
  CHECK(prod.point_dim == 3);
  CHECK(prod.size() > 0);
  const auto graph = graph_support(drift::DriftSpec::zero(1), sets::TimeSet::interval(0.1, 1.0),
                                   0.7, 0.05);
  CHECK(graph.point_dim == 2);
  // One atom per time cell of side r^{1/H} along [0.1, 1].
  const double cells = 0.9 / std::pow(0.05, 1.0 / 0.7);
  CHECK(std::abs(static_cast<double>(graph.size()) - cells) <= 2.0);
}

TEST_CASE("kernel dump layout and json") {
  const Support s{1, {0.0, 0.5, 1.0}, 0.1};
  std::ostringstream out;
  write_kernel_matrix(s, Kernel{1.0}, MetricSpec::euclidean(1), out);
  const std::string bytes = out.str();
  REQUIRE(bytes.size() == 8 + 4 + 8 + 4 + 8 + 4 + 8 + 8 + 9 * 8);
  CHECK(bytes.substr(0, 8) == "FRACKERN");
  double g01 = 0.0;
  std::memcpy(&g01, bytes.data() + 52 + 8, sizeof(double));
  CHECK(g01 == doctest::Approx(2.0));

  const auto doc = to_json(min_energy(s, Kernel{1.0}, MetricSpec::euclidean(1)));
  CHECK(doc.at("weights").size() == 3);
  CHECK(doc.at("converged").get<bool>());
}
