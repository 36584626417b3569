#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "fraclab/path_io.hpp"
#include "fraclab/stochastic_paths.hpp"

using namespace fraclab;
using namespace fraclab::paths;

namespace {

// Monte Carlo second moments of the process at grid indices, paths keyed by index.
struct Moments {
  std::vector<std::vector<double>> samples;  // [path][index]
};

Moments draw(const FbmSampler& sampler, std::uint64_t seed, std::size_t n_paths,
             const std::vector<std::size_t>& idx) {
  auto ws = sampler.make_workspace();
  std::vector<double> row(sampler.grid().size());
  Moments m;
  m.samples.reserve(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) {
    sampler.sample_component(seed, p, 0, row, *ws);
    std::vector<double> picked;
    for (auto k : idx) picked.push_back(row[k]);
    m.samples.push_back(std::move(picked));
  }
  return m;
}

// Mean and standard error of x_a * x_b.
std::pair<double, double> product_stats(const Moments& m, std::size_t a, std::size_t b) {
  const double n = double(m.samples.size());
  double s = 0, s2 = 0;
  for (const auto& v : m.samples) {
    const double p = v[a] * v[b];
    s += p;
    s2 += p * p;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  return {mean, std::sqrt(var / n)};
}

}  // namespace

TEST_CASE("fbm_covariance examples") {
  CHECK(fbm_covariance(0.3, 0.7, HurstIndex(0.5)) == doctest::Approx(0.3).epsilon(1e-14));
  for (double h : {0.1, 0.5, 0.9}) CHECK(fbm_covariance(1.0, 1.0, HurstIndex(h)) == 1.0);
  CHECK(fbm_covariance(0.5, 1.0, HurstIndex(0.75)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(fbm_covariance(-0.1, 0.5, HurstIndex(0.5)), DomainError);
  CHECK_THROWS_AS(HurstIndex(1.0), DomainError);
  CHECK_THROWS_AS(HurstIndex(0.0), DomainError);
}

TEST_CASE("fbm_covariance symmetry, diagonal and stationary increments") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const HurstIndex h(0.02 + 0.96 * u(gen));
    const double s = u(gen), t = u(gen);
    CHECK(fbm_covariance(s, t, h) == fbm_covariance(t, s, h));
    CHECK(fbm_covariance(t, t, h) == std::pow(t, 2 * h.value()));
    const double incr = fbm_covariance(t, t, h) + fbm_covariance(s, s, h) - 2 * fbm_covariance(s, t, h);
    CHECK(incr == doctest::Approx(std::pow(std::abs(t - s), 2 * h.value())).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("mixed_covariance examples") {
  const HurstIndex h5(0.5), h25(0.25), h8(0.8), h3(0.3);
  CHECK(mixed_covariance(1, 1, h8, h3) == 2.0);
  CHECK(mixed_covariance(0.3, 0.7, h5, h5) == doctest::Approx(0.6).epsilon(1e-14));
  // Scalar evaluation of both covariance terms, written out independently.
  const double oracle = 0.5 * (std::pow(0.25, 1.0) + 1.0 - std::pow(0.75, 1.0)) +
                        0.5 * (std::pow(0.25, 0.5) + 1.0 - std::pow(0.75, 0.5));
  CHECK(mixed_covariance(0.25, 1.0, h5, h25) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(oracle == doctest::Approx(0.5670).epsilon(1e-4));
}

TEST_CASE("mixed increment second moment obeys the two-sided alpha bound on [0,1]") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = 0.05 + 0.9 * u(gen);
    const double hv = a + (0.99 - a) * u(gen);
    const HurstIndex h(std::max(hv, a)), al(a);
    const double s = u(gen), t = u(gen);
    const double m2 = mixed_covariance(t, t, h, al) + mixed_covariance(s, s, h, al) -
                      2 * mixed_covariance(s, t, h, al);
    const double base = std::pow(std::abs(t - s), 2 * a);
    CHECK(m2 >= base * (1 - 1e-9) - 1e-15);
    CHECK(m2 <= 2 * base * (1 + 1e-9) + 1e-15);
  }
}

TEST_CASE("sample_fbm: Brownian variance and independent increments") {
  const TimeGrid grid(0.0, 1.0, 1025);
  FbmSampler sampler(HurstIndex(0.5), grid);
  CHECK_FALSE(sampler.uses_cholesky());
  const auto m = draw(sampler, 7, 10000, {512, 1024});
  const auto [var1, se1] = product_stats(m, 1, 1);
  CHECK(std::abs(var1 - 1.0) < 0.05);

  double s = 0, sa = 0, sb = 0, saa = 0, sbb = 0;
  for (const auto& v : m.samples) {
    const double a = v[0], b = v[1] - v[0];
    s += a * b; sa += a; sb += b; saa += a * a; sbb += b * b;
  }
  const double n = double(m.samples.size());
  const double corr = (s / n - sa / n * sb / n) /
                      std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  CHECK(std::abs(corr) < 0.05);
}

TEST_CASE("sample_fbm: H=0.75 covariance at (0.5, 1)") {
  const TimeGrid grid(0.0, 1.0, 1024);
  FbmSampler sampler(HurstIndex(0.75), grid);
  const auto m = draw(sampler, 11, 10000, {grid.nearest(0.5), 1023});
  const auto [c, se] = product_stats(m, 0, 1);
  CHECK(std::abs(c - 0.5) < 0.05);
}

TEST_CASE("empirical covariance matches the covariance function within 4 standard errors") {
  const TimeGrid grid(0.0, 1.0, 1024);
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::size_t> pick(1, 1023);
  for (double h : {0.3, 0.75}) {
    FbmSampler sampler(HurstIndex(h), grid);
    std::vector<std::size_t> idx;
    for (int i = 0; i < 20; ++i) idx.push_back(pick(gen));
    const auto m = draw(sampler, 100 + std::uint64_t(h * 100), 10000, idx);
    for (std::size_t p = 0; p < 10; ++p) {
      const auto [c, se] = product_stats(m, 2 * p, 2 * p + 1);
      const double expect = fbm_covariance(grid[idx[2 * p]], grid[idx[2 * p + 1]], HurstIndex(h));
      CHECK(std::abs(c - expect) < 4 * se);
    }
  }
}

TEST_CASE("Cholesky fallback reproduces the covariance and respects its cap") {
  const TimeGrid grid(0.0, 1.0, 65);
  SamplerOptions opts;
  opts.force_cholesky = true;
  FbmSampler sampler(HurstIndex(0.3), grid, opts);
  CHECK(sampler.uses_cholesky());
  const auto m = draw(sampler, 5, 20000, {16, 64});
  const auto [c, se] = product_stats(m, 0, 1);
  CHECK(std::abs(c - fbm_covariance(grid[16], 1.0, HurstIndex(0.3))) < 4 * se);

  opts.cholesky_cap = 32;
  CHECK_THROWS_AS(FbmSampler(HurstIndex(0.3), grid, opts), ResourceError);
  CHECK_THROWS_AS(FbmSampler(HurstIndex(0.3), TimeGrid(0.1, 1.0, 10)), DomainError);
}

TEST_CASE("circulant and Cholesky samplers agree in law") {
  const TimeGrid grid(0.0, 1.0, 33);
  SamplerOptions chol;
  chol.force_cholesky = true;
  FbmSampler a(HurstIndex(0.8), grid), b(HurstIndex(0.8), grid, chol);
  const auto ma = draw(a, 1, 20000, {8, 32});
  const auto mb = draw(b, 2, 20000, {8, 32});
  const auto [ca, sa] = product_stats(ma, 0, 1);
  const auto [cb, sb] = product_stats(mb, 0, 1);
  CHECK(std::abs(ca - cb) < 4 * std::hypot(sa, sb));
}

TEST_CASE("sample_mixed: variance, increment bound and determinism") {
  const TimeGrid grid(0.0, 1.0, 1025);
  const HurstIndex h(0.8), al(0.3);
  FbmSampler sh(h, grid), sa(al, grid);
  auto wh = sh.make_workspace();
  auto wa = sa.make_workspace();
  std::vector<double> rh(grid.size()), ra(grid.size());
  const std::size_t i0 = 512, i1 = 512 + 16;  // [0.5, 0.5 + 2^-6]
  const double hstep = grid[i1] - grid[i0];
  const int n = 10000;
  double v1 = 0, v1sq = 0, inc = 0, incsq = 0;
  for (int p = 0; p < n; ++p) {
    sh.sample_component(21, p, 0, rh, *wh);
    sa.sample_component(22, p, 0, ra, *wa);
    const double z1 = rh[1024] + ra[1024];
    const double dz = (rh[i1] + ra[i1]) - (rh[i0] + ra[i0]);
    v1 += z1 * z1; v1sq += z1 * z1 * z1 * z1;
    inc += dz * dz; incsq += dz * dz * dz * dz;
  }
  v1 /= n; inc /= n;
  CHECK(std::abs(v1 - 2.0) < 0.1);
  const double se = std::sqrt((incsq / n - inc * inc) / n);
  CHECK(inc >= std::pow(hstep, 0.6) - 4 * se);
  CHECK(inc <= 2 * std::pow(hstep, 0.6) + 4 * se);

  const auto p1 = sample_mixed(h, al, 2, grid, 21, 22);
  const auto p2 = sample_mixed(h, al, 2, grid, 21, 22);
  CHECK(p1.kind == PathKind::mixed);
  std::ostringstream b1, b2;
  write_binary(p1, b1);
  write_binary(p2, b2);
  CHECK(b1.str() == b2.str());
  // The first coordinate is the sum of the two independent fBM draws.
  const auto ph = sample_fbm(h, 2, grid, 21);
  const auto pa = sample_fbm(al, 2, grid, 22);
  CHECK(p1.values(1, 700) == ph.values(1, 700) + pa.values(1, 700));
}

TEST_CASE("sample_fbm starts at zero and components differ") {
  const auto p = sample_fbm(HurstIndex(0.4), 3, TimeGrid(0.0, 2.0, 300), 99);
  for (std::size_t c = 0; c < 3; ++c) CHECK(p.values(c, 0) == 0.0);
  CHECK(p.values(0, 150) != p.values(1, 150));
  CHECK(p.values(1, 150) != p.values(2, 150));
}

TEST_CASE("path CSV and binary formats round trip") {
  const auto p = sample_mixed(HurstIndex(0.7), HurstIndex(0.2), 2, TimeGrid(0.0, 1.0, 64), 3, 4);
  std::stringstream bin;
  write_binary(p, bin);
  const auto q = read_binary(bin);
  CHECK(q.values == p.values);
  CHECK(q.grid == p.grid);
  CHECK(q.alpha->value() == 0.2);
  CHECK(q.seed_alpha == 4);

  std::stringstream csv;
  write_csv(p, csv);
  CHECK(csv.str().rfind("t,x_1,x_2\n", 0) == 0);
  const auto t = read_csv(csv);
  CHECK(t.values == p.values);
  CHECK(t.grid.size() == 64);

  std::stringstream junk("NOTAPATH");
  CHECK_THROWS_AS(read_binary(junk), ShapeError);
}

TEST_CASE("conditional_variance examples") {
  const HurstIndex h5(0.5);
  const double on[] = {0.2, 0.5};
  CHECK(conditional_variance(0.5, on, h5) == 0.0);
  const double one[] = {0.4};
  CHECK(conditional_variance(0.7, one, h5) == doctest::Approx(0.3).epsilon(1e-12));
  // Duplicates collapse before inversion.
  const double dup[] = {0.4, 0.4, 0.4 + 1e-15};
  CHECK(conditional_variance(0.7, dup, h5) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(conditional_variance(0.5, std::span<const double>{}, h5), DomainError);
}

TEST_CASE("strong local nondeterminism: ratio bounded away from zero") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (double h : {0.3, 0.7}) {
    double lowest = 1e300;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> cond(5);
      for (auto& c : cond) c = u(gen);
      const double t = u(gen);
      double gap = 1e300;
      for (double c : cond) gap = std::min(gap, std::abs(t - c));
      const double r = conditional_variance(t, cond, HurstIndex(h)) / std::pow(gap, 2 * h);
      lowest = std::min(lowest, r);
    }
    CHECK(lowest > 0.05);
  }
}

TEST_CASE("conditional_variance never increases when points are added") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (double h : {0.2, 0.5, 0.85}) {
    for (int trial = 0; trial < 50; ++trial) {
      const double t = u(gen);
      std::vector<double> cond;
      double prev = 1e300;
      for (int k = 0; k < 8; ++k) {
        cond.push_back(u(gen));
        const double v = conditional_variance(t, cond, HurstIndex(h));
        CHECK(v <= prev + 1e-12);
        CHECK(v >= 0.0);
        prev = v;
      }
    }
  }
}
