#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fraclab/rng.hpp"

using namespace fraclab;

TEST_CASE("philox4x32-10 known answer") {
  const auto out = Philox4x32::apply({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);
}

TEST_CASE("streams are reproducible and distinct") {
  NormalStream a(42, 3, 1), b(42, 3, 1), c(42, 3, 2), e(42, 4, 1);
  int same_c = 0, same_e = 0;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.next_normal();
    CHECK(x == b.next_normal());
    same_c += x == c.next_normal();
    same_e += x == e.next_normal();
  }
  CHECK(same_c == 0);
  CHECK(same_e == 0);
}

TEST_CASE("uniforms stay in the open unit interval") {
  NormalStream s(1, 0, 0);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.next_uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("ziggurat normals: moments and Kolmogorov-Smirnov distance") {
  NormalStream s(2024, 0, 0);
  const int n = 400000;
  std::vector<double> xs(n);
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
  for (auto& x : xs) {
    x = s.next_normal();
    m1 += x;
    m2 += x * x;
    m3 += x * x * x;
    m4 += x * x * x * x;
  }
  m1 /= n; m2 /= n; m3 /= n; m4 /= n;
  CHECK(std::abs(m1) < 4.0 / std::sqrt(n));
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(m3) < 4.0 * std::sqrt(15.0 / n));
  CHECK(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / n));

  std::sort(xs.begin(), xs.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cdf = 0.5 * std::erfc(-xs[i] / std::sqrt(2.0));
    ks = std::max({ks, std::abs(cdf - double(i) / n), std::abs(cdf - double(i + 1) / n)});
  }
  // 1.63 / sqrt(n) is the 1% critical value.
  CHECK(ks < 1.63 / std::sqrt(double(n)));
}
