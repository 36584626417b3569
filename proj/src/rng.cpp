#include "fraclab/rng.hpp"

#include <cmath>
#include <cstdlib>

namespace fraclab {
namespace {

struct ZigguratTables {
  std::array<std::uint32_t, 128> kn{};
  std::array<double, 128> wn{};
  std::array<double, 128> fn{};

  ZigguratTables() {
    const double m1 = 2147483648.0;
    const double vn = 9.91256303526217e-3;
    double dn = 3.442619855899;
    double tn = dn;
    const double q = vn / std::exp(-0.5 * dn * dn);
    kn[0] = static_cast<std::uint32_t>((dn / q) * m1);
    kn[1] = 0;
    wn[0] = q / m1;
    wn[127] = dn / m1;
    fn[0] = 1.0;
    fn[127] = std::exp(-0.5 * dn * dn);
    for (int i = 126; i >= 1; --i) {
      dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
      kn[i + 1] = static_cast<std::uint32_t>((dn / tn) * m1);
      tn = dn;
      fn[i] = std::exp(-0.5 * dn * dn);
      wn[i] = dn / m1;
    }
  }
};

const ZigguratTables& tables() {
  static const ZigguratTables t;
  return t;
}

constexpr double kTailStart = 3.442619855899;

}  // namespace

double NormalStream::next_normal() noexcept {
  const auto& t = tables();
  const std::uint32_t u = next_u32();
  const std::uint32_t iz = u & 127u;
  const auto hz = static_cast<std::int32_t>(u & ~127u);
  if (static_cast<std::uint32_t>(std::abs(static_cast<std::int64_t>(hz))) < t.kn[iz]) {
    return hz * t.wn[iz];
  }
  return normal_tail(hz, iz);
}

double NormalStream::normal_tail(std::int32_t hz, std::uint32_t iz) noexcept {
  const auto& t = tables();
  for (;;) {
    double x = hz * t.wn[iz];
    if (iz == 0) {
      double y = 0.0;
      do {
        x = -std::log(next_uniform()) / kTailStart;
        y = -std::log(next_uniform());
      } while (y + y < x * x);
      return hz > 0 ? kTailStart + x : -kTailStart - x;
    }
    if (t.fn[iz] + next_uniform() * (t.fn[iz - 1] - t.fn[iz]) < std::exp(-0.5 * x * x)) {
      return x;
    }
    const std::uint32_t u = next_u32();
    iz = u & 127u;
    hz = static_cast<std::int32_t>(u & ~127u);
    if (static_cast<std::uint32_t>(std::abs(static_cast<std::int64_t>(hz))) < t.kn[iz]) {
      return hz * t.wn[iz];
    }
  }
}

}  // namespace fraclab
