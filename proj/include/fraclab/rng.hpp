#pragma once

#include <array>
#include <cstdint>

namespace fraclab {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// Pure function of (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) noexcept {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }
};

/// Stream of uniform and standard normal variates identified by
/// (seed, stream, substream). Two streams with different identifiers never
/// share a Philox block.
class NormalStream {
public:
  NormalStream(std::uint64_t seed, std::uint64_t stream, std::uint32_t substream) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream),
        substream_(substream) {}

  std::uint32_t next_u32() noexcept {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double next_uniform() noexcept {
    const std::uint64_t hi = next_u32() >> 5;  // 27 bits
    const std::uint64_t lo = next_u32() >> 6;  // 26 bits
    return (static_cast<double>((hi << 26) | lo) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via the Marsaglia-Tsang ziggurat. Layer index and the
  /// signed magnitude come from disjoint bits of the same word.
  double next_normal() noexcept;

private:
  void refill() noexcept {
    const Philox4x32::Counter ctr{block_, substream_, static_cast<std::uint32_t>(stream_),
                                  static_cast<std::uint32_t>(stream_ >> 32)};
    buf_ = Philox4x32::apply(ctr, key_);
    ++block_;
    pos_ = 0;
  }

  double normal_tail(std::int32_t hz, std::uint32_t iz) noexcept;

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint32_t substream_;
  std::uint32_t block_ = 0;
  Philox4x32::Counter buf_{};
  int pos_ = 4;
};

}  // namespace fraclab
