#pragma once

#include <iosfwd>

#include "fraclab/stochastic_paths.hpp"

namespace fraclab::paths {

/// CSV with header "t,x_1,...,x_d", one row per grid point, %.17g values.
void write_csv(const FbmPath& path, std::ostream& out);

struct TabulatedPath {
  TimeGrid grid;
  Matrix values;
};

/// Reads the CSV layout written by write_csv. The time column must be a
/// uniform grid (checked to 1e-9 relative).
TabulatedPath read_csv(std::istream& in);

/// Binary column format, little-endian:
///   magic "FRACPATH" (8 bytes) | version u32 = 1 | hurst f64 | alpha f64 (NaN
///   for pure fBM) | dim u32 | n u64 | seed u64 | seed_alpha u64 | t0 f64 |
///   t1 f64 | values f64[dim * n], row-major by component.
void write_binary(const FbmPath& path, std::ostream& out);
FbmPath read_binary(std::istream& in);

inline constexpr char kBinaryMagic[8] = {'F', 'R', 'A', 'C', 'P', 'A', 'T', 'H'};
inline constexpr std::uint32_t kBinaryVersion = 1;

}  // namespace fraclab::paths
