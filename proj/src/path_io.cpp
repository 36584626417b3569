#include "fraclab/path_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace fraclab::paths {
namespace {

static_assert(std::endian::native == std::endian::little, "binary path format assumes little-endian");

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ShapeError("truncated binary path");
  return v;
}

}  // namespace

void write_csv(const FbmPath& path, std::ostream& out) {
  out << "t";
  for (std::size_t c = 0; c < path.dim; ++c) out << ",x_" << (c + 1);
  out << '\n';
  for (std::size_t k = 0; k < path.grid.size(); ++k) {
    out << format_double(path.grid[k]);
    for (std::size_t c = 0; c < path.dim; ++c) out << ',' << format_double(path.values(c, k));
    out << '\n';
  }
}

TabulatedPath read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ShapeError("empty CSV");
  std::size_t dim = 0;
  for (char ch : line) dim += ch == ',' ? 1 : 0;
  if (dim == 0 || line.rfind("t", 0) != 0) throw ShapeError("CSV header must be t,x_1,...,x_d");

  std::vector<double> times;
  std::vector<std::vector<double>> rows(dim);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> fields;
    while (std::getline(ss, cell, ',')) fields.push_back(std::stod(cell));
    if (fields.size() != dim + 1) throw ShapeError("CSV row width does not match header");
    times.push_back(fields[0]);
    for (std::size_t c = 0; c < dim; ++c) rows[c].push_back(fields[c + 1]);
  }
  if (times.size() < 2) throw ShapeError("CSV needs at least two rows");
  TimeGrid grid(times.front(), times.back(), times.size());
  const double tol = 1e-9 * std::max(1.0, std::abs(grid.t1()));
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::abs(times[k] - grid[k]) > tol) throw ShapeError("CSV time column is not a uniform grid");
  }
  Matrix values(dim, times.size());
  for (std::size_t c = 0; c < dim; ++c) {
    std::copy(rows[c].begin(), rows[c].end(), values.row(c).begin());
  }
  return {grid, std::move(values)};
}

void write_binary(const FbmPath& path, std::ostream& out) {
  out.write(kBinaryMagic, sizeof kBinaryMagic);
  put<std::uint32_t>(out, kBinaryVersion);
  put<double>(out, path.hurst.value());
  put<double>(out, path.alpha ? path.alpha->value() : std::numeric_limits<double>::quiet_NaN());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(path.dim));
  put<std::uint64_t>(out, path.grid.size());
  put<std::uint64_t>(out, path.seed);
  put<std::uint64_t>(out, path.seed_alpha);
  put<double>(out, path.grid.t0());
  put<double>(out, path.grid.t1());
  const auto& data = path.values.data();
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
}

FbmPath read_binary(std::istream& in) {
  char magic[sizeof kBinaryMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kBinaryMagic, sizeof magic) != 0) {
    throw ShapeError("not a binary path file");
  }
  if (get<std::uint32_t>(in) != kBinaryVersion) throw ShapeError("unsupported binary path version");
  const double hurst = get<double>(in);
  const double alpha = get<double>(in);
  const auto dim = get<std::uint32_t>(in);
  const auto n = get<std::uint64_t>(in);
  const auto seed = get<std::uint64_t>(in);
  const auto seed_alpha = get<std::uint64_t>(in);
  const double t0 = get<double>(in);
  const double t1 = get<double>(in);
  FbmPath path{TimeGrid(t0, t1, n), Matrix(dim, n), HurstIndex(hurst), std::nullopt, dim, seed,
               seed_alpha};
  if (!std::isnan(alpha)) {
    path.alpha = HurstIndex(alpha);
    path.kind = PathKind::mixed;
  }
  auto& data = path.values.data();
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!in) throw ShapeError("truncated binary path values");
  return path;
}

}  // namespace fraclab::paths
