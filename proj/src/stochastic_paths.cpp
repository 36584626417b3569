#include "fraclab/stochastic_paths.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "fraclab/rng.hpp"

namespace fraclab::paths {
namespace {

// FFTW planning is not thread-safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

void require_time(double t) {
  FRACLAB_REQUIRE(std::isfinite(t) && t >= 0.0, "covariance requires finite nonnegative times");
}

}  // namespace

double fbm_covariance(double s, double t, HurstIndex hurst) {
  require_time(s);
  require_time(t);
  const double two_h = 2.0 * hurst.value();
  if (s == t) return std::pow(t, two_h);
  return 0.5 * (std::pow(t, two_h) + std::pow(s, two_h) - std::pow(std::abs(t - s), two_h));
}

double mixed_covariance(double s, double t, HurstIndex hurst, HurstIndex alpha) {
  return fbm_covariance(s, t, hurst) + fbm_covariance(s, t, alpha);
}

double fgn_autocovariance(std::size_t lag, HurstIndex hurst) {
  const double two_h = 2.0 * hurst.value();
  const double k = static_cast<double>(lag);
  if (lag == 0) return 1.0;
  return 0.5 * (std::pow(k + 1.0, two_h) - 2.0 * std::pow(k, two_h) + std::pow(k - 1.0, two_h));
}

FbmSampler::Workspace::Workspace(std::size_t m)
    : spectrum_(reinterpret_cast<double*>(fftw_alloc_complex(m / 2 + 1))),
      signal_(fftw_alloc_real(m)) {}

FbmSampler::Workspace::~Workspace() {
  fftw_free(spectrum_);
  fftw_free(signal_);
}

namespace {
fftw_complex* as_complex(double* p) { return reinterpret_cast<fftw_complex*>(p); }
}  // namespace

struct FbmSampler::Impl {
  HurstIndex hurst;
  TimeGrid grid;
  std::size_t increments = 0;  // grid.size() - 1
  std::size_t embed = 0;       // circulant size m (0 when using Cholesky)
  std::vector<double> amplitude;  // sqrt(lambda_k / m), k = 0..m/2
  double min_ratio = 0.0;
  fftw_plan plan = nullptr;
  bool cholesky = false;
  Eigen::MatrixXd factor;  // lower-triangular, path covariance at t_1..t_{n-1}
  double scale = 1.0;      // dt^H

  Impl(HurstIndex h, TimeGrid g) : hurst(h), grid(g) {}
  ~Impl() {
    if (plan != nullptr) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
  }

  bool build_embedding(const SamplerOptions& options) {
    embed = std::max<std::size_t>(2, next_pow2(2 * increments));
    std::vector<double> first_row(embed);
    for (std::size_t j = 0; j < embed; ++j) {
      first_row[j] = fgn_autocovariance(std::min(j, embed - j), hurst);
    }
    const std::size_t half = embed / 2;
    fftw_complex* out = fftw_alloc_complex(half + 1);
    {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(embed), first_row.data(), out,
                                         FFTW_ESTIMATE);
      fftw_execute(p);
      fftw_destroy_plan(p);
    }
    std::vector<double> eigen(half + 1);
    for (std::size_t k = 0; k <= half; ++k) eigen[k] = out[k][0];
    fftw_free(out);

    const double max_eig = *std::max_element(eigen.begin(), eigen.end());
    const double min_eig = *std::min_element(eigen.begin(), eigen.end());
    min_ratio = min_eig / max_eig;
    if (min_eig < -options.negativity_tol * max_eig) return false;

    amplitude.resize(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
      amplitude[k] = std::sqrt(std::max(eigen[k], 0.0) / static_cast<double>(embed));
    }
    Workspace probe(embed);
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(embed), as_complex(probe.spectrum_), probe.signal_,
                                FFTW_ESTIMATE);
    return true;
  }

  void build_cholesky(const SamplerOptions& options) {
    if (grid.size() > options.cholesky_cap) {
      throw ResourceError("grid too large for the dense Cholesky fallback");
    }
    const std::size_t k = increments;
    Eigen::MatrixXd cov(k, k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        const double c = fbm_covariance(grid[i + 1], grid[j + 1], hurst);
        cov(i, j) = c;
        cov(j, i) = c;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      throw NumericError("Cholesky factorization of the fBM covariance failed");
    }
    factor = llt.matrixL();
    cholesky = true;
  }
};

FbmSampler::FbmSampler(HurstIndex hurst, TimeGrid grid, SamplerOptions options)
    : impl_(std::make_unique<Impl>(hurst, grid)) {
  FRACLAB_REQUIRE(grid.t0() == 0.0, "fBM sampling requires a grid starting at t0 = 0");
  if (grid.size() > options.max_grid) throw ResourceError("grid exceeds the sampler cap");
  impl_->increments = grid.size() - 1;
  impl_->scale = std::pow(grid.step(), hurst.value());
  if (options.force_cholesky || !impl_->build_embedding(options)) {
    impl_->build_cholesky(options);
  }
}

FbmSampler::~FbmSampler() = default;
FbmSampler::FbmSampler(FbmSampler&&) noexcept = default;
FbmSampler& FbmSampler::operator=(FbmSampler&&) noexcept = default;

HurstIndex FbmSampler::hurst() const noexcept { return impl_->hurst; }
const TimeGrid& FbmSampler::grid() const noexcept { return impl_->grid; }
bool FbmSampler::uses_cholesky() const noexcept { return impl_->cholesky; }
double FbmSampler::min_eigen_ratio() const noexcept { return impl_->min_ratio; }

std::unique_ptr<FbmSampler::Workspace> FbmSampler::make_workspace() const {
  return std::make_unique<Workspace>(impl_->cholesky ? 2 : impl_->embed);
}

void FbmSampler::sample_component(std::uint64_t seed, std::uint64_t path, std::uint32_t component,
                                  std::span<double> out, Workspace& ws) const {
  const Impl& im = *impl_;
  if (out.size() != im.grid.size()) throw ShapeError("output span must match the grid size");
  NormalStream rng(seed, path, component);
  out[0] = 0.0;

  if (im.cholesky) {
    const std::size_t k = im.increments;
    ws.normals_.resize(k);
    for (auto& z : ws.normals_) z = rng.next_normal();
    for (std::size_t i = 0; i < k; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j <= i; ++j) acc += im.factor(i, j) * ws.normals_[j];
      out[i + 1] = acc;
    }
    return;
  }

  const std::size_t half = im.embed / 2;
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  fftw_complex* x = as_complex(ws.spectrum_);
  x[0][0] = im.amplitude[0] * rng.next_normal();
  x[0][1] = 0.0;
  x[half][0] = im.amplitude[half] * rng.next_normal();
  x[half][1] = 0.0;
  for (std::size_t k = 1; k < half; ++k) {
    const double a = im.amplitude[k] * kInvSqrt2;
    x[k][0] = a * rng.next_normal();
    x[k][1] = a * rng.next_normal();
  }
  fftw_execute_dft_c2r(im.plan, x, ws.signal_);

  double acc = 0.0;
  for (std::size_t i = 0; i < im.increments; ++i) {
    acc += ws.signal_[i];
    out[i + 1] = acc * im.scale;
  }
}

namespace {

void fill_components(const FbmSampler& sampler, std::size_t dim, std::uint64_t seed,
                     Matrix& values, bool accumulate) {
  auto ws = sampler.make_workspace();
  std::vector<double> row(sampler.grid().size());
  for (std::size_t c = 0; c < dim; ++c) {
    sampler.sample_component(seed, 0, static_cast<std::uint32_t>(c), row, *ws);
    auto target = values.row(c);
    for (std::size_t k = 0; k < row.size(); ++k) {
      target[k] = accumulate ? target[k] + row[k] : row[k];
    }
  }
}

}  // namespace

FbmPath sample_fbm(HurstIndex hurst, std::size_t dim, const TimeGrid& grid, std::uint64_t seed,
                   SamplerOptions options) {
  FRACLAB_REQUIRE(dim >= 1, "dimension must be positive");
  if (dim > options.max_grid / grid.size()) throw ResourceError("path matrix exceeds the sampler cap");
  FbmSampler sampler(hurst, grid, options);
  FbmPath path{grid, Matrix(dim, grid.size()), hurst, std::nullopt, dim, seed};
  fill_components(sampler, dim, seed, path.values, false);
  return path;
}

FbmPath sample_mixed(HurstIndex hurst, HurstIndex alpha, std::size_t dim, const TimeGrid& grid,
                     std::uint64_t seed_hurst, std::uint64_t seed_alpha,
                     SamplerOptions options) {
  FRACLAB_REQUIRE(dim >= 1, "dimension must be positive");
  if (dim > options.max_grid / grid.size()) throw ResourceError("path matrix exceeds the sampler cap");
  FbmSampler sampler_h(hurst, grid, options);
  FbmSampler sampler_a(alpha, grid, options);
  FbmPath path{grid, Matrix(dim, grid.size()), hurst, alpha, dim, seed_hurst, seed_alpha,
               PathKind::mixed};
  fill_components(sampler_h, dim, seed_hurst, path.values, false);
  fill_components(sampler_a, dim, seed_alpha, path.values, true);
  return path;
}

double conditional_variance(double t, std::span<const double> conditioning, HurstIndex hurst,
                            double dedup_tol) {
  FRACLAB_REQUIRE(!conditioning.empty(), "conditioning set must be nonempty");
  FRACLAB_REQUIRE(std::isfinite(t) && t >= 0.0 && t <= 1.0, "t must lie in [0,1]");
  std::vector<double> times;
  times.reserve(conditioning.size());
  for (double s : conditioning) {
    FRACLAB_REQUIRE(std::isfinite(s) && s >= 0.0 && s <= 1.0, "conditioning times must lie in [0,1]");
    if (std::abs(s - t) <= dedup_tol) return 0.0;
    if (s <= dedup_tol) continue;  // B(0) = 0 carries no information
    times.push_back(s);
  }
  std::sort(times.begin(), times.end());
  std::vector<double> unique;
  for (double s : times) {
    if (unique.empty() || s - unique.back() > dedup_tol) unique.push_back(s);
  }
  const double prior = fbm_covariance(t, t, hurst);
  if (unique.empty()) return prior;

  const auto n = static_cast<Eigen::Index>(unique.size());
  Eigen::MatrixXd cov(n, n);
  Eigen::VectorXd cross(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cross(i) = fbm_covariance(unique[i], t, hurst);
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double c = fbm_covariance(unique[i], unique[j], hurst);
      cov(i, j) = c;
      cov(j, i) = c;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericError("conditioning covariance is numerically singular");
  }
  const Eigen::VectorXd half = llt.matrixL().solve(cross);
  return std::max(prior - half.squaredNorm(), 0.0);
}

}  // namespace fraclab::paths
