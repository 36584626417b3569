#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fraclab/types.hpp"

namespace fraclab::paths {

/// Covariance of one-dimensional fBM: (|t|^{2H} + |s|^{2H} - |t-s|^{2H}) / 2.
double fbm_covariance(double s, double t, HurstIndex hurst);

/// Covariance of the mixed process B^H + B^alpha with independent summands.
double mixed_covariance(double s, double t, HurstIndex hurst, HurstIndex alpha);

/// Autocovariance of unit-step fractional Gaussian noise at integer lag k.
double fgn_autocovariance(std::size_t lag, HurstIndex hurst);

enum class PathKind { pure_fbm, mixed };

struct FbmPath {
  TimeGrid grid;
  Matrix values;  // dim rows x grid.size() columns
  HurstIndex hurst;
  std::optional<HurstIndex> alpha;  // set for mixed paths
  std::size_t dim;
  std::uint64_t seed;
  std::uint64_t seed_alpha = 0;
  PathKind kind = PathKind::pure_fbm;
};

struct SamplerOptions {
  /// Embedding eigenvalues below -tol * max eigenvalue trigger the fallback.
  double negativity_tol = 1e-9;
  bool force_cholesky = false;
  /// Largest grid accepted by the dense Cholesky fallback.
  std::size_t cholesky_cap = 4096;
  /// Largest grid accepted at all.
  std::size_t max_grid = (std::size_t{1} << 24) + 1;
};

/// Exact sampler of one fBM coordinate on a grid starting at 0. Circulant
/// embedding of the increment covariance is the default path; a dense
/// Cholesky factor of the path covariance is used when the embedding is not
/// nonnegative definite.
///
/// Every component draw is keyed by (seed, path index, component index) so
/// the output does not depend on scheduling. Safe to share across threads;
/// each thread needs its own Workspace.
class FbmSampler {
public:
  /// Per-thread scratch buffers (FFTW-aligned).
  class Workspace {
  public:
    explicit Workspace(std::size_t m);
    ~Workspace();
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

  private:
    friend class FbmSampler;
    double* spectrum_;  // m/2 + 1 interleaved complex values
    double* signal_;
    std::vector<double> normals_;
  };

  FbmSampler(HurstIndex hurst, TimeGrid grid, SamplerOptions options = {});
  ~FbmSampler();
  FbmSampler(FbmSampler&&) noexcept;
  FbmSampler& operator=(FbmSampler&&) noexcept;
  FbmSampler(const FbmSampler&) = delete;
  FbmSampler& operator=(const FbmSampler&) = delete;

  HurstIndex hurst() const noexcept;
  const TimeGrid& grid() const noexcept;
  bool uses_cholesky() const noexcept;
  /// Smallest embedding eigenvalue divided by the largest (diagnostic).
  double min_eigen_ratio() const noexcept;

  std::unique_ptr<Workspace> make_workspace() const;

  /// Writes grid.size() values of one coordinate into out (out[0] = 0).
  void sample_component(std::uint64_t seed, std::uint64_t path, std::uint32_t component,
                        std::span<double> out, Workspace& ws) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

FbmPath sample_fbm(HurstIndex hurst, std::size_t dim, const TimeGrid& grid, std::uint64_t seed,
                   SamplerOptions options = {});

FbmPath sample_mixed(HurstIndex hurst, HurstIndex alpha, std::size_t dim, const TimeGrid& grid,
                     std::uint64_t seed_hurst, std::uint64_t seed_alpha,
                     SamplerOptions options = {});

/// Var(B(t) | B(t_1), ..., B(t_n)) by Gaussian conditioning. Conditioning
/// times closer than dedup_tol to an earlier one (or to 0, where B vanishes)
/// are dropped; t within dedup_tol of a conditioning time gives 0.
double conditional_variance(double t, std::span<const double> conditioning, HurstIndex hurst,
                            double dedup_tol = 1e-12);

}  // namespace fraclab::paths
