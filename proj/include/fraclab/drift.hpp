#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "fraclab/types.hpp"

namespace fraclab::drift {

enum class DriftKind { zero, weierstrass, weierstrass_diagonal, fbm_realization, tabulated };

/// Declarative drift f: [0,1] -> R^d.
struct DriftSpec {
  DriftKind kind = DriftKind::zero;
  std::size_t dim = 1;
  double tau = 0.0;
  double theta = 0.0;
  double tol = 1e-12;  // Weierstrass truncation tolerance
  double alpha = 0.0;  // Hurst index of an fbm_realization drift
  std::uint64_t seed = 0;
  std::optional<TimeGrid> grid;  // tabulated only
  Matrix values;                 // tabulated only, dim x grid.size()

  static DriftSpec zero(std::size_t dim);
  static DriftSpec weierstrass(double tau, double theta, double tol = 1e-12);
  static DriftSpec weierstrass_diagonal(std::size_t dim, double tau, double theta,
                                        double tol = 1e-12);
  static DriftSpec fbm_realization(HurstIndex alpha, std::size_t dim, std::uint64_t seed);
  static DriftSpec tabulated(TimeGrid grid, Matrix values);

  /// Throws DomainError / ShapeError when an invariant is violated.
  void validate() const;

  /// Closed-form drifts can be evaluated at arbitrary times.
  bool is_analytic() const noexcept;

  /// Hölder exponent of the drift when known: -log tau / log theta for
  /// Weierstrass kinds, alpha for realizations.
  std::optional<double> holder_exponent() const;
};

/// Truncated lacunary series sum_{n<=N} tau^n cos(2 pi theta^n t), N the
/// first index whose geometric tail tau^{N+1}/(1-tau) is <= tol. Accepts the
/// whole convergence domain 0 < tau < 1 < theta.
double weierstrass_eval(double tau, double theta, double t, double tol);

/// Number of terms weierstrass_eval sums for (tau, tol).
std::size_t weierstrass_terms(double tau, double tol);

/// f(t_k) for every grid point, dim x grid.size().
Matrix eval_drift(const DriftSpec& spec, const TimeGrid& grid);

/// f(t) for an analytic drift, written into out (size dim).
void eval_drift_at(const DriftSpec& spec, double t, std::span<double> out);

struct HolderOptions {
  std::size_t level_min = 1;         // coarsest dyadic window 2^-level_min
  std::size_t level_max = 30;        // clipped so windows keep >= min_window_points
  std::size_t min_window_points = 4;
  double upper_threshold = 100.0;
  double reverse_threshold = 1e-3;
  /// Largest tolerated log-log drift of the per-scale ratio toward failure.
  double trend_tol = 0.1;
};

struct HolderReport {
  double alpha = 0.0;
  double constant_upper = 0.0;
  double constant_reverse = 0.0;
  bool pass_holder = false;
  bool pass_reverse = false;
  std::vector<double> scales_used;
  std::vector<double> upper_by_scale;    // max ratio at each pair lag
  std::vector<double> reverse_by_scale;  // min ratio at each window size
  /// Slopes of the log median ratio against log scale, over scales with at
  /// least 8 pairs or windows. Negative upper_trend means the Hölder ratio
  /// grows under refinement; positive reverse_trend means oscillation fades.
  double upper_trend = 0.0;
  double reverse_trend = 0.0;
};

/// Dyadic-scale Hölder and reverse-Hölder diagnosis of a sampled function.
/// Oscillation over a window uses the largest per-coordinate range.
HolderReport holder_diagnose(const Matrix& values, const TimeGrid& grid, double alpha,
                             const HolderOptions& options = {});

nlohmann::json to_json(const DriftSpec& spec);
DriftSpec drift_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const HolderReport& report);

}  // namespace fraclab::drift
