#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fraclab/drift.hpp"
#include "fraclab/geometry.hpp"
#include "fraclab/potential.hpp"
#include "fraclab/sets.hpp"
#include "fraclab/types.hpp"

namespace fraclab::hitting {

struct HitRule {
  double radius = 0.0;
  /// Adds kappa * dt^H * sqrt(log(1/dt)) to the radius.
  bool holder_correction = false;
  double kappa = 2.0;
  /// Distance to the straight segments between consecutive grid points in E
  /// instead of the grid points alone.
  bool segment = false;
  /// Brownian paths only (H = 1/2, no mixing, zero drift): refine near the
  /// target with exact bridge midpoints until the bridge scale is below
  /// bridge_rel times the local distance (or bridge_floor).
  bool bridge_refine = false;
  double bridge_rel = 0.05;
  double bridge_floor = 1e-5;
  /// Clopper-Pearson instead of Wilson intervals.
  bool exact_interval = false;
};

/// Monte Carlo estimate of P{(B^H + f)(E) meets F}, with B^H replaced by
/// B^H + B^alpha (independent) when alpha_mix is set.
struct HitExperiment {
  HurstIndex hurst{0.5};
  std::optional<HurstIndex> alpha_mix;
  std::size_t d = 1;
  drift::DriftSpec drift = drift::DriftSpec::zero(1);
  sets::TimeSet time_set = sets::TimeSet::interval(0.1, 1.0);
  sets::TargetSet target = sets::TargetSet::point({0.0});
  std::size_t n_paths = 1000;
  TimeGrid grid{0.0, 1.0, 4097};
  HitRule hit_rule;
  std::uint64_t seed = 0;

  void validate() const;
};

/// dt^H * sqrt(log(1/dt)) for the experiment grid.
double grid_modulus(const HitExperiment& exp);
double effective_radius(const HitExperiment& exp, double radius);

/// Path number `path` of the experiment on the full grid, drift included.
Matrix experiment_path(const HitExperiment& exp, std::size_t path);

/// Per-path distance from the path over E to F under the hit rule (grid,
/// segment or bridge-refined). Hits at radius r are exactly the paths with
/// distance <= effective_radius(r), so every radius shares these draws.
std::vector<double> path_min_distances(const HitExperiment& exp);

struct HitResult {
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::uint64_t hits = 0;
  std::uint64_t n_paths = 0;
  double radius = 0.0;
  double effective_radius = 0.0;
  std::uint64_t hits_uncorrected = 0;  // hits at the bare radius
  /// The correction exceeds the requested radius.
  bool coarse_grid = false;
};

HitResult estimate_hitting_prob(const HitExperiment& exp);

/// Counts and interval for precomputed distances.
HitResult tally(const HitExperiment& exp, const std::vector<double>& distances, double radius);

struct ScalingResult {
  std::vector<double> radii;
  std::vector<HitResult> p_table;
  std::vector<double> slopes;  // local log-log slopes between neighbouring radii
  double slope = 0.0;          // fit over all radii with hits
  double slope_stderr = 0.0;
  double tail_slope = 0.0;     // fit over the smallest resolved radii
  std::size_t tail_points = 0;
  bool plateau = false;
  bool degenerate = false;     // no hits at any radius
  bool under_resolved = false; // fewer than min_hits at the smallest radius
};

struct ScalingOptions {
  std::size_t min_hits = 20;
  std::size_t tail_points = 3;
  double plateau_slope = 0.1;
};

/// p(r) for F = ball(x, r), x the center of the experiment's point or ball
/// target, all radii from one set of paths.
ScalingResult point_hit_scaling(const HitExperiment& exp, const std::vector<double>& radii,
                                const ScalingOptions& options = {});

enum class Prediction { zero, positive, boundary, inconclusive };
const char* prediction_name(Prediction p);

struct DichotomyVerdict {
  double beta = 0.0;
  double threshold = 0.0;  // d - beta / H
  double dim_f = 0.0;
  Prediction prediction = Prediction::inconclusive;
  std::string source;
  std::string reason;
};

DichotomyVerdict dichotomy_predict(const sets::TimeSet& set, const sets::TargetSet& target,
                                   HurstIndex hurst, std::size_t d);

struct SandwichReport {
  bool consistent = true;
  std::vector<std::string> notes;
  std::optional<double> c1_from_hausdorff;  // p_hat / hausdorff value
  std::optional<double> c1_from_capacity;   // capacity / p_hat
};

/// Qualitative agreement of a hit estimate with capacity and covering-sum
/// estimates for the same experiment. plateau is the scaling verdict when a
/// radius sweep was run.
SandwichReport bound_sandwich(const HitResult& hit, const potential::CapacityEstimate& capacity,
                              const std::optional<geometry::HausdorffProfile>& hausdorff,
                              std::optional<bool> plateau = std::nullopt);

nlohmann::json to_json(const HitRule& rule);
HitRule hit_rule_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const HitExperiment& exp);
HitExperiment experiment_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const HitResult& result);
nlohmann::json to_json(const ScalingResult& result);
nlohmann::json to_json(const DichotomyVerdict& verdict);
nlohmann::json to_json(const SandwichReport& report);

/// 64-bit FNV-1a of the canonical JSON text of the experiment, as 16 hex digits.
std::string experiment_hash(const HitExperiment& exp);

struct LedgerRow {
  std::string experiment_hash;
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double radius = 0.0;
  std::uint64_t n_paths = 0;
  std::uint64_t seed = 0;
  std::uint64_t hits = 0;
  double effective_radius = 0.0;
};

/// Column order of the hit ledger.
const std::vector<std::string>& ledger_columns();

/// Appends one row, writing the header first when the file is new or empty.
void append_ledger(const std::filesystem::path& file, const HitExperiment& exp,
                   const HitResult& result);
std::vector<LedgerRow> read_ledger(const std::filesystem::path& file);
/// Row for (hash, radius) if an earlier sweep recorded it.
std::optional<LedgerRow> find_ledger_row(const std::vector<LedgerRow>& rows,
                                         const std::string& hash, double radius);

}  // namespace fraclab::hitting
