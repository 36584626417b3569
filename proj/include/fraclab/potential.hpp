#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "json.hpp"

#include "fraclab/drift.hpp"
#include "fraclab/geometry.hpp"
#include "fraclab/sets.hpp"

namespace fraclab::potential {

/// r^{-alpha} for alpha > 0, log(e / min(r, 1)) for alpha = 0, 1 for alpha < 0.
double phi_alpha(double alpha, double r);

struct Kernel {
  double alpha = 0.0;
  double operator()(double r) const { return phi_alpha(alpha, r); }
};

struct EnergyParts {
  double off_diagonal = 0.0;
  double diagonal = 0.0;  // sum_i w_i^2 phi(cell_size / 2)
  double total() const noexcept { return off_diagonal + diagonal; }
};

EnergyParts energy_parts(const sets::DiscreteMeasure& measure, Kernel kernel,
                         const geometry::MetricSpec& metric);

/// sum_{i != j} w_i w_j phi(rho(x_i, x_j)) + sum_i w_i^2 phi(cell_size / 2).
double energy(const sets::DiscreteMeasure& measure, Kernel kernel,
              const geometry::MetricSpec& metric);

/// Candidate atoms for an equilibrium measure.
struct Support {
  std::size_t point_dim = 1;
  std::vector<double> coords;
  double cell_size = 0.0;

  std::size_t size() const noexcept { return coords.size() / point_dim; }
  std::span<const double> point(std::size_t i) const {
    return {coords.data() + i * point_dim, point_dim};
  }
};

struct MinEnergyOptions {
  /// Stop when the duality gap is at most tol * energy.
  double tol = 1e-6;
  std::size_t max_iters = 1'000'000;
  std::size_t atom_cap = std::size_t{1} << 14;
  /// Optional starting weights (defaults to uniform).
  std::vector<double> initial_weights;
};

struct EnergyReport {
  double energy = 0.0;
  std::vector<double> weights;
  std::size_t iterations = 0;
  bool converged = false;
  double duality_gap = 0.0;
};

/// Minimizes w^T G w over the probability simplex by pairwise conditional
/// gradient, G the regularized kernel matrix of the support.
EnergyReport min_energy(const Support& support, Kernel kernel, const geometry::MetricSpec& metric,
                        const MinEnergyOptions& options = {});

enum class Verdict { positive, zero, inconclusive };
const char* verdict_name(Verdict v);

struct CapacityOptions {
  MinEnergyOptions solver;
  double stable_change = 0.10;  // positive: last relative change at most this
  double growth = 0.50;         // zero: every refinement grows at least this much
  bool warm_start = true;
};

struct CapacityEstimate {
  double value = 0.0;  // 1 / finest energy unless the verdict is zero
  std::vector<double> resolutions;
  std::vector<double> energies;
  std::vector<std::size_t> atoms;
  std::vector<double> gaps;
  std::vector<bool> converged;
  Verdict verdict = Verdict::inconclusive;
};

using SupportBuilder = std::function<Support(double resolution)>;

CapacityEstimate capacity_estimate(const SupportBuilder& builder, double alpha,
                                   const geometry::MetricSpec& metric,
                                   std::span<const double> resolutions,
                                   const CapacityOptions& options = {});

/// Verdict rule applied to an energy-by-resolution table.
Verdict classify_energies(std::span<const double> energies, const CapacityOptions& options = {});

/// Cells of side <= resolution covering E (Cantor sets at the level matching
/// the resolution, capped by the set's own level). Euclidean points in R.
Support time_set_support(const sets::TimeSet& set, double resolution);

/// Cell centers of discretize_target.
Support target_support(const sets::TargetSet& target, double resolution);

/// E x F in the parabolic metric: time cells of side resolution^{1/H} times
/// space cells of side resolution.
Support product_support(const sets::TimeSet& set, const sets::TargetSet& target, double hurst,
                        double resolution);

/// Occupied parabolic cells of Gr_E(f) at scale resolution, atoms at the
/// points of the sampled graph nearest to each cell center.
Support graph_support(const drift::DriftSpec& drift, const sets::TimeSet& set, double hurst,
                      double resolution);

/// Binary layout, little-endian: magic "FRACKERN" | version u32 = 1 | n u64 |
/// point_dim u32 | alpha f64 | metric kind u32 (0 euclidean, 1 parabolic) |
/// hurst f64 | cell_size f64 | G f64[n * n] row-major.
void write_kernel_matrix(const Support& support, Kernel kernel, const geometry::MetricSpec& metric,
                         std::ostream& out);

nlohmann::json to_json(const EnergyReport& report, bool include_weights = true);
nlohmann::json to_json(const CapacityEstimate& estimate);

}  // namespace fraclab::potential
