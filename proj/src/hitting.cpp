#include "fraclab/hitting.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "fraclab/parallel.hpp"
#include "fraclab/rng.hpp"
#include "fraclab/stats.hpp"
#include "fraclab/stochastic_paths.hpp"

namespace fraclab::hitting {
namespace {

constexpr std::size_t kBatch = 64;
constexpr std::uint32_t kBridgeSubstream = 0x40000000u;
constexpr std::size_t kMaxGrid = (std::size_t{1} << 22) + 1;
constexpr std::size_t kMaxPaths = 100'000'000;
constexpr int kMaxBridgeDepth = 40;
// Bridge excursions beyond this many sqrt(dt) are ignored (probability < e^-32).
constexpr double kBridgeSigmas = 4.0;

// Everything shared by the paths of one experiment.
struct Setup {
  const HitExperiment& exp;
  paths::FbmSampler sampler;
  std::optional<paths::FbmSampler> sampler_alpha;
  Matrix drift_values;
  std::vector<std::size_t> idx;  // grid indices in E
  std::vector<std::uint8_t> joined;

  explicit Setup(const HitExperiment& e)
      : exp(e), sampler(e.hurst, e.grid), drift_values(drift::eval_drift(e.drift, e.grid)) {
    if (e.alpha_mix) sampler_alpha.emplace(*e.alpha_mix, e.grid);
    idx = e.time_set.grid_indices(e.grid);
    if (idx.empty()) throw DomainError("time set contains no grid point");
    joined.resize(idx.size(), 0);
    for (std::size_t j = 0; j + 1 < idx.size(); ++j) joined[j] = idx[j + 1] == idx[j] + 1 ? 1 : 0;
  }
};

struct Scratch {
  std::unique_ptr<paths::FbmSampler::Workspace> ws;
  std::unique_ptr<paths::FbmSampler::Workspace> ws_alpha;
  std::vector<double> component;
  std::vector<double> component_alpha;
  std::vector<double> points;  // E points, row by row
};

// Fills s.points with the d-dimensional path values at the E indices.
void sample_points(const Setup& setup, std::size_t path, Scratch& s) {
  const auto& exp = setup.exp;
  const std::size_t d = exp.d;
  const std::size_t n = exp.grid.size();
  if (!s.ws) {
    s.ws = setup.sampler.make_workspace();
    if (setup.sampler_alpha) s.ws_alpha = setup.sampler_alpha->make_workspace();
    s.component.resize(n);
    s.component_alpha.resize(n);
  }
  s.points.resize(setup.idx.size() * d);
  for (std::size_t c = 0; c < d; ++c) {
    setup.sampler.sample_component(exp.seed, path, static_cast<std::uint32_t>(c), s.component, *s.ws);
    if (setup.sampler_alpha) {
      setup.sampler_alpha->sample_component(exp.seed, path, static_cast<std::uint32_t>(d + c),
                                            s.component_alpha, *s.ws_alpha);
      for (std::size_t k = 0; k < n; ++k) s.component[k] += s.component_alpha[k];
    }
    for (std::size_t j = 0; j < setup.idx.size(); ++j) {
      const std::size_t k = setup.idx[j];
      s.points[j * d + c] = s.component[k] + setup.drift_values(c, k);
    }
  }
}

class BridgeRefiner {
public:
  BridgeRefiner(const sets::TargetSet& target, std::size_t d, const HitRule& rule, double care,
                NormalStream rng)
      : target_(target), d_(d), rule_(rule), care_(care), rng_(rng) {}

  // Lowers best using bridge points on [t0, t1] with endpoint values p, q.
  void refine(double t0, const double* p, double t1, const double* q, double& best, int depth) {
    const double dt = t1 - t0;
    const double s = target_.segment_distance({p, d_}, {q, d_});
    const double sigma = std::sqrt(dt);
    const double margin = kBridgeSigmas * sigma * std::sqrt(static_cast<double>(d_));
    if (s - margin > std::min(best, care_)) return;
    if (depth >= kMaxBridgeDepth || sigma <= std::max(rule_.bridge_floor, rule_.bridge_rel * s)) {
      best = std::min(best, s);
      return;
    }
    std::vector<double> mid(d_);
    const double sd = 0.5 * sigma;
    for (std::size_t c = 0; c < d_; ++c) mid[c] = 0.5 * (p[c] + q[c]) + sd * rng_.next_normal();
    best = std::min(best, target_.distance(mid));
    const double tm = 0.5 * (t0 + t1);
    refine(t0, p, tm, mid.data(), best, depth + 1);
    refine(tm, mid.data(), t1, q, best, depth + 1);
  }

private:
  const sets::TargetSet& target_;
  std::size_t d_;
  const HitRule& rule_;
  double care_;
  NormalStream rng_;
};

double path_distance(const Setup& setup, std::size_t path, Scratch& s, double care) {
  const auto& exp = setup.exp;
  const std::size_t d = exp.d;
  sample_points(setup, path, s);
  const std::size_t m = setup.idx.size();
  const double* pts = s.points.data();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) {
    best = std::min(best, exp.target.distance({pts + j * d, d}));
  }
  const auto& rule = exp.hit_rule;
  if (rule.bridge_refine) {
    BridgeRefiner refiner(exp.target, d, rule, care, NormalStream(exp.seed, path, kBridgeSubstream));
    for (std::size_t j = 0; j + 1 < m; ++j) {
      if (!setup.joined[j]) continue;
      refiner.refine(exp.grid[setup.idx[j]], pts + j * d, exp.grid[setup.idx[j + 1]],
                     pts + (j + 1) * d, best, 0);
    }
  } else if (rule.segment) {
    for (std::size_t j = 0; j + 1 < m; ++j) {
      if (!setup.joined[j]) continue;
      best = std::min(best, exp.target.segment_distance({pts + j * d, d}, {pts + (j + 1) * d, d}));
    }
  }
  return best;
}

std::vector<double> distances_with_care(const HitExperiment& exp, double care) {
  exp.validate();
  const Setup setup(exp);
  std::vector<double> out(exp.n_paths);
  const std::size_t batches = (exp.n_paths + kBatch - 1) / kBatch;
  std::vector<Scratch> scratch(thread_count());
  parallel_for(batches, [&](std::size_t b, std::size_t worker) {
    Scratch& s = scratch[worker];
    const std::size_t end = std::min(exp.n_paths, (b + 1) * kBatch);
    for (std::size_t p = b * kBatch; p < end; ++p) out[p] = path_distance(setup, p, s, care);
  });
  return out;
}

double fit_slope(const std::vector<double>& r, const std::vector<double>& p, double* stderr_out) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < r.size(); ++i) {
    x.push_back(std::log(r[i]));
    y.push_back(std::log(p[i]));
  }
  const auto fit = stats::fit_line(x, y);
  if (stderr_out) *stderr_out = fit.slope_stderr;
  return fit.slope;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

void HitExperiment::validate() const {
  FRACLAB_REQUIRE(d >= 1, "dimension must be positive");
  drift.validate();
  if (drift.dim != d) throw ShapeError("drift dimension must equal d");
  target.validate();
  if (target.dim != d) throw ShapeError("target dimension must equal d");
  time_set.validate();
  const auto carrier = time_set.carrier();
  FRACLAB_REQUIRE(time_set.epsilon0 > 0.0 && carrier.a >= time_set.epsilon0 - 1e-12,
                  "time set must lie in [epsilon0, 1] with epsilon0 > 0");
  FRACLAB_REQUIRE(n_paths >= 100, "at least 100 paths are required");
  if (n_paths > kMaxPaths) throw ResourceError("path count exceeds the cap");
  FRACLAB_REQUIRE(grid.t0() == 0.0, "path grid must start at 0");
  FRACLAB_REQUIRE(grid.t1() >= carrier.b - 1e-12, "path grid must cover the time set");
  if (grid.size() > kMaxGrid) throw ResourceError("path grid exceeds the cap");
  if (time_set.kind == sets::TimeSetKind::cantor) {
    const double cell = std::pow(time_set.lambda, static_cast<double>(time_set.level)) *
                        carrier.length();
    FRACLAB_REQUIRE(grid.step() <= cell * (1.0 + 1e-9),
                    "grid step must not exceed the Cantor cell length");
  }
  const auto& r = hit_rule;
  FRACLAB_REQUIRE(std::isfinite(r.radius) && r.radius >= 0.0, "hit radius must be nonnegative");
  FRACLAB_REQUIRE(std::isfinite(r.kappa) && r.kappa > 0.0, "kappa must be positive");
  if (r.bridge_refine) {
    FRACLAB_REQUIRE(hurst.value() == 0.5 && !alpha_mix,
                    "bridge refinement needs Brownian paths (H = 1/2, no mixing)");
    FRACLAB_REQUIRE(drift.kind == drift::DriftKind::zero, "bridge refinement needs zero drift");
    FRACLAB_REQUIRE(target.kind != sets::TargetKind::cantor_product,
                    "bridge refinement needs exact segment distances");
    FRACLAB_REQUIRE(r.bridge_rel > 0.0 && r.bridge_floor > 0.0, "bridge tolerances must be positive");
  }
}

double grid_modulus(const HitExperiment& exp) {
  const double dt = exp.grid.step();
  return std::pow(dt, exp.hurst.value()) * std::sqrt(std::log(1.0 / dt));
}

double effective_radius(const HitExperiment& exp, double radius) {
  if (!exp.hit_rule.holder_correction) return radius;
  return radius + exp.hit_rule.kappa * grid_modulus(exp);
}

Matrix experiment_path(const HitExperiment& exp, std::size_t path) {
  exp.validate();
  const Setup setup(exp);
  const std::size_t n = exp.grid.size();
  Matrix out(exp.d, n);
  auto ws = setup.sampler.make_workspace();
  std::unique_ptr<paths::FbmSampler::Workspace> ws_alpha;
  if (setup.sampler_alpha) ws_alpha = setup.sampler_alpha->make_workspace();
  std::vector<double> comp(n), extra(n);
  for (std::size_t c = 0; c < exp.d; ++c) {
    setup.sampler.sample_component(exp.seed, path, static_cast<std::uint32_t>(c), comp, *ws);
    if (setup.sampler_alpha) {
      setup.sampler_alpha->sample_component(exp.seed, path, static_cast<std::uint32_t>(exp.d + c),
                                            extra, *ws_alpha);
    }
    for (std::size_t k = 0; k < n; ++k) {
      out(c, k) = comp[k] + (setup.sampler_alpha ? extra[k] : 0.0) + setup.drift_values(c, k);
    }
  }
  return out;
}

std::vector<double> path_min_distances(const HitExperiment& exp) {
  return distances_with_care(exp, effective_radius(exp, exp.hit_rule.radius));
}

HitResult tally(const HitExperiment& exp, const std::vector<double>& distances, double radius) {
  if (distances.size() != exp.n_paths) throw ShapeError("one distance per path is required");
  HitResult r;
  r.n_paths = exp.n_paths;
  r.radius = radius;
  r.effective_radius = effective_radius(exp, radius);
  for (double dist : distances) {
    if (dist <= r.effective_radius) ++r.hits;
    if (dist <= radius) ++r.hits_uncorrected;
  }
  r.p_hat = static_cast<double>(r.hits) / static_cast<double>(r.n_paths);
  const auto ci = exp.hit_rule.exact_interval ? stats::clopper_pearson(r.hits, r.n_paths)
                                              : stats::wilson(r.hits, r.n_paths);
  r.ci_low = std::min(ci.low, r.p_hat);
  r.ci_high = std::max(ci.high, r.p_hat);
  r.coarse_grid = exp.hit_rule.holder_correction && r.effective_radius - radius > radius;
  return r;
}

HitResult estimate_hitting_prob(const HitExperiment& exp) {
  return tally(exp, path_min_distances(exp), exp.hit_rule.radius);
}

ScalingResult point_hit_scaling(const HitExperiment& exp, const std::vector<double>& radii,
                                const ScalingOptions& options) {
  FRACLAB_REQUIRE(radii.size() >= 4, "scaling needs at least four radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    FRACLAB_REQUIRE(std::isfinite(radii[i]) && radii[i] > 0.0, "radii must be positive");
    if (i > 0) FRACLAB_REQUIRE(radii[i] < radii[i - 1], "radii must decrease");
  }
  FRACLAB_REQUIRE(exp.target.kind == sets::TargetKind::point ||
                      exp.target.kind == sets::TargetKind::ball,
                  "scaling needs a point or ball target");
  FRACLAB_REQUIRE(options.tail_points >= 2, "tail fit needs at least two radii");

  HitExperiment centered = exp;
  centered.target = sets::TargetSet::point(exp.target.center);
  const auto dist = distances_with_care(centered, effective_radius(centered, radii.front()));

  ScalingResult out;
  out.radii = radii;
  std::vector<double> r_hit, p_hit, r_tail, p_tail;
  for (double r : radii) {
    out.p_table.push_back(tally(centered, dist, r));
    const auto& row = out.p_table.back();
    if (row.hits > 0) {
      r_hit.push_back(r);
      p_hit.push_back(row.p_hat);
    }
  }
  for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
    const auto& a = out.p_table[i];
    const auto& b = out.p_table[i + 1];
    if (a.hits > 0 && b.hits > 0) {
      out.slopes.push_back(std::log(a.p_hat / b.p_hat) / std::log(radii[i] / radii[i + 1]));
    }
  }
  out.degenerate = r_hit.empty();
  out.under_resolved = out.p_table.back().hits < options.min_hits;
  if (r_hit.size() >= 2) out.slope = fit_slope(r_hit, p_hit, &out.slope_stderr);

  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (out.p_table[i].hits >= options.min_hits) {
      r_tail.push_back(radii[i]);
      p_tail.push_back(out.p_table[i].p_hat);
    }
  }
  if (r_tail.size() > options.tail_points) {
    r_tail.erase(r_tail.begin(), r_tail.end() - static_cast<std::ptrdiff_t>(options.tail_points));
    p_tail.erase(p_tail.begin(), p_tail.end() - static_cast<std::ptrdiff_t>(options.tail_points));
  }
  out.tail_points = r_tail.size();
  if (r_tail.size() >= 2) {
    out.tail_slope = fit_slope(r_tail, p_tail, nullptr);
    out.plateau = out.tail_slope <= options.plateau_slope;
  }
  return out;
}

const char* prediction_name(Prediction p) {
  switch (p) {
    case Prediction::zero: return "zero";
    case Prediction::positive: return "positive";
    case Prediction::boundary: return "boundary";
    default: return "inconclusive";
  }
}

DichotomyVerdict dichotomy_predict(const sets::TimeSet& set, const sets::TargetSet& target,
                                   HurstIndex hurst, std::size_t d) {
  set.validate();
  target.validate();
  if (target.dim != d) throw ShapeError("target dimension must equal d");
  DichotomyVerdict v;
  v.dim_f = target.dimension();
  for (const auto& piece : set.pieces()) {
    if (set.kind != sets::TimeSetKind::cantor && piece.length() <= 0.0) {
      v.reason = "time set has a degenerate piece and no regular measure";
      return v;
    }
  }
  v.beta = set.dimension();
  v.threshold = static_cast<double>(d) - v.beta / hurst.value();
  v.source = target.kind == sets::TargetKind::point ? "point hitting: Hd against dim E"
                                                    : "dim F against d - dim E / H";
  const double gap = v.dim_f - v.threshold;
  if (std::abs(gap) <= 1e-12) {
    v.prediction = Prediction::boundary;
  } else {
    v.prediction = gap < 0.0 ? Prediction::zero : Prediction::positive;
  }
  return v;
}

SandwichReport bound_sandwich(const HitResult& hit, const potential::CapacityEstimate& capacity,
                              const std::optional<geometry::HausdorffProfile>& hausdorff,
                              std::optional<bool> plateau) {
  SandwichReport out;
  using potential::Verdict;
  if (capacity.verdict == Verdict::positive) {
    if (hit.hits == 0) {
      out.consistent = false;
      out.notes.push_back("positive capacity but no hits at the resolved radius");
    } else {
      out.notes.push_back("positive capacity and positive hit frequency");
    }
  } else if (capacity.verdict == Verdict::zero) {
    if (plateau.value_or(false)) {
      out.consistent = false;
      out.notes.push_back("zero capacity but the hit probability does not vanish with the radius");
    } else {
      out.notes.push_back("zero capacity; hit frequency decays or was not swept");
    }
  } else {
    out.notes.push_back("capacity inconclusive; no lower-side constraint");
  }
  if (hausdorff) {
    if (hausdorff->vanishing) {
      if (plateau.value_or(false)) {
        out.consistent = false;
        out.notes.push_back("covering sums vanish but the hit probability does not");
      } else {
        out.notes.push_back("covering sums vanish; compatible with probability zero");
      }
    } else if (hausdorff->diverging) {
      out.notes.push_back("covering sums diverge; no upper-side constraint");
    } else {
      out.notes.push_back("covering sums bounded");
    }
    const double h = hausdorff->sums.empty() ? 0.0 : hausdorff->sums.back();
    if (hit.p_hat > 0.0 && h > 0.0 && std::isfinite(h)) out.c1_from_hausdorff = hit.p_hat / h;
  }
  if (hit.p_hat > 0.0 && capacity.verdict == Verdict::positive && capacity.value > 0.0) {
    out.c1_from_capacity = capacity.value / hit.p_hat;
  }
  return out;
}

nlohmann::json to_json(const HitRule& r) {
  return {{"radius", r.radius},
          {"holder_correction", r.holder_correction},
          {"kappa", r.kappa},
          {"segment", r.segment},
          {"bridge_refine", r.bridge_refine},
          {"bridge_rel", r.bridge_rel},
          {"bridge_floor", r.bridge_floor},
          {"exact_interval", r.exact_interval}};
}

HitRule hit_rule_from_json(const nlohmann::json& doc) {
  try {
    HitRule r;
    r.radius = doc.value("radius", r.radius);
    r.holder_correction = doc.value("holder_correction", r.holder_correction);
    r.kappa = doc.value("kappa", r.kappa);
    r.segment = doc.value("segment", r.segment);
    r.bridge_refine = doc.value("bridge_refine", r.bridge_refine);
    r.bridge_rel = doc.value("bridge_rel", r.bridge_rel);
    r.bridge_floor = doc.value("bridge_floor", r.bridge_floor);
    r.exact_interval = doc.value("exact_interval", r.exact_interval);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("invalid hit rule: ") + e.what());
  }
}

nlohmann::json to_json(const HitExperiment& e) {
  return {{"hurst", e.hurst.value()},
          {"alpha_mix", e.alpha_mix ? nlohmann::json(e.alpha_mix->value()) : nlohmann::json()},
          {"d", e.d},
          {"drift", drift::to_json(e.drift)},
          {"time_set", sets::to_json(e.time_set)},
          {"target", sets::to_json(e.target)},
          {"n_paths", e.n_paths},
          {"grid", {{"t0", e.grid.t0()}, {"t1", e.grid.t1()}, {"n", e.grid.size()}}},
          {"hit_rule", to_json(e.hit_rule)},
          {"seed", e.seed}};
}

HitExperiment experiment_from_json(const nlohmann::json& doc) {
  try {
    HitExperiment e;
    e.hurst = HurstIndex(doc.at("hurst").get<double>());
    if (doc.contains("alpha_mix") && !doc.at("alpha_mix").is_null()) {
      e.alpha_mix = HurstIndex(doc.at("alpha_mix").get<double>());
    }
    e.d = doc.at("d").get<std::size_t>();
    e.drift = doc.contains("drift") ? drift::drift_from_json(doc.at("drift")) : drift::DriftSpec::zero(e.d);
    e.time_set = sets::time_set_from_json(doc.at("time_set"));
    e.target = sets::target_set_from_json(doc.at("target"));
    e.n_paths = doc.value("n_paths", e.n_paths);
    if (doc.contains("grid")) {
      const auto& g = doc.at("grid");
      e.grid = TimeGrid(g.value("t0", 0.0), g.value("t1", 1.0), g.at("n").get<std::size_t>());
    }
    if (doc.contains("hit_rule")) e.hit_rule = hit_rule_from_json(doc.at("hit_rule"));
    e.seed = doc.value("seed", e.seed);
    e.validate();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw DomainError(std::string("invalid hit experiment: ") + ex.what());
  }
}

nlohmann::json to_json(const HitResult& r) {
  return {{"p_hat", r.p_hat},
          {"ci_low", r.ci_low},
          {"ci_high", r.ci_high},
          {"hits", r.hits},
          {"n_paths", r.n_paths},
          {"radius", r.radius},
          {"effective_radius", r.effective_radius},
          {"hits_uncorrected", r.hits_uncorrected},
          {"coarse_grid", r.coarse_grid}};
}

nlohmann::json to_json(const ScalingResult& s) {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : s.p_table) table.push_back(to_json(row));
  return {{"radii", s.radii},
          {"p_table", table},
          {"slopes", s.slopes},
          {"slope", s.slope},
          {"slope_stderr", s.slope_stderr},
          {"tail_slope", s.tail_slope},
          {"tail_points", s.tail_points},
          {"plateau", s.plateau},
          {"degenerate", s.degenerate},
          {"under_resolved", s.under_resolved}};
}

nlohmann::json to_json(const DichotomyVerdict& v) {
  return {{"beta", v.beta},
          {"threshold", v.threshold},
          {"dim_f", v.dim_f},
          {"prediction", prediction_name(v.prediction)},
          {"source", v.source},
          {"reason", v.reason}};
}

nlohmann::json to_json(const SandwichReport& r) {
  nlohmann::json doc{{"consistent", r.consistent}, {"notes", r.notes}};
  doc["c1_from_hausdorff"] = r.c1_from_hausdorff ? nlohmann::json(*r.c1_from_hausdorff) : nlohmann::json();
  doc["c1_from_capacity"] = r.c1_from_capacity ? nlohmann::json(*r.c1_from_capacity) : nlohmann::json();
  return doc;
}

std::string experiment_hash(const HitExperiment& exp) {
  const std::string text = to_json(exp).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

const std::vector<std::string>& ledger_columns() {
  static const std::vector<std::string> cols{"experiment_hash", "p_hat",   "ci_low",
                                             "ci_high",         "radius",  "n_paths",
                                             "seed",            "hits",    "effective_radius"};
  return cols;
}

void append_ledger(const std::filesystem::path& file, const HitExperiment& exp,
                   const HitResult& result) {
  const bool fresh = !std::filesystem::exists(file) || std::filesystem::file_size(file) == 0;
  std::ofstream out(file, std::ios::app);
  if (!out) throw Error("cannot open ledger " + file.string());
  if (fresh) {
    const auto& cols = ledger_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
  }
  out << experiment_hash(exp) << ',' << format_double(result.p_hat) << ','
      << format_double(result.ci_low) << ',' << format_double(result.ci_high) << ','
      << format_double(result.radius) << ',' << result.n_paths << ',' << exp.seed << ','
      << result.hits << ',' << format_double(result.effective_radius) << '\n';
  if (!out) throw Error("failed to write ledger " + file.string());
}

std::vector<LedgerRow> read_ledger(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open ledger " + file.string());
  std::string line;
  std::vector<LedgerRow> rows;
  if (!std::getline(in, line)) return rows;
  if (split_csv(line) != ledger_columns()) throw ShapeError("ledger header does not match");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != ledger_columns().size()) throw ShapeError("ragged ledger row");
    try {
      LedgerRow r;
      r.experiment_hash = cells[0];
      r.p_hat = std::stod(cells[1]);
      r.ci_low = std::stod(cells[2]);
      r.ci_high = std::stod(cells[3]);
      r.radius = std::stod(cells[4]);
      r.n_paths = std::stoull(cells[5]);
      r.seed = std::stoull(cells[6]);
      r.hits = std::stoull(cells[7]);
      r.effective_radius = std::stod(cells[8]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ShapeError("unparsable ledger row: " + line);
    }
  }
  return rows;
}

std::optional<LedgerRow> find_ledger_row(const std::vector<LedgerRow>& rows,
                                         const std::string& hash, double radius) {
  for (const auto& r : rows) {
    if (r.experiment_hash == hash && r.radius == radius) return r;
  }
  return std::nullopt;
}

}  // namespace fraclab::hitting
