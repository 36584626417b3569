#include "fraclab/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>

#include "CLI11.hpp"

#include "fraclab/drift.hpp"
#include "fraclab/errors.hpp"
#include "fraclab/geometry.hpp"
#include "fraclab/hitting.hpp"
#include "fraclab/parallel.hpp"
#include "fraclab/path_io.hpp"
#include "fraclab/potential.hpp"
#include "fraclab/sets.hpp"
#include "fraclab/stochastic_paths.hpp"
#include "fraclab/verify.hpp"

namespace fraclab::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kReportFile = "report.json";
constexpr const char* kLedgerFile = "hits.csv";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Every output file goes through here, so nothing lands outside output_dir.
class Output {
public:
  explicit Output(const fs::path& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw DomainError("cannot create output directory " + dir_.string());
  }

  fs::path path(const char* name) const { return dir_ / name; }

  std::ofstream open(const char* name, bool binary = false) {
    std::ofstream out(path(name), binary ? std::ios::binary : std::ios::out);
    if (!out) throw DomainError(std::string("cannot write ") + path(name).string());
    files_.push_back(name);
    return out;
  }

  void note(const char* name) { files_.push_back(name); }
  const std::vector<std::string>& files() const { return files_; }

private:
  fs::path dir_;
  std::vector<std::string> files_;
};

template <class T>
T get(const json& params, const char* key) {
  try {
    return params.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DomainError(std::string("invalid parameter ") + key + ": " + e.what());
  }
}

std::optional<double> get_optional(const json& params, const char* key) {
  if (!params.contains(key) || params.at(key).is_null()) return std::nullopt;
  return get<double>(params, key);
}

json rows_of(const Matrix& m) {
  json rows = json::array();
  for (std::size_t c = 0; c < m.rows(); ++c) {
    auto r = m.row(c);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

// ------------------------------------------------------------------- sample

json run_sample(const RunConfig& cfg, Output& out) {
  const auto& p = cfg.params;
  const HurstIndex hurst(get<double>(p, "hurst"));
  const auto alpha = get_optional(p, "alpha");
  const auto dim = get<std::size_t>(p, "dim");
  const auto n = get<std::size_t>(p, "n");
  FRACLAB_REQUIRE(dim >= 1, "dim must be positive");
  const TimeGrid grid(0.0, get<double>(p, "t1"), n);
  const auto seed_alpha = p.at("seed_alpha").is_null() ? cfg.seed + 1 : get<std::uint64_t>(p, "seed_alpha");

  const auto path = alpha ? paths::sample_mixed(hurst, HurstIndex(*alpha), dim, grid, cfg.seed, seed_alpha)
                          : paths::sample_fbm(hurst, dim, grid, cfg.seed);
  json results{{"kind", alpha ? "mixed" : "pure_fbm"},
               {"hurst", hurst.value()},
               {"alpha", alpha ? json(*alpha) : json()},
               {"dim", dim},
               {"grid", {{"t0", grid.t0()}, {"t1", grid.t1()}, {"n", grid.size()}}},
               {"seed", cfg.seed}};
  if (alpha) results["seed_alpha"] = seed_alpha;
  if (cfg.format == Format::csv) {
    auto f = out.open("path.csv");
    paths::write_csv(path, f);
  } else {
    results["values"] = rows_of(path.values);
  }
  if (get<bool>(p, "binary")) {
    auto f = out.open("path.bin", true);
    paths::write_binary(path, f);
  }
  return results;
}

// -------------------------------------------------------------------- drift

json run_drift(const RunConfig& cfg, Output& out) {
  const auto& p = cfg.params;
  const auto spec = drift::drift_from_json(p.at("drift"));
  const TimeGrid grid(0.0, get<double>(p, "t1"), get<std::size_t>(p, "n"));
  const auto values = drift::eval_drift(spec, grid);
  json results{{"drift", drift::to_json(spec)},
               {"grid", {{"t0", grid.t0()}, {"t1", grid.t1()}, {"n", grid.size()}}}};
  if (const auto g = geometry::known_graph_dimension(spec)) results["graph_dimension"] = *g;
  if (const auto a = get_optional(p, "holder_alpha")) {
    results["holder"] = drift::to_json(drift::holder_diagnose(values, grid, *a));
  }
  if (cfg.format == Format::csv) {
    auto f = out.open("drift.csv");
    f << "t";
    for (std::size_t c = 0; c < spec.dim; ++c) f << ",f_" << c + 1;
    f << "\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
      f << format_double(grid[k]);
      for (std::size_t c = 0; c < spec.dim; ++c) f << "," << format_double(values(c, k));
      f << "\n";
    }
  } else {
    results["values"] = rows_of(values);
  }
  return results;
}

// ---------------------------------------------------------------------- dim

json run_dim(const RunConfig& cfg, Output& out) {
  const auto& p = cfg.params;
  const auto object = get<std::string>(p, "object");
  const auto set = sets::time_set_from_json(p.at("time_set"));
  const double r_min = get<double>(p, "r_min"), r_max = get<double>(p, "r_max");
  const auto n_scales = get<std::size_t>(p, "n_scales");
  json results{{"object", object}, {"time_set", sets::to_json(set)}};
  geometry::DimensionEstimate estimate;

  if (object == "time_set") {
    const auto cloud = geometry::time_set_cloud(set, get<double>(p, "resolution"));
    estimate = geometry::minkowski_dim(cloud, r_min, r_max, n_scales);
    results["expected"] = set.dimension();
    if (const auto beta = get_optional(p, "beta")) {
      results["hausdorff"] = geometry::to_json(geometry::hausdorff_profile(cloud, *beta, r_max, r_min, n_scales));
    }
  } else if (object == "graph") {
    const auto spec = drift::drift_from_json(p.at("drift"));
    geometry::GraphDimOptions opts;
    opts.grid_points = get<std::size_t>(p, "grid_points");
    opts.r_min = r_min;
    opts.r_max = r_max;
    opts.n_scales = n_scales;
    const auto g = geometry::graph_dim_parabolic(spec, set, HurstIndex(get<double>(p, "hurst")), opts);
    estimate = g.estimate;
    results["drift"] = drift::to_json(spec);
    results["hurst"] = get<double>(p, "hurst");
    results["graph"] = geometry::to_json(g);
  } else {
    throw DomainError("object must be time_set or graph");
  }
  results["estimate"] = geometry::to_json(estimate);
  results["value"] = estimate.value;
  if (cfg.format == Format::csv) {
    auto f = out.open("dimension.csv");
    geometry::write_csv(estimate, f);
  }
  return results;
}

// ----------------------------------------------------------------- capacity

json run_capacity(const RunConfig& cfg, Output& out) {
  const auto& p = cfg.params;
  const auto support = get<std::string>(p, "support");
  const double alpha = get<double>(p, "alpha");
  const double hurst = get<double>(p, "hurst");
  const auto resolutions = get<std::vector<double>>(p, "resolutions");
  const auto set = sets::time_set_from_json(p.at("time_set"));

  potential::SupportBuilder builder;
  std::optional<geometry::MetricSpec> metric;
  json results{{"support", support}, {"alpha", alpha}, {"resolutions", resolutions}};
  if (support == "time_set") {
    builder = [set](double r) { return potential::time_set_support(set, r); };
    metric = geometry::MetricSpec::euclidean(1);
    results["time_set"] = sets::to_json(set);
  } else if (support == "target" || support == "product") {
    const auto target = sets::target_set_from_json(p.at("target"));
    results["target"] = sets::to_json(target);
    if (support == "target") {
      builder = [target](double r) { return potential::target_support(target, r); };
      metric = geometry::MetricSpec::euclidean(target.dim);
    } else {
      builder = [set, target, hurst](double r) { return potential::product_support(set, target, hurst, r); };
      metric = geometry::MetricSpec::parabolic(hurst, target.dim);
      results["time_set"] = sets::to_json(set);
      results["hurst"] = hurst;
    }
  } else if (support == "graph") {
    const auto spec = drift::drift_from_json(p.at("drift"));
    builder = [spec, set, hurst](double r) { return potential::graph_support(spec, set, hurst, r); };
    metric = geometry::MetricSpec::parabolic(hurst, spec.dim);
    results["drift"] = drift::to_json(spec);
    results["time_set"] = sets::to_json(set);
    results["hurst"] = hurst;
  } else {
    throw DomainError("support must be time_set, target, product or graph");
  }

  potential::CapacityOptions opts;
  opts.solver.tol = get<double>(p, "tol");
  opts.solver.atom_cap = get<std::size_t>(p, "atom_cap");
  const auto est = potential::capacity_estimate(builder, alpha, *metric, resolutions, opts);
  results["metric"] = geometry::to_json(*metric);
  results["estimate"] = potential::to_json(est);

  if (cfg.format == Format::csv) {
    auto f = out.open("energies.csv");
    f << "resolution,atoms,energy,duality_gap,converged\n";
    for (std::size_t i = 0; i < est.energies.size(); ++i) {
      f << format_double(est.resolutions[i]) << "," << est.atoms[i] << "," << format_double(est.energies[i])
        << "," << format_double(est.gaps[i]) << "," << (est.converged[i] ? 1 : 0) << "\n";
    }
  }
  if (get<bool>(p, "kernel_dump")) {
    const auto finest = builder(resolutions.back());
    if (finest.size() > 4096) throw ResourceError("kernel dump is limited to 4096 atoms");
    auto f = out.open("kernel.bin", true);
    potential::write_kernel_matrix(finest, potential::Kernel{alpha}, *metric, f);
  }
  return results;
}

// ------------------------------------------------------------------ hitprob

json run_hitprob(const RunConfig& cfg, Output& out) {
  const auto& p = cfg.params;
  json doc = p.at("experiment");
  doc["seed"] = cfg.seed;
  const auto exp = hitting::experiment_from_json(doc);
  auto radii = get<std::vector<double>>(p, "radii");
  if (radii.empty()) radii.push_back(exp.hit_rule.radius);
  for (double r : radii) FRACLAB_REQUIRE(std::isfinite(r) && r >= 0.0, "radii must be nonnegative");
  const bool sweep = radii.size() >= 4;
  const bool centered = exp.target.kind == sets::TargetKind::point || exp.target.kind == sets::TargetKind::ball;
  if (sweep) FRACLAB_REQUIRE(centered, "radius sweeps need a point or ball target");

  const auto hash = hitting::experiment_hash(exp);
  json results{{"experiment", hitting::to_json(exp)}, {"experiment_hash", hash}};
  try {
    results["dichotomy"] = hitting::to_json(hitting::dichotomy_predict(exp.time_set, exp.target, exp.hurst, exp.d));
  } catch (const Error&) {
    results["dichotomy"] = nullptr;
  }

  const bool use_ledger = get<bool>(p, "ledger");
  const auto ledger = out.path(kLedgerFile);
  std::vector<hitting::LedgerRow> rows;
  if (use_ledger && fs::exists(ledger)) rows = hitting::read_ledger(ledger);
  bool all_recorded = use_ledger;
  for (double r : radii) all_recorded = all_recorded && hitting::find_ledger_row(rows, hash, r).has_value();

  json table = json::array();
  if (all_recorded && !sweep) {
    for (double r : radii) {
      const auto row = *hitting::find_ledger_row(rows, hash, r);
      table.push_back({{"p_hat", row.p_hat}, {"ci_low", row.ci_low}, {"ci_high", row.ci_high},
                       {"hits", row.hits}, {"n_paths", row.n_paths}, {"radius", row.radius},
                       {"effective_radius", row.effective_radius}, {"from_ledger", true}});
    }
  } else {
    std::vector<hitting::HitResult> computed;
    if (sweep) {
      const auto s = hitting::point_hit_scaling(exp, radii);
      results["scaling"] = hitting::to_json(s);
      computed = s.p_table;
    } else {
      auto single = exp;
      single.hit_rule.radius = *std::max_element(radii.begin(), radii.end());
      const auto dist = hitting::path_min_distances(single);
      for (double r : radii) computed.push_back(hitting::tally(exp, dist, r));
    }
    for (const auto& res : computed) {
      table.push_back(hitting::to_json(res));
      if (use_ledger && !hitting::find_ledger_row(rows, hash, res.radius)) {
        hitting::append_ledger(ledger, exp, res);
      }
    }
  }
  if (use_ledger) out.note(kLedgerFile);
  results["results"] = table;
  return results;
}

// ------------------------------------------------------------------- verify

json run_verify(const RunConfig& cfg, bool& passed, std::ostream* progress) {
  const auto name = get<std::string>(cfg.params, "suite");
  std::vector<std::string> names;
  if (name == "all") {
    names = verify::suite_names();
  } else {
    names.push_back(name);
  }
  json suites = json::array();
  passed = true;
  for (const auto& n : names) {
    const auto report = verify::run_suite(n, cfg.seed);
    passed = passed && report.pass();
    if (progress) {
      std::size_t ok = 0;
      for (const auto& c : report.checks) ok += c.pass ? 1 : 0;
      *progress << n << ": " << (report.pass() ? "pass" : "FAIL") << " (" << ok << "/" << report.checks.size()
                << " checks)\n";
      for (const auto& c : report.checks) {
        if (!c.pass) *progress << "  failed: " << c.name << " observed " << c.observed << ", want " << c.tolerance << "\n";
      }
    }
    suites.push_back(verify::to_json(report));
  }
  return {{"suites", suites}, {"pass", passed}};
}

RunOutcome dispatch(const RunConfig& cfg, std::ostream* progress) {
  Output out(cfg.output_dir);
  RunOutcome outcome;
  switch (cfg.command) {
    case Command::sample: outcome.results = run_sample(cfg, out); break;
    case Command::drift: outcome.results = run_drift(cfg, out); break;
    case Command::dim: outcome.results = run_dim(cfg, out); break;
    case Command::capacity: outcome.results = run_capacity(cfg, out); break;
    case Command::hitprob: outcome.results = run_hitprob(cfg, out); break;
    case Command::verify: outcome.results = run_verify(cfg, outcome.checks_passed, progress); break;
  }
  outcome.results["files"] = out.files();
  return outcome;
}

// ------------------------------------------------------------- arguments

struct Overrides {
  std::map<std::string, json> values;  // JSON pointer -> value

  template <class T>
  void set(const std::string& pointer, const std::optional<T>& v) {
    if (v) values[pointer] = *v;
  }
};

const char* error_kind(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return err->kind();
  if (dynamic_cast<const json::exception*>(&e)) return "domain";
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return "io";
  if (dynamic_cast<const std::bad_alloc*>(&e)) return "resource";
  return "internal";
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  err << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << "\n";
}

}  // namespace

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ResourceError*>(&e) || dynamic_cast<const std::bad_alloc*>(&e)) return 4;
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  return 2;
}

const char* command_name(Command c) {
  switch (c) {
    case Command::sample: return "sample";
    case Command::drift: return "drift";
    case Command::dim: return "dim";
    case Command::capacity: return "capacity";
    case Command::hitprob: return "hitprob";
    case Command::verify: return "verify";
  }
  return "verify";
}

Command command_from_name(const std::string& name) {
  for (auto c : {Command::sample, Command::drift, Command::dim, Command::capacity, Command::hitprob,
                 Command::verify}) {
    if (name == command_name(c)) return c;
  }
  throw DomainError("unknown command: " + name);
}

json default_params(Command c) {
  const json unit_interval{{"kind", "interval"}, {"a", 0.1}, {"b", 1.0}, {"epsilon0", 0.1}};
  switch (c) {
    case Command::sample:
      return {{"hurst", 0.5}, {"alpha", nullptr}, {"dim", 1}, {"n", 1024},
              {"t1", 1.0},    {"seed_alpha", nullptr}, {"binary", false}};
    case Command::drift:
      return {{"drift", {{"kind", "weierstrass"}, {"d", 1}, {"tau", 0.7}, {"theta", 2.0}, {"tol", 1e-12}}},
              {"n", 4097},
              {"t1", 1.0},
              {"holder_alpha", nullptr}};
    case Command::dim:
      return {{"object", "time_set"},
              {"time_set", unit_interval},
              {"drift", {{"kind", "zero"}, {"d", 1}}},
              {"hurst", 0.5},
              {"resolution", 1e-6},
              {"r_min", 1e-5},
              {"r_max", 0.1},
              {"n_scales", 16},
              {"grid_points", (1 << 16) + 1},
              {"beta", nullptr}};
    case Command::capacity:
      return {{"support", "time_set"},
              {"time_set", unit_interval},
              {"target", {{"kind", "point"}, {"d", 1}, {"center", {0.0}}}},
              {"drift", {{"kind", "zero"}, {"d", 1}}},
              {"hurst", 0.5},
              {"alpha", 0.5},
              {"resolutions", {1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512}},
              {"tol", 1e-6},
              {"atom_cap", 1 << 14},
              {"kernel_dump", false}};
    case Command::hitprob: {
      hitting::HitExperiment exp;
      exp.hit_rule.radius = 0.05;
      exp.hit_rule.segment = true;
      return {{"experiment", hitting::to_json(exp)},
              {"radii", json::array()},
              {"ledger", true}};
    }
    case Command::verify: return {{"suite", "all"}};
  }
  return json::object();
}

namespace {

// Recursive merge that keeps nulls, so optional fields stay present.
void overlay(json& base, const json& patch) {
  for (const auto& [key, value] : patch.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) {
      overlay(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

}  // namespace

RunConfig normalize(RunConfig config) {
  FRACLAB_REQUIRE(config.params.is_object(), "params must be an object");
  const json defaults = default_params(config.command);
  json merged = defaults;
  for (const auto& [key, value] : config.params.items()) {
    if (!merged.contains(key)) {
      throw DomainError(std::string("unknown parameter for ") + command_name(config.command) + ": " + key);
    }
  }
  overlay(merged, config.params);
  config.params = std::move(merged);
  FRACLAB_REQUIRE(!config.output_dir.empty(), "output_dir must not be empty");
  return config;
}

json to_json(const RunConfig& c) {
  return {{"command", command_name(c.command)},
          {"params", c.params},
          {"seed", c.seed},
          {"output_dir", c.output_dir.string()},
          {"format", c.format == Format::csv ? "csv" : "json"}};
}

RunConfig run_config_from_json(const json& doc) {
  try {
    FRACLAB_REQUIRE(doc.is_object(), "config must be a JSON object");
    static const std::set<std::string> keys{"command", "params", "seed", "output_dir", "format"};
    for (const auto& [key, value] : doc.items()) {
      if (!keys.count(key)) throw DomainError("unknown config key: " + key);
    }
    RunConfig c;
    c.command = command_from_name(doc.at("command").get<std::string>());
    if (doc.contains("params")) c.params = doc.at("params");
    if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir").get<std::string>();
    if (doc.contains("format")) {
      const auto f = doc.at("format").get<std::string>();
      FRACLAB_REQUIRE(f == "csv" || f == "json", "format must be csv or json");
      c.format = f == "csv" ? Format::csv : Format::json;
    }
    return c;
  } catch (const json::exception& e) {
    throw DomainError(std::string("invalid config: ") + e.what());
  }
}

RunOutcome execute(const RunConfig& config) { return dispatch(normalize(config), nullptr); }

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hitting probabilities of fractional Brownian motion with drift", "fraclab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::optional<std::string> config_file, out_dir, format;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  Overrides ov;

  // sample
  std::optional<double> s_hurst, s_alpha, s_t1;
  std::optional<std::size_t> s_dim, s_n;
  bool s_binary = false;
  // drift
  std::optional<std::string> d_kind;
  std::optional<double> d_tau, d_theta, d_holder, d_alpha;
  std::optional<std::size_t> d_dim, d_n;
  // dim and capacity
  std::optional<std::string> m_set, m_object, c_support;
  std::optional<double> m_lambda, m_a, m_b, m_eps, m_hurst, m_rmin, m_rmax, m_res, m_beta, c_alpha;
  std::optional<std::size_t> m_level, m_scales;
  std::vector<double> c_resolutions;
  // hitprob
  std::optional<double> h_hurst, h_radius;
  std::optional<std::size_t> h_d, h_paths, h_grid;
  std::vector<double> h_radii, h_point;
  bool h_segment = false, h_holder = false;
  // verify
  std::optional<std::string> v_suite;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "JSON run config");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", threads, "worker cap (results do not depend on it)")->check(CLI::PositiveNumber);
  };
  auto time_set_flags = [&](CLI::App* sub) {
    sub->add_option("--set", m_set, "time set kind: interval, cantor")->check(CLI::IsMember({"interval", "cantor"}));
    sub->add_option("--lambda", m_lambda, "Cantor ratio");
    sub->add_option("--level", m_level, "Cantor level");
    sub->add_option("--a", m_a, "interval start");
    sub->add_option("--b", m_b, "interval end");
    sub->add_option("--epsilon0", m_eps, "left edge of the Cantor carrier");
  };

  auto* sample = app.add_subcommand("sample", "sample fBM or mixed fBM paths");
  common(sample);
  sample->add_option("--hurst", s_hurst, "Hurst index H");
  sample->add_option("--alpha", s_alpha, "second index for B^H + B^alpha");
  sample->add_option("--dim", s_dim, "number of components");
  sample->add_option("--n", s_n, "grid points");
  sample->add_option("--t1", s_t1, "grid end");
  sample->add_flag("--binary", s_binary, "also write path.bin");

  auto* drift = app.add_subcommand("drift", "evaluate and diagnose a drift");
  common(drift);
  drift->add_option("--kind", d_kind, "zero, weierstrass, weierstrass_diagonal, fbm_realization");
  drift->add_option("--tau", d_tau, "Weierstrass tau");
  drift->add_option("--theta", d_theta, "Weierstrass theta");
  drift->add_option("--alpha", d_alpha, "index of an fBM realization drift");
  drift->add_option("--dim", d_dim, "number of components");
  drift->add_option("--n", d_n, "grid points");
  drift->add_option("--holder-alpha", d_holder, "run the Hölder diagnosis at this exponent");

  auto* dim = app.add_subcommand("dim", "dimension estimates");
  common(dim);
  time_set_flags(dim);
  dim->add_option("--object", m_object, "time_set or graph")->check(CLI::IsMember({"time_set", "graph"}));
  dim->add_option("--hurst", m_hurst, "parabolic index for graphs");
  dim->add_option("--r-min", m_rmin, "smallest scale");
  dim->add_option("--r-max", m_rmax, "largest scale");
  dim->add_option("--scales", m_scales, "number of scales");
  dim->add_option("--resolution", m_res, "time set sampling resolution");
  dim->add_option("--beta", m_beta, "also compute covering sums at this exponent");

  auto* capacity = app.add_subcommand("capacity", "minimum energy and capacity verdicts");
  common(capacity);
  time_set_flags(capacity);
  capacity->add_option("--support", c_support, "time_set, target, product or graph");
  capacity->add_option("--alpha", c_alpha, "kernel order");
  capacity->add_option("--hurst", m_hurst, "parabolic index for product and graph supports");
  capacity->add_option("--resolutions", c_resolutions, "strictly decreasing resolutions")->delimiter(',');

  auto* hitprob = app.add_subcommand("hitprob", "Monte Carlo hitting probabilities");
  common(hitprob);
  hitprob->add_option("--hurst", h_hurst, "Hurst index H");
  hitprob->add_option("--d", h_d, "spatial dimension");
  hitprob->add_option("--paths", h_paths, "number of paths");
  hitprob->add_option("--grid-n", h_grid, "grid points");
  hitprob->add_option("--radius", h_radius, "hit radius");
  hitprob->add_option("--radii", h_radii, "radius sweep")->delimiter(',');
  hitprob->add_option("--point", h_point, "point target")->delimiter(',');
  hitprob->add_flag("--segment", h_segment, "segment hit rule");
  hitprob->add_flag("--holder", h_holder, "Hölder radius correction");

  auto* verify_cmd = app.add_subcommand("verify", "verification suites");
  common(verify_cmd);
  verify_cmd->add_option("--suite", v_suite, "suite name or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what(), 2);
    return 2;
  }

  const auto started = std::chrono::steady_clock::now();
  try {
    auto* sub = app.get_subcommands().front();
    RunConfig cfg;
    cfg.command = command_from_name(sub->get_name());
    if (config_file) {
      std::ifstream in(*config_file);
      if (!in) throw DomainError("cannot read config " + *config_file);
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::exception& e) {
        throw DomainError(std::string("config is not valid JSON: ") + e.what());
      }
      if (doc.contains("inputs_echo")) doc = json(doc.at("inputs_echo"));
      if (!doc.contains("command")) doc["command"] = sub->get_name();
      cfg = run_config_from_json(doc);
      if (cfg.command != command_from_name(sub->get_name())) {
        throw DomainError("config command does not match the subcommand");
      }
    }
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.output_dir = *out_dir;
    if (format) cfg.format = *format == "csv" ? Format::csv : Format::json;
    if (threads) set_thread_count(*threads);

    switch (cfg.command) {
      case Command::sample:
        ov.set("/hurst", s_hurst);
        ov.set("/alpha", s_alpha);
        ov.set("/dim", s_dim);
        ov.set("/n", s_n);
        ov.set("/t1", s_t1);
        if (s_binary) ov.values["/binary"] = true;
        break;
      case Command::drift:
        ov.set("/drift/kind", d_kind);
        ov.set("/drift/tau", d_tau);
        ov.set("/drift/theta", d_theta);
        ov.set("/drift/alpha", d_alpha);
        ov.set("/drift/d", d_dim);
        ov.set("/n", d_n);
        ov.set("/holder_alpha", d_holder);
        break;
      case Command::dim:
      case Command::capacity:
        ov.set("/time_set/kind", m_set);
        ov.set("/time_set/lambda", m_lambda);
        ov.set("/time_set/level", m_level);
        ov.set("/time_set/a", m_a);
        ov.set("/time_set/b", m_b);
        ov.set("/time_set/epsilon0", m_eps);
        ov.set("/hurst", m_hurst);
        ov.set("/object", m_object);
        ov.set("/r_min", m_rmin);
        ov.set("/r_max", m_rmax);
        ov.set("/n_scales", m_scales);
        ov.set("/resolution", m_res);
        ov.set("/beta", m_beta);
        ov.set("/support", c_support);
        ov.set("/alpha", c_alpha);
        if (!c_resolutions.empty()) ov.values["/resolutions"] = c_resolutions;
        break;
      case Command::hitprob:
        ov.set("/experiment/hurst", h_hurst);
        ov.set("/experiment/n_paths", h_paths);
        ov.set("/experiment/grid/n", h_grid);
        ov.set("/experiment/hit_rule/radius", h_radius);
        if (h_d) {
          ov.values["/experiment/d"] = *h_d;
          ov.values["/experiment/drift"] = drift::to_json(drift::DriftSpec::zero(*h_d));
          if (h_point.empty()) h_point.assign(*h_d, 0.0);
        }
        if (!h_point.empty()) ov.values["/experiment/target"] = sets::to_json(sets::TargetSet::point(h_point));
        if (!h_radii.empty()) ov.values["/radii"] = h_radii;
        if (h_segment) ov.values["/experiment/hit_rule/segment"] = true;
        if (h_holder) ov.values["/experiment/hit_rule/holder_correction"] = true;
        break;
      case Command::verify: ov.set("/suite", v_suite); break;
    }

    cfg = normalize(cfg);
    for (const auto& [pointer, value] : ov.values) cfg.params[json::json_pointer(pointer)] = value;
    cfg = normalize(cfg);

    auto outcome = dispatch(cfg, &out);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json bundle{{"inputs_echo", to_json(cfg)},
                {"results", outcome.results},
                {"provenance", {{"tool", "fraclab"}, {"version", kVersion}, {"seed", cfg.seed},
                                {"wall_time_s", wall}, {"threads", thread_count()}}}};
    {
      std::ofstream f(cfg.output_dir / kReportFile);
      if (!f) throw DomainError("cannot write report");
      f << bundle.dump(2) << "\n";
    }
    if (cfg.command != Command::verify) {
      out << command_name(cfg.command) << ": wrote " << (cfg.output_dir / kReportFile).string() << "\n";
    }
    if (!outcome.checks_passed) {
      report_error(err, "verification", "one or more checks failed", 1);
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    const int code = exit_code(e);
    report_error(err, error_kind(e), e.what(), code);
    return code;
  }
}

}  // namespace fraclab::cli
