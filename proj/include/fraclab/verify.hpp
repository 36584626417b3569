#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace fraclab::verify {

struct Check {
  std::string name;
  std::string property;   // statement the check exercises
  std::string tolerance;  // pass condition on observed, in words
  double observed = 0.0;
  bool pass = false;
};

/// Outcome of one verification suite. Contains no timing, so reruns with the
/// same seed serialize byte-identically.
struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<Check> checks;
  nlohmann::json data = nlohmann::json::object();  // supporting tables

  bool pass() const;
};

constexpr std::uint64_t kDefaultSeed = 20240611;

/// covariance, slnd, frostman, dimension, capacity, dichotomy,
/// weierstrass-nonpolar, counterexample, scaling.
const std::vector<std::string>& suite_names();

/// Runs the named suite at desk scale. Unknown names raise DomainError;
/// failing checks are reported, never thrown.
SuiteReport run_suite(const std::string& name, std::uint64_t seed = kDefaultSeed);

nlohmann::json to_json(const Check& check);
nlohmann::json to_json(const SuiteReport& report);

}  // namespace fraclab::verify
