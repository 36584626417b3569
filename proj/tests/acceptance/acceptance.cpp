// Acceptance run: one line per criterion, exit 1 if any fails.
//   acceptance [criterion...]   runs only the listed criteria (1-10)

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fraclab/parallel.hpp"
#include "fraclab/verify.hpp"

using namespace fraclab;

namespace {

struct Criterion {
  int id;
  const char* suite;
  double max_seconds;
};

// Runtime limits in seconds.
const Criterion kCriteria[] = {
    {1, "covariance", 30.0},     {2, "slnd", 5.0},
    {3, "frostman", 10.0},       {4, "dimension", 120.0},
    {5, "capacity", 120.0},      {6, "scaling", 600.0},
    {7, "dichotomy", 600.0},     {8, "weierstrass-nonpolar", 600.0},
    {9, "counterexample", 600.0},
};

constexpr int kDeterminism = 10;

std::string summary(const verify::SuiteReport& r) {
  std::string s;
  for (const auto& c : r.checks) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", c.observed);
    if (!s.empty()) s += "; ";
    s += (c.pass ? "" : "FAILED ") + c.name + "=" + buf;
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const auto wanted = [&](int id) { return only.empty() || only.count(id) > 0; };

  const std::size_t threads = thread_count();
  std::map<std::string, std::string> payloads;
  int failures = 0;

  for (const auto& c : kCriteria) {
    if (!wanted(c.id) && !wanted(kDeterminism)) continue;
    const auto start = std::chrono::steady_clock::now();
    const auto report = verify::run_suite(c.suite, verify::kDefaultSeed);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    payloads[c.suite] = verify::to_json(report).dump();
    if (!wanted(c.id)) continue;
    const bool ok = report.pass() && seconds < c.max_seconds;
    failures += ok ? 0 : 1;
    std::printf("criterion %2d %-20s %s  %.1fs (limit %.0fs)  %s\n", c.id, c.suite, ok ? "PASS" : "FAIL", seconds,
                c.max_seconds, summary(report).c_str());
    std::fflush(stdout);
  }

  if (wanted(kDeterminism)) {
    // Same seed, different worker count: payloads must match byte for byte.
    set_thread_count(threads == 1 ? 3 : 1);
    std::vector<std::string> differing;
    for (const auto& [suite, payload] : payloads) {
      if (verify::to_json(verify::run_suite(suite, verify::kDefaultSeed)).dump() != payload) {
        differing.push_back(suite);
      }
    }
    set_thread_count(threads);
    const bool ok = differing.empty();
    failures += ok ? 0 : 1;
    std::string list;
    for (const auto& s : differing) list += " " + s;
    std::printf("criterion %2d %-20s %s  %zu suites rerun with %zu vs %zu threads%s%s\n", kDeterminism,
                "determinism", ok ? "PASS" : "FAIL", payloads.size(), threads, threads == 1 ? std::size_t{3} : 1,
                ok ? "" : ", differing:", list.c_str());
  }
  return failures == 0 ? 0 : 1;
}
