#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fraclab/cli.hpp"
#include "fraclab/errors.hpp"

using namespace fraclab;
using namespace fraclab::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "fraclab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_command(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fraclab_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json report(const fs::path& dir) { return json::parse(slurp(dir / "report.json")); }

std::set<std::string> tree(const fs::path& root) {
  std::set<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) out.insert(fs::relative(e.path(), root).string());
  return out;
}

}  // namespace

TEST_CASE("run config json round trip") {
  RunConfig c;
  c.command = Command::hitprob;
  c.seed = 99;
  c.output_dir = "somewhere/else";
  c.format = Format::csv;
  c.params = {{"radii", {0.1, 0.05}}};
  const auto normalized = normalize(c);
  CHECK(normalized.params.contains("experiment"));
  CHECK(run_config_from_json(to_json(normalized)) == normalized);
  CHECK(normalize(normalized) == normalized);

  c.params = {{"no_such_key", 1}};
  CHECK_THROWS_AS(normalize(c), DomainError);
  CHECK_THROWS_AS(run_config_from_json(json{{"command", "sample"}, {"colour", "red"}}), DomainError);
  CHECK_THROWS_AS(run_config_from_json(json{{"command", "paint"}}), DomainError);
  CHECK_THROWS_AS(run_config_from_json(json{{"command", "sample"}, {"format", "xml"}}), DomainError);
}

TEST_CASE("exit codes") {
  CHECK(exit_code(DomainError("x")) == 2);
  CHECK(exit_code(ShapeError("x")) == 2);
  CHECK(exit_code(NumericError("x")) == 3);
  CHECK(exit_code(ResourceError("x")) == 4);

  const auto dir = scratch_dir("codes");
  CHECK(run({"sample", "--hurst", "0.5", "--n", "64", "--out", (dir / "ok").string()}).code == 0);

  const auto bad = run({"sample", "--hurst", "1.5", "--out", (dir / "bad").string()});
  CHECK(bad.code == 2);
  const auto doc = json::parse(bad.err);
  CHECK(doc.at("error").at("exit_code") == 2);
  CHECK(doc.at("error").at("kind") == "domain");

  CHECK(run({"sample", "--n", "100000000", "--out", (dir / "big").string()}).code == 4);
  CHECK(run({"sample", "--no-such-flag"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"verify", "--suite", "nope", "--out", (dir / "v").string()}).code == 2);
  CHECK(run({"dim", "--config", (dir / "missing.json").string(), "--out", (dir / "m").string()}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("sample output is byte-identical across runs") {
  const auto dir = scratch_dir("sample");
  for (const char* name : {"a", "b"}) {
    const auto r = run({"sample", "--hurst", "0.5", "--dim", "1", "--n", "1024", "--seed", "7", "--format",
                        "csv", "--binary", "--out", (dir / name).string()});
    REQUIRE(r.code == 0);
  }
  CHECK(slurp(dir / "a" / "path.csv") == slurp(dir / "b" / "path.csv"));
  CHECK(slurp(dir / "a" / "path.bin") == slurp(dir / "b" / "path.bin"));
  CHECK(report(dir / "a").at("results") == report(dir / "b").at("results"));
  CHECK(slurp(dir / "a" / "path.csv").rfind("t,x_1\n", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("report bundle echoes a config that reproduces the run") {
  const auto dir = scratch_dir("echo");
  REQUIRE(run({"dim", "--set", "cantor", "--lambda", "0.3333", "--level", "12", "--out",
               (dir / "first").string()})
              .code == 0);
  const auto first = report(dir / "first");
  CHECK(std::abs(first.at("results").at("value").get<double>() - 0.6309) <= 0.05);
  CHECK(first.at("provenance").at("tool") == "fraclab");
  CHECK(first.at("provenance").contains("wall_time_s"));

  const auto echoed = run_config_from_json(first.at("inputs_echo"));
  CHECK(to_json(echoed) == first.at("inputs_echo"));

  // Replay the echoed config into a second directory.
  {
    std::ofstream cfg(dir / "config.json");
    cfg << first.at("inputs_echo").dump();
  }
  REQUIRE(run({"dim", "--config", (dir / "config.json").string(), "--out", (dir / "second").string()}).code == 0);
  const auto second = report(dir / "second");
  CHECK(second.at("results") == first.at("results"));
  fs::remove_all(dir);
}

TEST_CASE("commands write only inside the output directory") {
  const auto root = scratch_dir("confined");
  const auto out = root / "out";
  const auto before = tree(root);
  const std::vector<std::vector<std::string>> commands{
      {"sample", "--n", "128", "--format", "csv", "--binary"},
      {"drift", "--n", "1025", "--holder-alpha", "0.5", "--format", "csv"},
      {"dim", "--r-min", "1e-3", "--resolution", "1e-4", "--scales", "6", "--format", "csv"},
      {"capacity", "--resolutions", "0.1,0.05,0.025", "--format", "csv"},
      {"hitprob", "--paths", "200", "--radius", "0.1"},
      {"verify", "--suite", "slnd"}};
  const auto cwd = fs::current_path();
  fs::current_path(root);
  for (auto args : commands) {
    args.push_back("--out");
    args.push_back(out.string());
    const auto r = run(args);
    CHECK_MESSAGE(r.code == 0, args.front() << ": " << r.err);
  }
  fs::current_path(cwd);
  for (const auto& entry : tree(root)) {
    if (before.count(entry)) continue;
    CHECK_MESSAGE(entry.rfind("out", 0) == 0, entry);
  }
  const auto files = tree(out);
  for (const char* f : {"report.json", "path.csv", "path.bin", "drift.csv", "dimension.csv", "energies.csv", "hits.csv"}) {
    CHECK_MESSAGE(files.count(f) == 1, f);
  }
  fs::remove_all(root);
}

TEST_CASE("hit ledger resumes recorded radii") {
  const auto dir = scratch_dir("ledger");
  const std::vector<std::string> args{"hitprob", "--d", "2", "--hurst", "0.6", "--paths", "300", "--radius",
                                      "0.1", "--seed", "5", "--out", dir.string()};
  REQUIRE(run(args).code == 0);
  const auto first = report(dir);
  const auto ledger = slurp(dir / "hits.csv");
  REQUIRE(run(args).code == 0);
  const auto second = report(dir);
  CHECK(slurp(dir / "hits.csv") == ledger);
  const auto& row = second.at("results").at("results").at(0);
  CHECK(row.at("from_ledger") == true);
  CHECK(row.at("hits") == first.at("results").at("results").at(0).at("hits"));
  CHECK(row.at("p_hat") == first.at("results").at("results").at(0).at("p_hat"));
  fs::remove_all(dir);
}

TEST_CASE("thread count does not change results") {
  const auto dir = scratch_dir("threads");
  const std::vector<std::string> base{"hitprob", "--d", "2", "--hurst", "0.6", "--paths", "500",
                                      "--radii", "0.2,0.1,0.05,0.025", "--seed", "3"};
  auto one = base, three = base;
  one.insert(one.end(), {"--threads", "1", "--out", (dir / "one").string()});
  three.insert(three.end(), {"--threads", "3", "--out", (dir / "three").string()});
  REQUIRE(run(one).code == 0);
  REQUIRE(run(three).code == 0);
  CHECK(report(dir / "one").at("results").dump() == report(dir / "three").at("results").dump());
  fs::remove_all(dir);
}

TEST_CASE("verify reports each check") {
  const auto dir = scratch_dir("verify");
  const auto r = run({"verify", "--suite", "slnd", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("slnd: pass") != std::string::npos);
  const auto doc = report(dir);
  const auto& suite = doc.at("results").at("suites").at(0);
  CHECK(suite.at("suite") == "slnd");
  for (const auto& c : suite.at("checks")) {
    CHECK(c.contains("tolerance"));
    CHECK(c.contains("observed"));
    CHECK(c.contains("property"));
    CHECK(c.at("pass") == true);
  }
  fs::remove_all(dir);
}
