#pragma once

#include <cstdint>
#include <filesystem>
#include <exception>
#include <iosfwd>
#include <string>

#include "json.hpp"

namespace fraclab::cli {

inline constexpr const char* kVersion = "0.1.0";

enum class Command { sample, drift, dim, capacity, hitprob, verify };
enum class Format { csv, json };

const char* command_name(Command c);
Command command_from_name(const std::string& name);

/// One run. params holds the module-level fields of the command; keys match
/// the field names of the library types (see docs/schema.md).
struct RunConfig {
  Command command = Command::verify;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 20240611;
  std::filesystem::path output_dir = "fraclab_out";
  Format format = Format::json;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& doc);

/// Default params of a command, merged under whatever the user supplies.
nlohmann::json default_params(Command c);

/// Fills in defaults and rejects unknown top-level params keys.
RunConfig normalize(RunConfig config);

struct RunOutcome {
  nlohmann::json results;
  bool checks_passed = true;  // false when a verification check failed
};

/// Validates the config, runs the mapped operations and writes every output
/// file under config.output_dir. Library errors propagate.
RunOutcome execute(const RunConfig& config);

/// 2 for invalid input, 3 for numeric failures, 4 for resource refusals.
int exit_code(const std::exception& e);

/// Full command line: parse, execute, write report.json, map errors to exit
/// codes (0 ok, 1 failed verification, 2 invalid input, 3 numeric failure,
/// 4 resource refusal). Errors go to err as one JSON object.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fraclab::cli
