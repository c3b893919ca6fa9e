#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tierfed/orchestrator.hpp"

namespace tierfed {

// Configuration problem with the offending field named, so the CLI can
// print a usable diagnostic and exit 2.
struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string field_path, const std::string& message)
      : std::runtime_error(field_path + ": " + message),
        field(std::move(field_path)) {}
};

RunConfig default_run_config();

// Parse and validate a config document. Unknown keys are rejected; every
// reachable invalid field raises a ConfigError naming it.
RunConfig parse_run_config(const nlohmann::json& document);

nlohmann::json run_config_to_json(const RunConfig& config);

// Dotted-path override, e.g. "selection.merit_count=10". The value text is
// parsed as JSON when possible, otherwise taken as a string.
void apply_override(nlohmann::json& document, const std::string& assignment);

// Load a config file, apply overrides in order, optionally replace the
// seed, then parse. Parse errors carry the line number.
RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides,
                          std::optional<std::uint64_t> seed_override);

// Summary document for a finished run; property verdicts are appended by
// the caller.
nlohmann::json build_summary(const RunConfig& config, const RunResult& result);

}  // namespace tierfed
