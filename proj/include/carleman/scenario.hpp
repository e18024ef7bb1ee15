#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace carleman {

// Outcome of one scenario run.  exit_code follows the CLI contract:
//   0  ran; declared expectation (if any) satisfied
//   1  ran; the declared expected verdict did not match
//   2  config malformed or semantically invalid
//   3  runtime failure inside the dispatched computation
struct ScenarioOutcome {
  int exit_code = 0;
  std::string verdict;    // "pass", "fail" or "vacuous"; empty on exit 2/3
  std::string error;      // diagnostic accompanying exit 2 or 3
  nlohmann::json report;  // exactly what report.json holds
};

// Runs the scenario described by `config`, writing report.json and the
// kind-specific artifacts (CSV tables, SVG plots, binary grids) into
// out_dir.  A non-empty `kind` must equal the kind declared in the config.
// Failures of any sort are captured in the outcome; nothing is thrown.
// Outputs are byte-identical across runs with the same config and seed,
// for any thread count.
ScenarioOutcome run_scenario(const std::string& kind,
                             const std::filesystem::path& config,
                             const std::filesystem::path& out_dir,
                             std::uint64_t seed, int threads);

}  // namespace carleman
