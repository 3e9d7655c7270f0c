#pragma once

#include <string>

#include "mifs/regions.hpp"
#include "mifs/scenario.hpp"

namespace mifs {

// cmd_validate: schema + structural validation + homoclinic verification.
struct ValidateResult {
  bool pass{false};
  std::string reportJson;
};
ValidateResult run_validate(const Scenario& s);

// cmd_run: the full pipeline; deterministic JSON (no timing inside).
struct RunResult {
  bool pass{false};
  std::string reportJson;
  std::string logText;  // timing and progress, kept out of the report
};
RunResult run_pipeline(const Scenario& s, const PipelineConfig& cfg,
                       std::uint64_t seed, int jobs);

// cmd_render: SVG overlay + CSV curve dumps from a report file.
// Returns the list of files written.
std::vector<std::string> render_report(const std::string& reportJson,
                                       const std::string& outDir);

void write_curve_csv(const CurveSample& c, const std::string& path);

}  // namespace mifs
