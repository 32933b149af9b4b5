#pragma once

// Result persistence: one CSV per run plus a JSON summary per experiment.
// Output is byte-stable for identical records apart from wall-time fields.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bootdqn/experiments.hpp"

namespace bootdqn::harness {

// Columns: episode,return,cum_regret,active_metric. Values use shortest
// round-trip formatting, so parsing recovers them exactly.
void write_run_csv(std::ostream& out, const RunRecord& run);

struct RunTable {
  std::vector<long long> episode;
  std::vector<double> returns;
  std::vector<double> cum_regret;
  std::vector<double> active_metric;
};

RunTable read_run_csv(std::istream& in);

std::string summary_json(const SummaryRecord& summary, const std::vector<RunRecord>& runs);

// Writes <dir>/<label>.csv for every run and <dir>/summary.json. Throws
// IoError when the directory cannot be created or a file cannot be written.
void emit_results(const ExperimentResult& result, const std::filesystem::path& dir);

void emit_regression(const RegressionResult& result, const ExperimentConfig& config,
                     const std::filesystem::path& dir);

void emit_mask_diagnostics(const std::vector<MaskLawStats>& stats, const ExperimentConfig& config,
                           const std::filesystem::path& dir);

// {"error": kind, "message": ...} on one line.
std::string error_json(const std::string& kind, const std::string& message);

}  // namespace bootdqn::harness
