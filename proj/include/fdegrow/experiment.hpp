#pragma once

#include <filesystem>

#include "fdegrow/config.hpp"

namespace fdegrow {

struct RunReport {
  json document;
  int exit_code = 0;
};

// Execute the configured experiment: solve, diagnose, write CSV series and
// report.json under outdir (created if needed), and return the report with
// the verdict-derived exit code (0 pass, 2 fail, 3 inconclusive, 4 runtime
// failure inside a sweep sub-run). jobs > 1 parallelizes sweep sub-runs;
// other kinds ignore it.
RunReport run_experiment(const ExperimentConfig& cfg,
                         const std::filesystem::path& outdir, int jobs = 1);

// %.17g rendering used for all CSV payloads (goldens are byte-stable across
// IEEE-754 platforms).
std::string format_g17(double v);

}  // namespace fdegrow
