#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qpi/config.hpp"
#include "qpi/dataset.hpp"
#include "qpi/evaluate.hpp"
#include "qpi/model.hpp"
#include "qpi/simulate.hpp"

namespace qpi {

Scenario make_scenario(const RunConfig& cfg);

// Evaluation grid for a config: explicit START:STOP:STEP when given,
// otherwise the schedule's own time set.
std::vector<std::int64_t> evaluation_grid(const RunConfig& cfg);

struct SimulateOutput {
  std::string dataset_path;
  std::string truth_path;
};

// Simulates the configured scenario, samples counts with the given seed,
// and writes dataset.qpd / truth.qpt under dir.
SimulateOutput run_simulate(const RunConfig& cfg, const std::string& dir,
                            std::uint64_t seed);

struct InferOutput {
  std::string model_path;
  InferenceReport report;
};

// Runs inference on a dataset file; writes model.qpm, dimension_report.txt
// and fit_log.txt under dir.
InferOutput run_infer(const RunConfig& cfg, const std::string& dataset_path,
                      const std::string& dir);

// Scores a model file against a truth table; writes errors.csv under dir
// and returns the curve.
ErrorCurve run_evaluate(const RunConfig& cfg, const std::string& model_path,
                        const std::string& truth_path,
                        const std::string& dataset_path, const std::string& dir);

struct RunSummary {
  int run_index = 0;
  std::uint64_t seed = 0;
  int d_final = 0;
  double phi_last = 0;
  double psi = 0;
  double mean_qpi_error = 0;
};

struct PipelineOutput {
  std::vector<RunSummary> runs;
  std::string aggregate_path;  // empty for a single run
  std::string summary_path;
};

// End-to-end: simulate, infer, evaluate for `runs` seeds (seed, seed+1, ...),
// each in its own subdirectory run000, run001, ... of cfg.out_dir. Runs are
// distributed over `workers` threads; outputs are deterministic in the seeds
// and independent of the worker count.
PipelineOutput run_pipeline(const RunConfig& cfg, int runs, int workers);

}  // namespace qpi
