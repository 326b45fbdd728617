#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qpi/dataset.hpp"
#include "qpi/model.hpp"
#include "qpi/simulate.hpp"

namespace qpi {

// Qubit density matrix from the three Pauli expectation probabilities
// F = (1 + <sigma>)/2. No positivity projection is applied; the result
// always has unit trace.
Eigen::Matrix2cd bloch_state(double fx, double fy, double fz);

// Half the trace norm of the difference of two density matrices.
double trace_distance(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b);

// One-step process-tomography baseline: realize a linear model of fixed
// dimension four from the probability tables at t = 0 and t = 1 over an
// affinely independent state frame. Throws a numeric error when the frame
// block is rank-deficient.
Model qpt_baseline(const TruthTable& truth);

struct ErrorPoint {
  std::int64_t t = 0;
  double qpi_error = 0;
  double raw_error = 0;  // NaN where no measured record exists
  double qpt_error = 0;  // NaN when no baseline was supplied
  double n_avg = 0;      // shots per experiment contributing at this t
};

using ErrorCurve = std::vector<ErrorPoint>;

// Mean trace distance between reconstructed and exact states at each grid
// time, averaged over initial states. raw (optional) adds the empirical
// frequency reconstruction at measured times; baseline (optional) adds the
// fixed-dimension tomography model.
ErrorCurve error_curve(const Model& model, const TruthTable& truth,
                       const std::vector<std::int64_t>& grid,
                       const Dataset* raw = nullptr,
                       const Model* baseline = nullptr);

void write_error_csv(const ErrorCurve& curve, const std::string& path);
ErrorCurve read_error_csv(const std::string& path);

// Merge curves from repeated runs by time: mean and standard error of each
// error column. Rows are ordered by t.
void write_aggregate_csv(const std::vector<ErrorCurve>& curves,
                         const std::string& path);

// Mean of qpi_error over grid rows with t within [t_min, t_max].
double mean_error(const ErrorCurve& curve, std::int64_t t_min = 0,
                  std::int64_t t_max = INT64_MAX);

}  // namespace qpi
