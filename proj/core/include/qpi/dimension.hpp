#pragma once

#include <string>
#include <vector>

#include "qpi/hankel.hpp"

namespace qpi {

// One hypothesis test: is the residual energy chi_r = sum_{i>r} s_i^2
// explainable by measurement noise alone? Accepted when chi_r does not
// exceed its perturbation-theory mean by more than one standard deviation.
struct DimensionRow {
  int r = 0;
  double chi = 0;
  double mean = 0;       // expected chi_r under the noise model
  double sd = 0;         // sqrt of the predicted variance
  double threshold = 0;  // mean + sd
  bool accepted = false;
};

struct DimensionReport {
  std::vector<double> singular_values;  // of H, descending
  std::vector<DimensionRow> rows;       // r = 0 .. last tested
  int d = 0;              // smallest accepted r, or full rank if saturated
  bool saturated = false; // no r was accepted up to the matrix rank bound

  std::string to_text() const;
};

double residual_energy(const std::vector<double>& singulars, int r);

// Tests r = 0, 1, ... in order and stops at the first acceptance. max_r
// bounds the search (default: min(H dims)).
DimensionReport estimate_dimension(const HankelArrangement& arr,
                                   int max_r = -1);

}  // namespace qpi
