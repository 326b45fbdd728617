#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qpi/dataset.hpp"
#include "qpi/dimension.hpp"
#include "qpi/hankel.hpp"
#include "qpi/model.hpp"

namespace qpi {

struct InferenceOptions {
  double pseudocount = 1.0;  // count regularizer for variance estimates

  // Stage 2: weighted low-rank factorization.
  int als_max_iter = 200;
  double als_tol = 1e-8;

  // Stage 3: progressive block fit.
  double phi_accept = 1.5;    // block misfit acceptance threshold
  double phi_improve = 1e-3;  // pass-over-pass improvement cutoff
  int ab_sweep_cap = 50;      // alternating A/B sweeps per refresh
  int gn_max_iter = 30;       // generator steps per block visit
  int max_passes = 25;
  int d_increase_cap = 5;     // dimension bumps above the initial estimate

  // Stage 4: maximum-likelihood polish.
  double psi_improve = 1e-4;
  int stage4_max_iter = 200;
  double beta_decay = 0.95;  // weight-floor shrink on invalid predictions

  std::uint64_t jitter_seed = 1;
  bool verbose = false;
};

// Weighted truncated-SVD factorization of the Hankel arrangement plus the
// shift-equation solve for T. L has one row per Hankel row, R one column per
// Hankel column, with H ~ L R at rank d.
struct StageTwoResult {
  Matrix L, R, T;
  double factor_objective = 0;  // weighted misfit of L R against H
  double shift_objective = 0;   // weighted misfit of L T R against Hshift
  int iterations = 0;
};

StageTwoResult stage2_factorize(const HankelArrangement& arr, int d,
                                const InferenceOptions& opts);

// Mean weighted squared misfit of A T^rho(b') B against the observed block
// slices for b' = 0..b, normalized by the accumulated effective cell count.
double phi_b(const Matrix& A, const Matrix& T, const Matrix& B,
             const std::vector<BlockSlice>& blocks, int b);

enum class Stage3Status { success, increase_dimension, timeout };

struct Stage3Result {
  Stage3Status status = Stage3Status::timeout;
  Matrix A, T, B;
  std::vector<double> phi;  // phi_b after the final pass, one entry per block
  int passes = 0;
};

Stage3Result stage3_progressive_fit(const StageTwoResult& init,
                                    const HankelArrangement& arr,
                                    const std::vector<BlockSlice>& blocks,
                                    const InferenceOptions& opts);

// Buffered inverse-variance weight used by the final refinement:
// 1 / (V + sqrt(V^2 + 4 beta^2)) with V = pred (1 - pred) / trials. Positive
// and continuous in pred even where the nominal binomial variance V is
// negative (out-of-range predictions); beta > 0 is the buffer scale.
double refinement_weight(double pred, double trials, double beta);

struct Stage4Result {
  Model model;
  double psi = 0;
  double penalty = 0;  // spectral penalty at the solution
  int iterations = 0;
  bool hit_iteration_cap = false;
  bool line_search_failed = false;
};

// Likelihood-weighted refinement of all model parameters against the raw
// counts, with a spectral penalty keeping T power-bounded.
Stage4Result stage4_refine(const Model& init, const Dataset& data,
                           const InferenceOptions& opts);

struct InferenceReport {
  DimensionReport dimension;
  int d_estimated = 0;  // from the singular-value test
  int d_final = 0;      // after any stage-3 dimension bumps
  double stage2_factor_objective = 0;
  double stage2_shift_objective = 0;
  Stage3Status stage3_status = Stage3Status::timeout;
  int stage3_passes = 0;
  std::vector<double> stage3_phi;
  double stage4_psi = 0;
  double stage4_penalty = 0;
  int stage4_iterations = 0;
  bool stage4_hit_cap = false;
  bool stage4_line_search_failed = false;

  std::string to_text() const;
};

struct InferenceResult {
  Model model;
  InferenceReport report;
};

// Full pipeline: assemble the Hankel arrangement, estimate the dimension,
// run the progressive fit (bumping the dimension on demand), and polish
// against the raw counts.
InferenceResult infer(const Dataset& data, const InferenceOptions& opts = {});

}  // namespace qpi
