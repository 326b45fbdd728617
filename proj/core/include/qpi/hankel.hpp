#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qpi/dataset.hpp"
#include "qpi/model.hpp"
#include "qpi/schedule.hpp"

namespace qpi {

// The assembled measurement matrix and its one-step time shift.
//
// Rows are indexed by (i, a, k1) with i outermost and k1 in 0..l; columns by
// (m, b, k2) with m outermost. Cell (r, c) of H holds the frequency of
// experiment (i, rho_a + rho_b + k1 + k2, m); Hshift holds the same at t+1.
// Weights are inverse estimated variance divided by the multiplicity of the
// experiment, so every experiment carries the same total weight.
struct HankelArrangement {
  int n_i = 0, n_m = 0, l = 0, a_bar = 0, b_bar = 0;
  Matrix H, Hshift;
  Matrix W, Wshift;

  // Per-row / per-column index decompositions.
  std::vector<int> row_init, row_a, row_k1;
  std::vector<int> col_meas, col_block, col_k2;
  std::vector<std::int64_t> row_time, col_time;  // t(r,c) = row_time + col_time

  // Experiments appearing in H, id-indexed.
  std::vector<int> exp_init, exp_meas;
  std::vector<std::int64_t> exp_time;
  std::vector<double> exp_var;
  std::vector<int> exp_mult;
  std::vector<std::vector<std::pair<int, int>>> exp_cells;  // (row, col) lists

  int rows() const { return static_cast<int>(H.rows()); }
  int cols() const { return static_cast<int>(H.cols()); }
  int n_experiments() const { return static_cast<int>(exp_var.size()); }
  int exp_id(int r, int c) const { return cell_exp_[r * cols() + c]; }

  std::vector<int> cell_exp_;  // row-major cell -> experiment id
};

// Builds H, Hshift, weights and the experiment index from a dataset that
// covers the schedule. Requires flight_len >= 2l+2 so both H and Hshift are
// fillable from within single flights.
HankelArrangement assemble(const Dataset& ds, const Schedule& sched,
                           double pseudocount = 1.0);

// One column group of the arrangement: block b restricted to columns (m, k2),
// value F(rho_a + rho_b + k1 + k2). Weight cells match the parent arrangement.
struct BlockSlice {
  int b = 0;
  std::int64_t power = 0;  // rho_b
  Matrix H;                // rows x (n_m * (l+1))
  Matrix W;
  double effective_count = 0;  // sum over cells of 1 / multiplicity
};

std::vector<BlockSlice> slice_blocks(const HankelArrangement& arr);

// Classic block-Hankel layout for exact time-response data: cell block
// (k1, k2) of the output holds X[k1 + k2 + shift], rows (k1 outer, i inner),
// columns (k2 outer, m inner). X must contain 2l+1+shift matrices.
Matrix build_block_hankel(const std::vector<Matrix>& X, int l, int shift = 0);

// Noise-free realization: rank-d factorization H = L*R by truncated SVD,
// T = pinv(L) * Hshift * pinv(R), S = first n_rows_keep rows of L, P = first
// n_cols_keep columns of R. Fails unless H has numerical rank exactly d
// (sigma_{d+1}/sigma_1 < rank_tol <= sigma_d/sigma_1).
Model ho_kalman_exact(const Matrix& H, const Matrix& Hshift, int n_rows_keep,
                      int n_cols_keep, int d, double rank_tol = 1e-8);

// Debug dump of H with row/column index tuples in the header line/column.
void write_hankel_csv(const HankelArrangement& arr, const std::string& path);

}  // namespace qpi
