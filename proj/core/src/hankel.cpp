#include "qpi/hankel.hpp"

#include <Eigen/Dense>
#include <map>
#include <tuple>

#include "qpi/errors.hpp"
#include "text_io.hpp"

namespace qpi {

HankelArrangement assemble(const Dataset& ds, const Schedule& sched,
                           double pseudocount) {
  ds.validate();
  if (!(ds.schedule_params.l == sched.params.l &&
        ds.schedule_params.a_bar == sched.params.a_bar &&
        ds.schedule_params.b_bar == sched.params.b_bar &&
        ds.schedule_params.resolved_flight_len() ==
            sched.params.resolved_flight_len()))
    fail_config("dataset and schedule parameters disagree");
  const int l = sched.params.l;
  const int a_bar = sched.params.a_bar;
  const int b_bar = sched.params.b_bar;
  // Cells reach offset 2l within a flight and the shifted matrix needs one
  // more step, so both matrices only fill from single flights at >= 2l+2.
  if (sched.params.resolved_flight_len() < 2 * l + 2)
    fail_config("flight length must be at least 2l+2 to assemble the shifted matrix");

  HankelArrangement arr;
  arr.n_i = ds.n_init();
  arr.n_m = ds.n_meas();
  arr.l = l;
  arr.a_bar = a_bar;
  arr.b_bar = b_bar;

  const int rows = arr.n_i * (a_bar + 1) * (l + 1);
  const int cols = arr.n_m * (b_bar + 1) * (l + 1);
  arr.row_init.resize(rows);
  arr.row_a.resize(rows);
  arr.row_k1.resize(rows);
  arr.row_time.resize(rows);
  for (int i = 0; i < arr.n_i; ++i)
    for (int a = 0; a <= a_bar; ++a)
      for (int k1 = 0; k1 <= l; ++k1) {
        const int r = (i * (a_bar + 1) + a) * (l + 1) + k1;
        arr.row_init[r] = i;
        arr.row_a[r] = a;
        arr.row_k1[r] = k1;
        arr.row_time[r] = rho(a) + k1;
      }
  arr.col_meas.resize(cols);
  arr.col_block.resize(cols);
  arr.col_k2.resize(cols);
  arr.col_time.resize(cols);
  for (int m = 0; m < arr.n_m; ++m)
    for (int b = 0; b <= b_bar; ++b)
      for (int k2 = 0; k2 <= l; ++k2) {
        const int c = (m * (b_bar + 1) + b) * (l + 1) + k2;
        arr.col_meas[c] = m;
        arr.col_block[c] = b;
        arr.col_k2[c] = k2;
        arr.col_time[c] = rho(b) + k2;
      }

  const auto mult = hankel_multiplicity(sched.params);
  arr.H.resize(rows, cols);
  arr.Hshift.resize(rows, cols);
  arr.W.resize(rows, cols);
  arr.Wshift.resize(rows, cols);
  arr.cell_exp_.resize(static_cast<std::size_t>(rows) * cols);

  std::map<std::tuple<int, std::int64_t, int>, int> exp_ids;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int i = arr.row_init[r];
      const int m = arr.col_meas[c];
      const std::int64_t t = arr.row_time[r] + arr.col_time[c];
      const int cell_mult = mult.at(t);

      const ExperimentRecord& rec = ds.at(i, t, m);
      const double var = estimate_variance(rec, pseudocount);
      arr.H(r, c) = freq(rec);
      arr.W(r, c) = 1.0 / (var * cell_mult);

      // The shifted cell reads the experiment one step later but shares the
      // structural multiplicity of its (a,b,k1,k2) slot.
      const ExperimentRecord& rec_next = ds.at(i, t + 1, m);
      arr.Hshift(r, c) = freq(rec_next);
      arr.Wshift(r, c) =
          1.0 / (estimate_variance(rec_next, pseudocount) * cell_mult);

      auto [it, fresh] =
          exp_ids.try_emplace(std::make_tuple(i, t, m),
                              static_cast<int>(arr.exp_var.size()));
      if (fresh) {
        arr.exp_init.push_back(i);
        arr.exp_meas.push_back(m);
        arr.exp_time.push_back(t);
        arr.exp_var.push_back(var);
        arr.exp_mult.push_back(cell_mult);
        arr.exp_cells.emplace_back();
      }
      const int id = it->second;
      arr.exp_cells[id].push_back({r, c});
      arr.cell_exp_[static_cast<std::size_t>(r) * cols + c] = id;
    }

  for (int e = 0; e < arr.n_experiments(); ++e)
    if (static_cast<int>(arr.exp_cells[e].size()) != arr.exp_mult[e])
      fail_numeric("experiment multiplicity disagrees with its cell count");
  return arr;
}

std::vector<BlockSlice> slice_blocks(const HankelArrangement& arr) {
  const int group = arr.n_m * (arr.l + 1);
  std::vector<BlockSlice> blocks(arr.b_bar + 1);
  for (int b = 0; b <= arr.b_bar; ++b) {
    BlockSlice& slice = blocks[b];
    slice.b = b;
    slice.power = rho(b);
    slice.H.resize(arr.rows(), group);
    slice.W.resize(arr.rows(), group);
  }
  for (int c = 0; c < arr.cols(); ++c) {
    const int b = arr.col_block[c];
    const int j = arr.col_meas[c] * (arr.l + 1) + arr.col_k2[c];
    blocks[b].H.col(j) = arr.H.col(c);
    blocks[b].W.col(j) = arr.W.col(c);
    for (int r = 0; r < arr.rows(); ++r) {
      const int e = arr.exp_id(r, c);
      blocks[b].effective_count += 1.0 / arr.exp_mult[e];
    }
  }
  return blocks;
}

Matrix build_block_hankel(const std::vector<Matrix>& X, int l, int shift) {
  if (l < 0 || shift < 0) fail_config("block-Hankel depth and shift must be nonnegative");
  if (static_cast<int>(X.size()) < 2 * l + 1 + shift)
    fail_config("block-Hankel construction needs 2l+1+shift response matrices");
  const auto ni = X[0].rows(), nm = X[0].cols();
  Matrix H((l + 1) * ni, (l + 1) * nm);
  for (int k1 = 0; k1 <= l; ++k1)
    for (int k2 = 0; k2 <= l; ++k2) {
      const Matrix& blk = X[k1 + k2 + shift];
      if (blk.rows() != ni || blk.cols() != nm)
        fail_config("block-Hankel response matrices must share one shape");
      H.block(k1 * ni, k2 * nm, ni, nm) = blk;
    }
  return H;
}

Model ho_kalman_exact(const Matrix& H, const Matrix& Hshift, int n_rows_keep,
                      int n_cols_keep, int d, double rank_tol) {
  if (H.rows() != Hshift.rows() || H.cols() != Hshift.cols())
    fail_config("matrix and its shift must share one shape");
  if (d < 1 || d > std::min(H.rows(), H.cols()))
    fail_config("requested dimension exceeds the matrix size");
  if (n_rows_keep < 1 || n_rows_keep > H.rows() || n_cols_keep < 1 ||
      n_cols_keep > H.cols())
    fail_config("kept row/column counts out of range");

  Eigen::BDCSVD<Matrix> svd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sing = svd.singularValues();
  const double s1 = sing(0);
  if (!(s1 > 0)) fail_numeric("matrix is numerically zero");
  if (sing(d - 1) / s1 < rank_tol)
    fail_numeric("matrix rank is below the requested dimension");
  if (d < sing.size() && sing(d) / s1 >= rank_tol)
    fail_numeric("matrix rank exceeds the requested dimension");

  // Balanced factors: L = U sqrt(Sigma), R = sqrt(Sigma) V^T. Their
  // pseudoinverses reduce to transposed scaling because U, V have
  // orthonormal columns.
  const Vector root = sing.head(d).cwiseSqrt();
  const Matrix Ud = svd.matrixU().leftCols(d);
  const Matrix Vd = svd.matrixV().leftCols(d);
  const Matrix L = Ud * root.asDiagonal();
  const Matrix R = root.asDiagonal() * Vd.transpose();

  Model m;
  m.d = d;
  m.T = root.cwiseInverse().asDiagonal() * (Ud.transpose() * Hshift * Vd) *
        root.cwiseInverse().asDiagonal();
  m.S = L.topRows(n_rows_keep);
  m.P = R.leftCols(n_cols_keep);
  m.init_labels.reserve(n_rows_keep);
  for (int k = 0; k < n_rows_keep; ++k)
    m.init_labels.push_back("i" + std::to_string(k));
  m.meas_labels.reserve(n_cols_keep);
  for (int k = 0; k < n_cols_keep; ++k)
    m.meas_labels.push_back("m" + std::to_string(k));
  return m;
}

void write_hankel_csv(const HankelArrangement& arr, const std::string& path) {
  std::string out = "row";
  for (int c = 0; c < arr.cols(); ++c)
    out += ",m" + std::to_string(arr.col_meas[c]) + ":b" +
           std::to_string(arr.col_block[c]) + ":k" +
           std::to_string(arr.col_k2[c]);
  out += "\n";
  for (int r = 0; r < arr.rows(); ++r) {
    out += "i" + std::to_string(arr.row_init[r]) + ":a" +
           std::to_string(arr.row_a[r]) + ":k" + std::to_string(arr.row_k1[r]);
    for (int c = 0; c < arr.cols(); ++c)
      out += "," + detail::fmt_double(arr.H(r, c));
    out += "\n";
  }
  detail::write_text(path, out);
}

}  // namespace qpi
