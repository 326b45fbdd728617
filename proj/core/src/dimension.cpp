#include "qpi/dimension.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>

#include "qpi/errors.hpp"

namespace qpi {

double residual_energy(const std::vector<double>& singulars, int r) {
  double chi = 0;
  // smallest-first summation keeps the tail accurate
  for (int k = static_cast<int>(singulars.size()) - 1; k >= r; --k)
    chi += singulars[k] * singulars[k];
  return chi;
}

namespace {

// Mean and variance of chi_r under first-order perturbation: with
// G_u = I - U_r U_r^T and G_v = I - V_r V_r^T, the residual is
// ||G_u (sum_x eps_x E_x) G_v||_F^2, a quadratic form in the independent
// per-experiment errors eps_x. Its mean is sum_x var_x ||A_x||_F^2 and its
// variance 2 sum_xy var_x var_y <A_x, A_y>^2 with A_x = G_u E_x G_v.
void chi_moments(const HankelArrangement& arr, const Matrix& Gu,
                 const Matrix& Gv, double& mean, double& var) {
  const int rows = arr.rows(), cols = arr.cols();
  const int nc = rows * cols;
  const int ne = arr.n_experiments();

  // Cell-pair accumulation of <A_x, A_y>; unordered pairs once, diagonal
  // cell terms separately, exploiting the symmetry of the projectors.
  Matrix pair_sum = Matrix::Zero(ne, ne);
  Vector diag_sum = Vector::Zero(ne);
  std::vector<int> cr(nc), cc(nc), ce(nc);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int k = r * cols + c;
      cr[k] = r;
      cc[k] = c;
      ce[k] = arr.exp_id(r, c);
    }
  for (int k1 = 0; k1 < nc; ++k1) {
    const double* gu = Gu.col(cr[k1]).data();  // symmetric: column = row
    const double* gv = Gv.col(cc[k1]).data();
    const int e1 = ce[k1];
    diag_sum(e1) += gu[cr[k1]] * gv[cc[k1]];
    for (int k2 = k1 + 1; k2 < nc; ++k2)
      pair_sum(e1, ce[k2]) += gu[cr[k2]] * gv[cc[k2]];
  }

  mean = 0;
  var = 0;
  for (int x = 0; x < ne; ++x) {
    const double mxx = 2 * pair_sum(x, x) + diag_sum(x);
    mean += arr.exp_var[x] * mxx;
    var += 2 * arr.exp_var[x] * arr.exp_var[x] * mxx * mxx;
    for (int y = x + 1; y < ne; ++y) {
      const double mxy = pair_sum(x, y) + pair_sum(y, x);
      var += 4 * arr.exp_var[x] * arr.exp_var[y] * mxy * mxy;
    }
  }
}

}  // namespace

std::string DimensionReport::to_text() const {
  char buf[160];
  std::string out = "singular values:\n";
  for (std::size_t k = 0; k < singular_values.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "  %3zu  %.9g\n", k + 1,
                  singular_values[k]);
    out += buf;
  }
  out += "rank tests (accept when chi <= mean + sd):\n";
  out += "  r  chi  mean  sd  accepted\n";
  for (const DimensionRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "  %d  %.9g  %.9g  %.9g  %s\n", row.r,
                  row.chi, row.mean, row.sd, row.accepted ? "yes" : "no");
    out += buf;
  }
  out += "estimated dimension: " + std::to_string(d) + "\n";
  out += std::string("saturated: ") + (saturated ? "yes" : "no") + "\n";
  return out;
}

DimensionReport estimate_dimension(const HankelArrangement& arr, int max_r) {
  const int h = static_cast<int>(std::min(arr.H.rows(), arr.H.cols()));
  if (max_r < 0 || max_r > h - 1) max_r = h - 1;

  Eigen::BDCSVD<Matrix> svd(arr.H,
                            Eigen::ComputeThinU | Eigen::ComputeThinV);
  DimensionReport report;
  report.singular_values.assign(svd.singularValues().data(),
                                svd.singularValues().data() + h);

  Matrix Gu = Matrix::Identity(arr.rows(), arr.rows());
  Matrix Gv = Matrix::Identity(arr.cols(), arr.cols());
  report.d = max_r + 1;
  report.saturated = true;
  for (int r = 0; r <= max_r; ++r) {
    if (r > 0) {
      Gu.noalias() -= svd.matrixU().col(r - 1) * svd.matrixU().col(r - 1).transpose();
      Gv.noalias() -= svd.matrixV().col(r - 1) * svd.matrixV().col(r - 1).transpose();
    }
    DimensionRow row;
    row.r = r;
    row.chi = residual_energy(report.singular_values, r);
    chi_moments(arr, Gu, Gv, row.mean, row.sd);
    row.sd = std::sqrt(std::max(row.sd, 0.0));
    row.threshold = row.mean + row.sd;
    row.accepted = row.chi <= row.threshold;
    report.rows.push_back(row);
    if (row.accepted) {
      report.d = r;
      report.saturated = false;
      break;
    }
  }
  if (report.d < 1) report.d = 1;  // a zero-dimensional model is never useful
  return report;
}

}  // namespace qpi
