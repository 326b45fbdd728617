#include "qpi/inference.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "qpi/errors.hpp"
#include "qpi/gauss_newton.hpp"
#include "text_io.hpp"

namespace qpi {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double weighted_misfit(const Matrix& pred, const Matrix& W, const Matrix& H) {
  return (W.array() * (pred - H).array().square()).sum();
}

void add_ridge(Matrix& G) {
  G.diagonal().array() +=
      1e-12 * std::max(G.diagonal().cwiseAbs().maxCoeff(), 1e-300);
}

// Least-squares middle factor: min_X sum_cells W (A X B - H)^2 through the
// d^2 x d^2 normal equations, X packed row-major.
Matrix solve_middle_factor(const Matrix& A, const Matrix& B, const Matrix& H,
                           const Matrix& W) {
  const int d = static_cast<int>(A.cols());
  const int n = d * d;
  Matrix G = Matrix::Zero(n, n);
  Vector rhs = Vector::Zero(n);
  Vector coeff(n);
  for (int r = 0; r < H.rows(); ++r) {
    for (int c = 0; c < H.cols(); ++c) {
      for (int p = 0; p < d; ++p) {
        const double ap = A(r, p);
        for (int q = 0; q < d; ++q) coeff(p * d + q) = ap * B(q, c);
      }
      G.selfadjointView<Eigen::Lower>().rankUpdate(coeff, W(r, c));
      rhs.noalias() += (W(r, c) * H(r, c)) * coeff;
    }
  }
  add_ridge(G);
  const Vector x = G.selfadjointView<Eigen::Lower>().ldlt().solve(rhs);
  return Eigen::Map<const RowMat>(x.data(), d, d);
}

double phi_with_factors(const Matrix& A, const std::vector<Matrix>& X,
                        const Matrix& B, const std::vector<BlockSlice>& blocks) {
  double misfit = 0, count = 0;
  for (size_t bp = 0; bp < blocks.size(); ++bp) {
    misfit += weighted_misfit(A * X[bp] * B, blocks[bp].W, blocks[bp].H);
    count += blocks[bp].effective_count;
  }
  return misfit / count;
}

// One round of exact least-squares sweeps over A rows, B columns and the
// free middle factors of the blocks past the frontier. Factors at or below
// the frontier stay pinned to the corresponding powers of T.
void alternating_refresh(Matrix& A, const Matrix& T, Matrix& B,
                         const std::vector<BlockSlice>& blocks, int frontier,
                         const InferenceOptions& opts) {
  const int d = static_cast<int>(T.rows());
  const int b_bar = static_cast<int>(blocks.size()) - 1;
  const int rows = static_cast<int>(blocks[0].H.rows());
  const int group = static_cast<int>(blocks[0].H.cols());

  // Pinned blocks take powers of the current T, provided the power and its
  // misfit are representable; blocks past the frontier, and pinned blocks
  // whose power overflowed, start from their least-squares factors instead.
  std::vector<Matrix> X(b_bar + 1);
  for (int bp = 0; bp <= b_bar; ++bp) {
    if (bp <= frontier) {
      X[bp] = matrix_power(T, static_cast<std::uint64_t>(blocks[bp].power));
      if (X[bp].allFinite() &&
          std::isfinite(
              weighted_misfit(A * X[bp] * B, blocks[bp].W, blocks[bp].H)))
        continue;
    }
    X[bp] = solve_middle_factor(A, B, blocks[bp].H, blocks[bp].W);
  }

  double f = phi_with_factors(A, X, B, blocks);
  for (int sweep = 0; sweep < opts.ab_sweep_cap; ++sweep) {
    const Matrix A_prev = A, B_prev = B;
    const std::vector<Matrix> X_prev = X;
    std::vector<Matrix> XB(b_bar + 1);
    for (int bp = 0; bp <= b_bar; ++bp) XB[bp] = X[bp] * B;
    for (int r = 0; r < rows; ++r) {
      Matrix G = Matrix::Zero(d, d);
      Vector g = Vector::Zero(d);
      for (int bp = 0; bp <= b_bar; ++bp) {
        const auto& blk = blocks[bp];
        G.noalias() += XB[bp] * blk.W.row(r).asDiagonal() * XB[bp].transpose();
        g.noalias() += XB[bp] * (blk.W.row(r).array() * blk.H.row(r).array())
                                    .matrix()
                                    .transpose();
      }
      add_ridge(G);
      A.row(r) = G.ldlt().solve(g).transpose();
    }

    std::vector<Matrix> AX(b_bar + 1);
    for (int bp = 0; bp <= b_bar; ++bp) AX[bp] = A * X[bp];
    for (int c = 0; c < group; ++c) {
      Matrix G = Matrix::Zero(d, d);
      Vector g = Vector::Zero(d);
      for (int bp = 0; bp <= b_bar; ++bp) {
        const auto& blk = blocks[bp];
        G.noalias() += AX[bp].transpose() * blk.W.col(c).asDiagonal() * AX[bp];
        g.noalias() += AX[bp].transpose() *
                       (blk.W.col(c).array() * blk.H.col(c).array()).matrix();
      }
      add_ridge(G);
      B.col(c) = G.ldlt().solve(g);
    }

    for (int bp = frontier + 1; bp <= b_bar; ++bp)
      X[bp] = solve_middle_factor(A, B, blocks[bp].H, blocks[bp].W);

    const double f_new = phi_with_factors(A, X, B, blocks);
    if (!(f_new <= f)) {
      // The row, column and middle-factor solves are exact least squares,
      // so a rise or a non-finite value means the solver noise floor or
      // the representable range was hit; keep the better iterate and stop.
      A = A_prev;
      B = B_prev;
      X = X_prev;
      break;
    }
    const bool done = (f - f_new) <= opts.als_tol * std::max(f, 1e-300);
    f = f_new;
    if (done) break;
  }
}

// Damped Gauss-Newton refit of T against blocks 0..b with A, B fixed.
void refit_generator(Matrix& T, const Matrix& A, const Matrix& B,
                     const std::vector<BlockSlice>& blocks, int b,
                     const InferenceOptions& opts) {
  const int d = static_cast<int>(T.rows());
  const int n = d * d;
  const int rows = static_cast<int>(blocks[0].H.rows());
  const int group = static_cast<int>(blocks[0].H.cols());
  double count = 0;
  for (int bp = 0; bp <= b; ++bp) count += blocks[bp].effective_count;
  const double inv_count = 1.0 / count;

  auto unpack = [d](const Vector& x) {
    return Matrix(Eigen::Map<const RowMat>(x.data(), d, d));
  };
  auto objective = [&](const Vector& x) {
    return phi_b(A, unpack(x), B, blocks, b);
  };
  auto normal_equations = [&](const Vector& x, Matrix& G, Vector& g) {
    const Matrix Tx = unpack(x);
    G.setZero(n, n);
    g.setZero(n);
    for (int bp = 0; bp <= b; ++bp) {
      const auto& blk = blocks[bp];
      const auto power = static_cast<std::uint64_t>(blk.power);
      if (power == 0) continue;  // constant block, no dependence on T
      const Matrix pred = A * matrix_power(Tx, power) * B;

      // left[j] = A T^j stacked per row, right[j] = T^j B stacked per
      // column with the j axis reversed, so the cell Jacobian is one
      // d x d product.
      std::vector<Matrix> left_rows(rows, Matrix(power, d));
      std::vector<Matrix> right_cols(group, Matrix(d, power));
      Matrix cur = A;
      for (std::uint64_t j = 0; j < power; ++j) {
        if (j > 0) cur = cur * Tx;
        for (int r = 0; r < rows; ++r)
          left_rows[r].row(static_cast<int>(j)) = cur.row(r);
      }
      cur = B;
      for (std::uint64_t j = 0; j < power; ++j) {
        if (j > 0) cur = Tx * cur;
        for (int c = 0; c < group; ++c)
          right_cols[c].col(static_cast<int>(power - 1 - j)) = cur.col(c);
      }

      Matrix cellJ(d, d);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < group; ++c) {
          const double w = blk.W(r, c) * inv_count;
          const double res = pred(r, c) - blk.H(r, c);
          // cellJ(q, p) = sum_j right[power-1-j](q, c) left[j](r, p); its
          // column-major storage is exactly the row-major vec(T) gradient.
          cellJ.noalias() = right_cols[c] * left_rows[r];
          const Eigen::Map<const Vector> jrow(cellJ.data(), n);
          G.selfadjointView<Eigen::Lower>().rankUpdate(jrow, w);
          g.noalias() += (w * res) * jrow;
        }
      }
    }
  };

  GaussNewtonOptions gopts;
  gopts.max_iter = opts.gn_max_iter;
  gopts.rel_improve_tol = 1e-5;
  Vector x0(n);
  Eigen::Map<RowMat>(x0.data(), d, d) = T;
  const GaussNewtonResult fit =
      gauss_newton_minimize(objective, normal_equations, std::move(x0), gopts);
  T = unpack(fit.x);
}

const char* stage3_status_name(Stage3Status s) {
  switch (s) {
    case Stage3Status::success:
      return "converged";
    case Stage3Status::increase_dimension:
      return "stalled, dimension too small";
    default:
      return "pass limit reached";
  }
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

StageTwoResult stage2_factorize(const HankelArrangement& arr, int d,
                                const InferenceOptions& opts) {
  const int rows = arr.rows();
  const int cols = arr.cols();
  if (d < 1 || d > std::min(rows, cols))
    fail_config("factorization rank " + std::to_string(d) +
                " out of range for a " + std::to_string(rows) + " x " +
                std::to_string(cols) + " arrangement");

  Eigen::BDCSVD<Matrix> svd(arr.H, Eigen::ComputeThinU | Eigen::ComputeThinV);
  StageTwoResult res;
  res.L = svd.matrixU().leftCols(d) *
          svd.singularValues().head(d).asDiagonal();
  res.R = svd.matrixV().leftCols(d).transpose();

  double f = weighted_misfit(res.L * res.R, arr.W, arr.H);
  for (int iter = 0; iter < opts.als_max_iter; ++iter) {
    const Matrix L_prev = res.L, R_prev = res.R;
    for (int r = 0; r < rows; ++r) {
      Matrix G = res.R * arr.W.row(r).asDiagonal() * res.R.transpose();
      Vector g = res.R * (arr.W.row(r).array() * arr.H.row(r).array())
                             .matrix()
                             .transpose();
      add_ridge(G);
      res.L.row(r) = G.ldlt().solve(g).transpose();
    }
    for (int c = 0; c < cols; ++c) {
      Matrix G = res.L.transpose() * arr.W.col(c).asDiagonal() * res.L;
      Vector g = res.L.transpose() *
                 (arr.W.col(c).array() * arr.H.col(c).array()).matrix();
      add_ridge(G);
      res.R.col(c) = G.ldlt().solve(g);
    }
    res.iterations = iter + 1;
    const double f_new = weighted_misfit(res.L * res.R, arr.W, arr.H);
    if (!std::isfinite(f_new))
      fail_numeric("weighted factorization misfit became non-finite");
    if (f_new > f) {
      // Alternating least squares is monotone in exact arithmetic; a rise
      // means the iteration reached the solver's noise floor. Keep the
      // better iterate and stop.
      res.L = L_prev;
      res.R = R_prev;
      break;
    }
    const bool done = (f - f_new) <= opts.als_tol * std::max(f, 1e-300);
    f = f_new;
    if (done) break;
  }
  res.factor_objective = f;
  res.T = solve_middle_factor(res.L, res.R, arr.Hshift, arr.Wshift);
  res.shift_objective =
      weighted_misfit(res.L * res.T * res.R, arr.Wshift, arr.Hshift);
  return res;
}

double phi_b(const Matrix& A, const Matrix& T, const Matrix& B,
             const std::vector<BlockSlice>& blocks, int b) {
  if (b < 0 || b >= static_cast<int>(blocks.size()))
    fail_config("block index " + std::to_string(b) + " out of range");
  double misfit = 0, count = 0;
  for (int bp = 0; bp <= b; ++bp) {
    const Matrix pred =
        A * matrix_power(T, static_cast<std::uint64_t>(blocks[bp].power)) * B;
    misfit += weighted_misfit(pred, blocks[bp].W, blocks[bp].H);
    count += blocks[bp].effective_count;
  }
  return misfit / count;
}

Stage3Result stage3_progressive_fit(const StageTwoResult& init,
                                    const HankelArrangement& arr,
                                    const std::vector<BlockSlice>& blocks,
                                    const InferenceOptions& opts) {
  if (blocks.empty()) fail_config("progressive fit needs at least one block");
  const int d = static_cast<int>(init.T.rows());
  const int b_bar = static_cast<int>(blocks.size()) - 1;
  const int group = static_cast<int>(blocks[0].H.cols());

  Stage3Result res;
  res.A = init.L;
  res.T = init.T;
  res.B.resize(d, group);
  for (int c = 0; c < arr.cols(); ++c)
    if (arr.col_block[c] == 0)
      res.B.col(arr.col_meas[c] * (arr.l + 1) + arr.col_k2[c]) = init.R.col(c);

  // The frontier is the lowest block not yet fit through powers of T; the
  // blocks past it keep free middle factors during the alternating sweeps.
  // The scan treats a non-finite misfit (an unstable T raised to a large
  // power) the same as a failing one.
  int frontier = b_bar;
  for (int b = 0; b <= b_bar; ++b) {
    if (!(phi_b(res.A, res.T, res.B, blocks, b) <= opts.phi_accept)) {
      frontier = b;
      break;
    }
  }

  Matrix best_A = res.A, best_T = res.T, best_B = res.B;
  double best_tail = phi_b(res.A, res.T, res.B, blocks, b_bar);
  if (!std::isfinite(best_tail))
    best_tail = std::numeric_limits<double>::infinity();
  double prev_tail = std::numeric_limits<double>::infinity();

  for (int pass = 0; pass < opts.max_passes; ++pass) {
    res.passes = pass + 1;
    alternating_refresh(res.A, res.T, res.B, blocks, frontier, opts);

    bool attempted_last = true;
    for (int b = std::min(2, b_bar); b <= b_bar; ++b) {
      if (b < frontier && phi_b(res.A, res.T, res.B, blocks, b) <= opts.phi_accept)
        continue;
      refit_generator(res.T, res.A, res.B, blocks, b, opts);
      frontier = std::max(frontier, b);
      if (!(phi_b(res.A, res.T, res.B, blocks, b) <= opts.phi_accept)) {
        attempted_last = b == b_bar;
        break;  // stuck at this block for the rest of the pass
      }
    }

    const double tail = phi_b(res.A, res.T, res.B, blocks, b_bar);
    if (tail < best_tail) {
      best_tail = tail;
      best_A = res.A;
      best_T = res.T;
      best_B = res.B;
    }
    if (opts.verbose)
      std::fprintf(stderr, "pass %d: frontier %d, tail misfit %.6g\n",
                   res.passes, frontier, tail);
    if (tail <= opts.phi_accept) {
      res.status = Stage3Status::success;
      break;
    }
    // A pass stuck before the last block gets another pass regardless of the
    // improvement test: the full-depth misfit is only comparable between
    // passes whose generator refits reached the last block.
    if (attempted_last && prev_tail - tail <= opts.phi_improve) {
      res.status = Stage3Status::increase_dimension;
      break;
    }
    prev_tail = tail;
  }

  if (res.status != Stage3Status::success) {
    res.A = std::move(best_A);
    res.T = std::move(best_T);
    res.B = std::move(best_B);
  }
  res.phi.resize(b_bar + 1);
  for (int b = 0; b <= b_bar; ++b)
    res.phi[b] = phi_b(res.A, res.T, res.B, blocks, b);
  return res;
}

double refinement_weight(double pred, double trials, double beta) {
  const double v = pred * (1 - pred) / trials;
  return 1.0 / (v + std::sqrt(v * v + 4 * beta * beta));
}

Stage4Result stage4_refine(const Model& init, const Dataset& data,
                           const InferenceOptions& opts) {
  init.validate();
  data.validate();
  if (init.n_init() != data.n_init() || init.n_meas() != data.n_meas())
    fail_config("model shape does not match the dataset labels");

  const int d = init.d;
  const int ni = init.n_init();
  const int nm = init.n_meas();
  const int nS = ni * d, nT = d * d, nP = d * nm;
  const int ntot = nS + nT + nP;
  const auto& recs = data.records;
  const int n_rec = static_cast<int>(recs.size());
  const double norm = 1.0 / n_rec;

  std::int64_t max_t = 0;
  Vector target(n_rec);
  std::vector<double> beta(n_rec);
  std::map<std::int64_t, std::vector<int>> by_t;
  for (int k = 0; k < n_rec; ++k) {
    max_t = std::max(max_t, recs[k].t);
    target(k) = freq(recs[k]);
    beta[k] = 1.0 / static_cast<double>(recs[k].N);
    by_t[recs[k].t].push_back(k);
  }

  auto unpack = [&](const Vector& x, Matrix& S, Matrix& T, Matrix& P) {
    S = Eigen::Map<const RowMat>(x.data(), ni, d);
    T = Eigen::Map<const RowMat>(x.data() + nS, d, d);
    P = Eigen::Map<const RowMat>(x.data() + nS + nT, d, nm);
  };
  auto predictions = [&](const Matrix& S, const Matrix& T, const Matrix& P) {
    Vector F(n_rec);
    Matrix V = P;
    std::int64_t t_cur = 0;
    for (const auto& [t, idx] : by_t) {
      while (t_cur < t) {
        V = T * V;
        ++t_cur;
      }
      for (int k : idx) F(k) = S.row(recs[k].i).dot(V.col(recs[k].m));
    }
    return F;
  };

  auto data_weight = [&](double pred, int k) {
    return refinement_weight(pred, static_cast<double>(recs[k].N), beta[k]);
  };

  auto objective = [&](const Vector& x) {
    Matrix S, T, P;
    unpack(x, S, T, P);
    const Vector F = predictions(S, T, P);
    double psi = 0;
    for (int k = 0; k < n_rec; ++k) {
      const double r = F(k) - target(k);
      psi += data_weight(F(k), k) * r * r;
    }
    return norm * psi + eigen_penalty(T);
  };

  auto normal_equations = [&](const Vector& x, Matrix& G, Vector& g) {
    Matrix S, T, P;
    unpack(x, S, T, P);
    std::vector<Matrix> SP(max_t + 1), PT(max_t + 1);
    SP[0] = S;
    PT[0] = P;
    for (std::int64_t j = 1; j <= max_t; ++j) {
      SP[j] = SP[j - 1] * T;
      PT[j] = T * PT[j - 1];
    }
    G.setZero(ntot, ntot);
    g.setZero(ntot);
    Vector jrow(ntot);
    for (int k = 0; k < n_rec; ++k) {
      const int i = recs[k].i;
      const int m = recs[k].m;
      const std::int64_t t = recs[k].t;
      const double pred = SP[t].row(i).dot(P.col(m));
      const double w = norm * data_weight(pred, k);
      jrow.setZero();
      for (int q = 0; q < d; ++q) jrow(i * d + q) = PT[t](q, m);
      for (std::int64_t j = 0; j < t; ++j) {
        const Matrix& sp = SP[j];
        const Matrix& pt = PT[t - 1 - j];
        for (int p = 0; p < d; ++p) {
          const double a = sp(i, p);
          for (int q = 0; q < d; ++q) jrow(nS + p * d + q) += a * pt(q, m);
        }
      }
      for (int p = 0; p < d; ++p) jrow(nS + nT + p * nm + m) = SP[t](i, p);
      G.selfadjointView<Eigen::Lower>().rankUpdate(jrow, w);
      g.noalias() += (w * (pred - target(k))) * jrow;
    }
    const EigenPenaltyTerms terms = eigen_penalty_terms(T, opts.jitter_seed);
    G.block(nS, nS, nT, nT).noalias() +=
        terms.jacobian.transpose() * terms.jacobian;
    g.segment(nS, nT).noalias() += terms.jacobian.transpose() * terms.residuals;
  };

  auto valid_at = [&](const Vector& x) {
    Matrix S, T, P;
    unpack(x, S, T, P);
    const Vector F = predictions(S, T, P);
    return F;
  };
  auto on_accept = [&](const Vector& x) {
    const Vector F = valid_at(x);
    for (int k = 0; k < n_rec; ++k)
      if (!(F(k) >= 0 && F(k) <= 1)) beta[k] *= opts.beta_decay;
  };
  auto should_stop = [&](const Vector& x, double rel) {
    if (!(rel < opts.psi_improve)) return false;
    const Vector F = valid_at(x);
    for (int k = 0; k < n_rec; ++k)
      if (!(F(k) >= 0 && F(k) <= 1)) return false;
    return true;
  };

  Vector x0(ntot);
  Eigen::Map<RowMat>(x0.data(), ni, d) = init.S;
  Eigen::Map<RowMat>(x0.data() + nS, d, d) = init.T;
  Eigen::Map<RowMat>(x0.data() + nS + nT, d, nm) = init.P;

  GaussNewtonOptions gopts;
  gopts.max_iter = opts.stage4_max_iter;
  const GaussNewtonResult fit = gauss_newton_minimize(
      objective, normal_equations, std::move(x0), gopts, on_accept, should_stop);

  Stage4Result out;
  out.model = init;
  unpack(fit.x, out.model.S, out.model.T, out.model.P);
  out.psi = fit.objective;
  out.penalty = eigen_penalty(out.model.T);
  out.iterations = fit.iterations;
  out.line_search_failed = fit.line_search_failed;
  out.hit_iteration_cap = !fit.converged && !fit.line_search_failed &&
                          fit.iterations >= gopts.max_iter;
  return out;
}

std::string InferenceReport::to_text() const {
  std::string out;
  out += "estimated dimension: " + std::to_string(d_estimated);
  if (dimension.saturated) out += " (rank test saturated)";
  out += "\nfinal dimension: " + std::to_string(d_final) + "\n";
  out += "factorization misfit: " + fmt6(stage2_factor_objective) + "\n";
  out += "shift misfit: " + fmt6(stage2_shift_objective) + "\n";
  out += "progressive fit: " + std::string(stage3_status_name(stage3_status)) +
         " after " + std::to_string(stage3_passes) + " passes\n";
  out += "block misfits:";
  for (double p : stage3_phi) out += " " + fmt6(p);
  out += "\nrefined objective: " + fmt6(stage4_psi) + " (spectral penalty " +
         fmt6(stage4_penalty) + ")\n";
  out += "refinement iterations: " + std::to_string(stage4_iterations);
  if (stage4_hit_cap) out += " (iteration cap)";
  if (stage4_line_search_failed) out += " (line search stalled)";
  out += "\n";
  return out;
}

InferenceResult infer(const Dataset& data, const InferenceOptions& opts) {
  data.validate();
  const Schedule sched = build_schedule(data.schedule_params);
  const HankelArrangement arr = assemble(data, sched, opts.pseudocount);
  const std::vector<BlockSlice> blocks = slice_blocks(arr);

  InferenceReport report;
  report.dimension = estimate_dimension(arr);
  report.d_estimated = report.dimension.d;

  const int d_cap = std::min(arr.rows(), arr.cols());
  StageTwoResult s2_best;
  Stage3Result s3_best;
  int d_best = 0;
  double tail_best = std::numeric_limits<double>::infinity();
  for (int bump = 0; bump <= opts.d_increase_cap; ++bump) {
    const int d_try = report.d_estimated + bump;
    if (d_try > d_cap) break;
    if (opts.verbose)
      std::fprintf(stderr, "fitting at dimension %d\n", d_try);
    StageTwoResult s2 = stage2_factorize(arr, d_try, opts);
    Stage3Result s3 = stage3_progressive_fit(s2, arr, blocks, opts);
    const Stage3Status status = s3.status;
    const double tail = s3.phi.back();
    if (status == Stage3Status::success || d_best == 0 || tail < tail_best) {
      tail_best = tail;
      s2_best = std::move(s2);
      s3_best = std::move(s3);
      d_best = d_try;
    }
    if (status == Stage3Status::success) break;
  }
  if (d_best == 0) fail_numeric("no candidate dimension could be fit");

  report.d_final = d_best;
  report.stage2_factor_objective = s2_best.factor_objective;
  report.stage2_shift_objective = s2_best.shift_objective;
  report.stage3_status = s3_best.status;
  report.stage3_passes = s3_best.passes;
  report.stage3_phi = s3_best.phi;

  const int l = arr.l;
  const int row_stride = (arr.a_bar + 1) * (l + 1);
  Model seed_model;
  seed_model.d = d_best;
  seed_model.S.resize(arr.n_i, d_best);
  for (int i = 0; i < arr.n_i; ++i)
    seed_model.S.row(i) = s3_best.A.row(i * row_stride);
  seed_model.T = s3_best.T;
  seed_model.P.resize(d_best, arr.n_m);
  for (int m = 0; m < arr.n_m; ++m)
    seed_model.P.col(m) = s3_best.B.col(m * (l + 1));
  seed_model.init_labels = data.init_labels;
  seed_model.meas_labels = data.meas_labels;

  const Stage4Result s4 = stage4_refine(seed_model, data, opts);
  report.stage4_psi = s4.psi;
  report.stage4_penalty = s4.penalty;
  report.stage4_iterations = s4.iterations;
  report.stage4_hit_cap = s4.hit_iteration_cap;
  report.stage4_line_search_failed = s4.line_search_failed;

  InferenceResult out;
  out.model = s4.model;
  out.report = std::move(report);
  return out;
}

}  // namespace qpi
