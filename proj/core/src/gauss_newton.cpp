#include "qpi/gauss_newton.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "qpi/errors.hpp"
#include "rng.hpp"

namespace qpi {

GaussNewtonResult gauss_newton_minimize(
    const std::function<double(const Vector&)>& objective,
    const std::function<void(const Vector&, Matrix&, Vector&)>& normal_equations,
    Vector x0, const GaussNewtonOptions& opts,
    const std::function<void(const Vector&)>& on_accept,
    const std::function<bool(const Vector&, double)>& should_stop) {
  GaussNewtonResult result;
  result.x = std::move(x0);
  result.objective = objective(result.x);

  const int n = static_cast<int>(result.x.size());
  Matrix G(n, n);
  Vector g(n);
  double lambda = -1;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    normal_equations(result.x, G, g);
    if (lambda < 0)
      lambda = opts.damping_scale * std::max(G.trace() / n, 1e-300);

    bool accepted = false;
    Vector x_new;
    double f_new = 0;
    for (int round = 0; round < opts.max_damping_rounds && !accepted; ++round) {
      Matrix damped = G;
      damped.diagonal().array() += lambda;
      Eigen::LDLT<Matrix> ldlt(damped);
      if (ldlt.info() != Eigen::Success) {
        lambda *= 10;
        continue;
      }
      const Vector dx = ldlt.solve(-g);
      const double slope = 2 * g.dot(dx);  // directional derivative, < 0
      if (!dx.allFinite() || slope > 0) {
        lambda *= 10;
        continue;
      }

      double step = 1;
      for (int bt = 0; bt < opts.max_backtracks; ++bt) {
        x_new = result.x + step * dx;
        f_new = objective(x_new);
        if (std::isfinite(f_new) &&
            f_new <= result.objective + opts.armijo * step * slope) {
          accepted = true;
          break;
        }
        step /= 2;
      }
      if (!accepted) lambda *= 10;
    }
    if (!accepted) {
      result.line_search_failed = true;
      return result;
    }

    const double f_old = result.objective;
    result.x = x_new;
    result.objective = f_new;
    lambda = std::max(lambda / 10, 1e-300);
    ++result.iterations;
    if (on_accept) {
      on_accept(result.x);
      result.objective = objective(result.x);  // reweighting may move it
    }

    const double rel =
        (f_old - f_new) / std::max(std::abs(f_old), 1e-300);
    if (should_stop) {
      if (should_stop(result.x, rel)) {
        result.converged = true;
        return result;
      }
    } else if (opts.rel_improve_tol > 0 && rel < opts.rel_improve_tol) {
      result.converged = true;
      return result;
    }
  }
  return result;
}

Matrix matrix_power_derivative(const Matrix& T, const Matrix& E,
                               std::int64_t n) {
  Matrix out = Matrix::Zero(T.rows(), T.cols());
  if (n <= 0) return out;
  std::vector<Matrix> powers(n);
  powers[0] = Matrix::Identity(T.rows(), T.cols());
  for (std::int64_t j = 1; j < n; ++j) powers[j] = powers[j - 1] * T;
  for (std::int64_t j = 0; j < n; ++j)
    out += powers[j] * E * powers[n - 1 - j];
  return out;
}

double eigen_penalty(const Matrix& T) {
  Eigen::EigenSolver<Matrix> es(T, /*computeEigenvectors=*/false);
  double penalty = 0;
  for (Eigen::Index k = 0; k < T.rows(); ++k) {
    const double excess = std::abs(es.eigenvalues()(k)) - 1;
    if (excess > 0) penalty += excess * excess;
  }
  return penalty;
}

EigenPenaltyTerms eigen_penalty_terms(const Matrix& T,
                                      std::uint64_t jitter_seed) {
  const int d = static_cast<int>(T.rows());
  EigenPenaltyTerms terms;
  terms.residuals = Vector::Zero(d);
  terms.jacobian = Matrix::Zero(d, d * d);

  // d lambda_i / d T = w_i v_i^T with w_i the matching left eigenvector
  // (rows of V^-1). A defective eigenbasis has no usable inverse; jitter T
  // a little and use the perturbed spectrum consistently for residuals and
  // rows, which changes both by at most ~sqrt(jitter).
  Eigen::EigenSolver<Matrix> es(T);
  Eigen::VectorXcd lam = es.eigenvalues();
  Eigen::MatrixXcd V = es.eigenvectors();
  for (int attempt = 0;; ++attempt) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin > 0 && smax / smin < 1e12) break;
    if (attempt == 3) fail_numeric("eigenvalue derivatives are degenerate");
    std::mt19937_64 eng(
        detail::stream_seed(jitter_seed, attempt, 0x6a69747465ULL, 0));
    Matrix Tj = T;
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) Tj(r, c) += 1e-10 * detail::gauss(eng);
    Eigen::EigenSolver<Matrix> esj(Tj);
    lam = esj.eigenvalues();
    V = esj.eigenvectors();
  }
  Eigen::MatrixXcd Wl = V.inverse();

  for (int i = 0; i < d; ++i) {
    const double mag = std::abs(lam(i));
    if (mag <= 1) continue;
    terms.residuals(i) = mag - 1;
    const std::complex<double> scale = std::conj(lam(i)) / mag;
    for (int p = 0; p < d; ++p)
      for (int q = 0; q < d; ++q)
        terms.jacobian(i, p * d + q) = (scale * Wl(i, p) * V(q, i)).real();
  }
  return terms;
}

}  // namespace qpi
