#pragma once

#include <cstdint>
#include <functional>

#include "qpi/model.hpp"

namespace qpi {

struct GaussNewtonOptions {
  int max_iter = 30;
  double armijo = 1e-4;         // sufficient-decrease constant
  int max_backtracks = 30;      // halving steps per line search
  double damping_scale = 1e-8;  // initial Levenberg parameter, times tr(G)/n
  int max_damping_rounds = 10;  // x10 escalations before giving up
  double rel_improve_tol = 0;   // stop when a full step improves less (0 = off)
};

struct GaussNewtonResult {
  Vector x;
  double objective = 0;
  int iterations = 0;
  bool converged = false;          // stopped by improvement tolerance
  bool line_search_failed = false; // no acceptable step found
};

// Damped Gauss-Newton driver over a parameter vector.
//
// normal_equations(x, G, g) must fill G = J^T W J and g = J^T W r for the
// weighted residual model at x, so that the objective is approximated by
// f(x + dx) ~ f(x) + 2 g.dx + dx.G.dx. Steps solve (G + lambda I) dx = -g
// with adaptive lambda (x10 on rejection, /10 on acceptance) and a halving
// Armijo line search on the exact objective. on_accept, when set, runs after
// every accepted step and may change the objective (e.g. reweighting);
// should_stop, when set, is consulted after acceptance with the relative
// improvement of the step and ends the loop by returning true.
GaussNewtonResult gauss_newton_minimize(
    const std::function<double(const Vector&)>& objective,
    const std::function<void(const Vector&, Matrix&, Vector&)>& normal_equations,
    Vector x0, const GaussNewtonOptions& opts,
    const std::function<void(const Vector&)>& on_accept = nullptr,
    const std::function<bool(const Vector&, double)>& should_stop = nullptr);

// Directional derivative of the matrix power: d(T^n)[E] =
// sum_{j=0}^{n-1} T^j E T^(n-1-j). Exposed for derivative tests.
Matrix matrix_power_derivative(const Matrix& T, const Matrix& E,
                               std::int64_t n);

// Spectral penalty sum_i max(0, |lambda_i| - 1)^2 over the eigenvalues of T.
double eigen_penalty(const Matrix& T);

// Penalty residuals phi_i = max(0, |lambda_i| - 1) and their Jacobian with
// respect to vec(T) (row-major), via left/right eigenvectors. Defective
// eigensystems are jittered by 1e-10 for the derivative only; the jitter is
// deterministic in jitter_seed.
struct EigenPenaltyTerms {
  Vector residuals;  // d entries
  Matrix jacobian;   // d x d^2
};
EigenPenaltyTerms eigen_penalty_terms(const Matrix& T,
                                      std::uint64_t jitter_seed = 1);

}  // namespace qpi
