#include "qpi/gauss_newton.hpp"

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"

using qpi::Matrix;
using qpi::Vector;

namespace {

Matrix scaled_random(int d, std::uint64_t seed, double radius) {
  const Matrix T = qpi::random_model(d, 2, 2, seed).T;
  Eigen::EigenSolver<Matrix> es(T, false);
  return T * (radius / es.eigenvalues().cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("driver solves a quadratic in one step") {
  Matrix M(2, 2);
  M << 4, 1, 1, 3;
  Vector a(2);
  a << 1, -2;

  auto objective = [&](const Vector& x) {
    return (x - a).dot(M * (x - a));
  };
  auto normal_equations = [&](const Vector& x, Matrix& G, Vector& g) {
    G = M;
    g = M * (x - a);
  };

  qpi::GaussNewtonOptions opts;
  const auto res = qpi::gauss_newton_minimize(objective, normal_equations,
                                              Vector::Zero(2), opts);
  CHECK(res.objective < 1e-15);
  CHECK((res.x - a).norm() < 1e-8);
  CHECK(!res.line_search_failed);
}

TEST_CASE("driver reaches the rosenbrock minimum") {
  auto residuals = [](const Vector& x, Vector& r, Matrix& J) {
    r.resize(2);
    J.resize(2, 2);
    r << 10 * (x(1) - x(0) * x(0)), 1 - x(0);
    J << -20 * x(0), 10, -1, 0;
  };
  auto objective = [&](const Vector& x) {
    Vector r;
    Matrix J;
    residuals(x, r, J);
    return r.squaredNorm();
  };
  auto normal_equations = [&](const Vector& x, Matrix& G, Vector& g) {
    Vector r;
    Matrix J;
    residuals(x, r, J);
    G = J.transpose() * J;
    g = J.transpose() * r;
  };

  qpi::GaussNewtonOptions opts;
  opts.max_iter = 200;
  Vector x0(2);
  x0 << -1.2, 1.0;
  const auto res =
      qpi::gauss_newton_minimize(objective, normal_equations, x0, opts);
  CHECK((res.x - Vector::Ones(2)).norm() < 1e-6);
}

TEST_CASE("driver reports failure on an uphill model") {
  auto objective = [](const Vector& x) { return x.squaredNorm() + 1; };
  // Deliberately wrong sign: the proposed steps all increase the objective.
  auto normal_equations = [](const Vector& x, Matrix& G, Vector& g) {
    G = Matrix::Identity(x.size(), x.size());
    g = -x;
  };
  Vector x0(2);
  x0 << 3, 4;
  const auto res = qpi::gauss_newton_minimize(objective, normal_equations, x0,
                                              qpi::GaussNewtonOptions{});
  CHECK(res.line_search_failed);
  CHECK(res.x == x0);
  CHECK(res.objective == doctest::Approx(26.0));
}

TEST_CASE("accept hook and stop predicate steer the loop") {
  Matrix M = Matrix::Identity(2, 2);
  Vector a(2);
  a << 5, 5;
  auto objective = [&](const Vector& x) { return (x - a).squaredNorm(); };
  auto normal_equations = [&](const Vector& x, Matrix& G, Vector& g) {
    G = M;
    g = x - a;
  };

  int accepted = 0;
  qpi::GaussNewtonOptions opts;
  opts.max_iter = 50;
  const auto res = qpi::gauss_newton_minimize(
      objective, normal_equations, Vector::Zero(2), opts,
      [&](const Vector&) { ++accepted; },
      [&](const Vector&, double) { return accepted >= 2; });
  CHECK(accepted == 2);
  CHECK(res.converged);
}

TEST_CASE("matrix power derivative matches finite differences") {
  const Matrix T = qpi::random_model(4, 2, 3, 77).T;
  Matrix E(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) E(r, c) = std::sin(3.7 * r + 1.3 * c + 0.5);
  E /= E.norm();

  CHECK(qpi::matrix_power_derivative(T, E, 0).isZero(0.0));
  CHECK(qpi::matrix_power_derivative(T, E, 1) == E);

  const double h = 1e-6;
  for (const std::int64_t n : {2, 5, 8}) {
    const Matrix fd = (qpi::matrix_power(T + h * E, n) -
                       qpi::matrix_power(T - h * E, n)) /
                      (2 * h);
    const Matrix an = qpi::matrix_power_derivative(T, E, n);
    CHECK((an - fd).norm() / fd.norm() < 1e-6);
  }
}

TEST_CASE("eigenvalue penalty is zero inside the unit disk") {
  const Matrix T = qpi::random_model(4, 2, 3, 13).T;
  CHECK(qpi::eigen_penalty(T) == 0.0);
  const auto terms = qpi::eigen_penalty_terms(T);
  CHECK(terms.residuals.maxCoeff() == 0.0);
}

TEST_CASE("eigenvalue penalty measures unit-disk excess") {
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 1.5;
  D(1, 1) = 0.5;
  CHECK(qpi::eigen_penalty(D) == doctest::Approx(0.25).epsilon(1e-12));

  // Complex pair: a rotation scaled to radius 1.2 exceeds by 0.2 twice.
  Matrix R(2, 2);
  R << 0, -1.2, 1.2, 0;
  CHECK(qpi::eigen_penalty(R) == doctest::Approx(0.08).epsilon(1e-9));
}

TEST_CASE("penalty gradient matches finite differences") {
  for (const std::uint64_t seed : {3ULL, 19ULL}) {
    const Matrix T = scaled_random(4, seed, 1.25);
    const auto terms = qpi::eigen_penalty_terms(T);

    // Gradient of sum phi_i^2 via the residual Jacobian, row-major vec(T).
    Vector grad = 2.0 * terms.jacobian.transpose() * terms.residuals;

    const double h = 1e-6;
    for (int p = 0; p < 4; ++p)
      for (int q = 0; q < 4; ++q) {
        Matrix Tp = T, Tm = T;
        Tp(p, q) += h;
        Tm(p, q) -= h;
        const double fd =
            (qpi::eigen_penalty(Tp) - qpi::eigen_penalty(Tm)) / (2 * h);
        const double an = grad(p * 4 + q);
        CHECK(an == doctest::Approx(fd).epsilon(1e-5));
      }
  }
}
