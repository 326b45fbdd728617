#include "qpi/simulate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>

#include "doctest.h"
#include "helpers.hpp"
#include "qpi/hankel.hpp"

using qpi::CMatrix;
using qpi::Matrix;
using qpitest::check_error;

namespace {

qpi::Schedule tiny_schedule(int l = 1, int a_bar = 1, int b_bar = 1,
                            int flight_len = 4) {
  qpi::ScheduleParams p;
  p.l = l;
  p.a_bar = a_bar;
  p.b_bar = b_bar;
  p.flight_len = flight_len;
  return qpi::build_schedule(p);
}

// Numerical rank of the consecutive-time response Hankel at depth l.
int response_rank(const qpi::TruthTable& truth, int l, double tol = 1e-8) {
  std::vector<Matrix> X;
  for (int t = 0; t <= 2 * l; ++t) X.push_back(truth.at(t));
  const Matrix H = qpi::build_block_hankel(X, l);
  const Eigen::JacobiSVD<Matrix> svd(H);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) / s(0) >= tol) ++rank;
  return rank;
}

std::vector<std::int64_t> consecutive(std::int64_t t_max) {
  std::vector<std::int64_t> grid(t_max + 1);
  for (std::int64_t t = 0; t <= t_max; ++t) grid[t] = t;
  return grid;
}

}  // namespace

TEST_CASE("noise-free drift is a rank-2 flip process") {
  qpi::DriftParams p;
  p.epsilon = 0;
  const qpi::Scenario sc = qpi::drift_scenario(p);
  const qpi::TruthTable truth =
      qpi::exact_probabilities(sc, tiny_schedule(), consecutive(10));

  CHECK(response_rank(truth, 4) <= 4);

  // A perfect pi rotation alternates z+ and z- exactly.
  const int mz = 2;
  for (std::int64_t t = 0; t <= 10; ++t) {
    const double fz = truth.at(t)(0, mz);
    CHECK(fz == doctest::Approx(t % 2 == 0 ? 1.0 : 0.0).epsilon(1e-12));
  }
}

TEST_CASE("uncoupled spin exchange is static") {
  qpi::SpinExchangeParams p;
  p.gamma = 0;
  const qpi::Scenario sc = qpi::spin_exchange_scenario(p);
  const qpi::TruthTable truth =
      qpi::exact_probabilities(sc, tiny_schedule(), consecutive(8));
  CHECK(response_rank(truth, 4) <= 4);
  for (std::int64_t t = 1; t <= 8; ++t)
    CHECK((truth.at(t) - truth.at(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spin exchange conserves total magnetization") {
  qpi::SpinExchangeParams p;
  p.gamma = 0.01;
  const qpi::Scenario sc = qpi::spin_exchange_scenario(p);
  const CMatrix U = sc.step_unitary(0);

  // sigma_z (x) id + id (x) sigma_z in the product basis 00,01,10,11.
  CMatrix total = CMatrix::Zero(4, 4);
  total(0, 0) = 2;
  total(3, 3) = -2;

  for (const CMatrix& rho0 : sc.init_states) {
    CMatrix rho = rho0;
    const double start = (rho * total).trace().real();
    for (int t = 0; t < 50; ++t) {
      rho = U * rho * U.adjoint();
      CHECK(std::abs((rho * total).trace().real() - start) < 1e-10);
    }
  }
}

TEST_CASE("leakage pulse calibration matches the analytic amplitude") {
  qpi::LeakageParams p;
  // (pi/2) / (width * sqrt(pi)/2 * erf(1/(2 width))) at width 0.25.
  CHECK(qpi::leakage_pulse_amplitude(p) ==
        doctest::Approx(3.5615677602).epsilon(1e-6));
  CHECK(qpi::leakage_step_convergence(p) < 1e-7);
}

TEST_CASE("leakage population oscillates at the detuning period") {
  qpi::LeakageParams p;
  p.Delta = 20;
  const auto pop = qpi::leakage_level2_population(p, 200);
  REQUIRE(pop.size() == 4);

  double peak = 0;
  for (const auto& series : pop)
    for (const double v : series) peak = std::max(peak, v);
  CHECK(peak > 0.005);
  CHECK(peak < 0.10);

  // The population breathes: it returns to near zero once per cycle. A
  // fast 2-step ripple rides on the envelope, so the period is read off
  // the downward crossings of a low threshold, one per cycle.
  const auto& z = pop[0];
  const double thr = 0.2 * peak;
  std::vector<int> crossings;
  for (int t = 1; t < static_cast<int>(z.size()); ++t)
    if (z[t - 1] >= thr && z[t] < thr) crossings.push_back(t);
  REQUIRE(crossings.size() >= 3);
  std::vector<int> gaps;
  for (std::size_t k = 1; k < crossings.size(); ++k)
    gaps.push_back(crossings[k] - crossings[k - 1]);
  std::sort(gaps.begin(), gaps.end());
  const double period = gaps[gaps.size() / 2];
  CHECK(period > 25);
  CHECK(period < 35);
}

TEST_CASE("large detuning freezes the leakage level") {
  qpi::LeakageParams p;
  p.Delta = 2000;
  p.substeps = 4096;
  const auto pop = qpi::leakage_level2_population(p, 100);
  double peak = 0;
  for (const auto& series : pop)
    for (const double v : series) peak = std::max(peak, v);
  CHECK(peak < 1e-3);
}

TEST_CASE("exact probabilities cover schedule and grid times") {
  const qpi::Scenario sc = qpi::drift_scenario({});
  const qpi::Schedule sched = tiny_schedule();
  const qpi::TruthTable truth =
      qpi::exact_probabilities(sc, sched, {0, 7, 40});

  for (const auto t : sched.t_set) CHECK(truth.has(t));
  CHECK(truth.has(40));
  CHECK(!truth.has(39));
  CHECK(truth.frame0.rows() == 4);
  CHECK(truth.frame0.cols() == 3);
  CHECK(truth.frame1.minCoeff() >= 0);
  CHECK(truth.frame1.maxCoeff() <= 1);
  for (const auto& [t, F] : truth.exact) {
    CHECK(F.minCoeff() >= 0);
    CHECK(F.maxCoeff() <= 1);
  }

  check_error(qpi::ErrorKind::config,
              [&] { qpi::exact_probabilities(sc, sched, {-1}); });
}

TEST_CASE("sampling is reproducible and unbiased") {
  const qpi::Scenario sc = qpi::drift_scenario({});
  const qpi::Schedule sched = tiny_schedule();
  const qpi::TruthTable truth = qpi::exact_probabilities(sc, sched, {});

  const qpi::Dataset a = qpi::sample_counts(truth, sched, 20000, 5);
  const qpi::Dataset b = qpi::sample_counts(truth, sched, 20000, 5);
  REQUIRE(a.records.size() == b.records.size());
  bool identical = true;
  for (std::size_t k = 0; k < a.records.size(); ++k)
    identical = identical && a.records[k].Y == b.records[k].Y;
  CHECK(identical);

  const qpi::Dataset c = qpi::sample_counts(truth, sched, 20000, 6);
  bool differs = false;
  for (std::size_t k = 0; k < a.records.size(); ++k)
    differs = differs || a.records[k].Y != c.records[k].Y;
  CHECK(differs);

  for (const auto& rec : a.records) {
    const double exact = truth.at(rec.t)(rec.i, rec.m);
    CHECK(std::abs(qpi::freq(rec) - exact) < 0.02);
  }

  const qpi::Dataset ex = qpi::exact_dataset(truth, sched, 1000000);
  for (const auto& rec : ex.records) {
    const double exact = truth.at(rec.t)(rec.i, rec.m);
    CHECK(rec.Y == std::llround(exact * 1000000));
  }
}
