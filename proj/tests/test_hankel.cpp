#include "qpi/hankel.hpp"

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "qpi/simulate.hpp"

using qpi::Matrix;
using qpitest::check_error;

namespace {

struct Fixture {
  qpi::Schedule sched;
  qpi::Dataset ds;
  qpi::HankelArrangement arr;
};

Fixture sampled_fixture() {
  qpi::ScheduleParams p;
  p.l = 1;
  p.a_bar = 1;
  p.b_bar = 1;
  p.flight_len = 4;
  Fixture fx;
  fx.sched = qpi::build_schedule(p);
  const qpi::Model m = qpi::random_model(2, 2, 3, 23);
  fx.ds = qpi::sample_counts(qpitest::truth_from_model(m, fx.sched), fx.sched,
                             1000, 3);
  fx.arr = qpi::assemble(fx.ds, fx.sched);
  return fx;
}

}  // namespace

TEST_CASE("assembled cells hold frequencies at composed times") {
  const Fixture fx = sampled_fixture();
  const auto& arr = fx.arr;
  REQUIRE(arr.rows() == 2 * 2 * 2);
  REQUIRE(arr.cols() == 3 * 2 * 2);

  const auto mult = qpi::hankel_multiplicity(fx.sched.params);
  for (int r = 0; r < arr.rows(); ++r)
    for (int c = 0; c < arr.cols(); ++c) {
      const int i = arr.row_init[r];
      const int m = arr.col_meas[c];
      const std::int64_t t = arr.row_time[r] + arr.col_time[c];
      CHECK(t == qpi::rho(arr.row_a[r]) + qpi::rho(arr.col_block[c]) +
                     arr.row_k1[r] + arr.col_k2[c]);

      const auto& rec = fx.ds.at(i, t, m);
      CHECK(arr.H(r, c) == qpi::freq(rec));
      CHECK(arr.W(r, c) ==
            doctest::Approx(1.0 / (qpi::estimate_variance(rec) * mult.at(t)))
                .epsilon(1e-12));

      const auto& next = fx.ds.at(i, t + 1, m);
      CHECK(arr.Hshift(r, c) == qpi::freq(next));
      CHECK(arr.Wshift(r, c) ==
            doctest::Approx(1.0 / (qpi::estimate_variance(next) * mult.at(t)))
                .epsilon(1e-12));

      const int e = arr.exp_id(r, c);
      CHECK(arr.exp_init[e] == i);
      CHECK(arr.exp_meas[e] == m);
      CHECK(arr.exp_time[e] == t);
      CHECK(arr.exp_mult[e] == mult.at(t));
    }

  for (int e = 0; e < arr.n_experiments(); ++e) {
    CHECK(static_cast<int>(arr.exp_cells[e].size()) == arr.exp_mult[e]);
    for (const auto& [r, c] : arr.exp_cells[e]) CHECK(arr.exp_id(r, c) == e);
  }
}

TEST_CASE("assembly requires room for the shifted matrix") {
  qpi::ScheduleParams p;
  p.l = 1;
  p.a_bar = 1;
  p.b_bar = 1;
  p.flight_len = 3;  // enough to realize, one short of the shift
  const qpi::Schedule sched = qpi::build_schedule(p);
  const qpi::Model m = qpi::random_model(2, 2, 3, 23);
  const qpi::Dataset ds =
      qpi::sample_counts(qpitest::truth_from_model(m, sched), sched, 100, 3);
  check_error(qpi::ErrorKind::config, [&] { qpi::assemble(ds, sched); });

  // Mismatched schedule parameters are rejected up front.
  const Fixture fx = sampled_fixture();
  check_error(qpi::ErrorKind::config, [&] { qpi::assemble(fx.ds, sched); });
}

TEST_CASE("block slices partition the arrangement columns") {
  const Fixture fx = sampled_fixture();
  const auto blocks = qpi::slice_blocks(fx.arr);
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[0].power == 0);
  CHECK(blocks[1].power == 1);

  const int group = fx.arr.n_m * (fx.arr.l + 1);
  double total = 0;
  for (const auto& slice : blocks) {
    CHECK(slice.H.rows() == fx.arr.rows());
    CHECK(slice.H.cols() == group);
    total += slice.effective_count;
  }
  CHECK(total == doctest::Approx(fx.arr.n_experiments()).epsilon(1e-9));

  for (int c = 0; c < fx.arr.cols(); ++c) {
    const int b = fx.arr.col_block[c];
    const int j = fx.arr.col_meas[c] * (fx.arr.l + 1) + fx.arr.col_k2[c];
    CHECK(blocks[b].H.col(j) == fx.arr.H.col(c));
    CHECK(blocks[b].W.col(j) == fx.arr.W.col(c));
  }
}

TEST_CASE("block-Hankel layout places responses by offset sum") {
  std::vector<Matrix> X;
  for (int t = 0; t <= 5; ++t) {
    Matrix blk(2, 3);
    for (int i = 0; i < 2; ++i)
      for (int m = 0; m < 3; ++m) blk(i, m) = 100 * t + 10 * i + m;
    X.push_back(blk);
  }

  const Matrix H = qpi::build_block_hankel(X, 2, 1);
  REQUIRE(H.rows() == 6);
  REQUIRE(H.cols() == 9);
  for (int k1 = 0; k1 <= 2; ++k1)
    for (int k2 = 0; k2 <= 2; ++k2)
      for (int i = 0; i < 2; ++i)
        for (int m = 0; m < 3; ++m)
          CHECK(H(k1 * 2 + i, k2 * 3 + m) == 100 * (k1 + k2 + 1) + 10 * i + m);

  check_error(qpi::ErrorKind::config, [&] { qpi::build_block_hankel(X, 3); });
  check_error(qpi::ErrorKind::config,
              [&] { qpi::build_block_hankel(X, 2, 2); });
}

TEST_CASE("exact realization reproduces the process") {
  const qpi::Model m = qpi::random_model(3, 2, 3, 42);
  std::vector<Matrix> X;
  for (int t = 0; t <= 8; ++t) X.push_back(qpi::predict(m, t));
  const Matrix H = qpi::build_block_hankel(X, 3, 0);
  const Matrix Hshift = qpi::build_block_hankel(X, 3, 1);

  const qpi::Model rec = qpi::ho_kalman_exact(H, Hshift, 2, 3, 3);
  CHECK(rec.d == 3);
  for (std::uint64_t t = 0; t <= 100; ++t) {
    const Matrix diff = qpi::predict(rec, t) - qpi::predict(m, t);
    CHECK(diff.cwiseAbs().maxCoeff() < 1e-9);
  }

  // The rank window rejects both under- and over-shooting dimensions.
  check_error(qpi::ErrorKind::numeric,
              [&] { qpi::ho_kalman_exact(H, Hshift, 2, 3, 2); });
  check_error(qpi::ErrorKind::numeric,
              [&] { qpi::ho_kalman_exact(H, Hshift, 2, 3, 4); });
  check_error(qpi::ErrorKind::config,
              [&] { qpi::ho_kalman_exact(H, Hshift, 2, 3, 0); });
  check_error(qpi::ErrorKind::config,
              [&] { qpi::ho_kalman_exact(H, Hshift, 99, 3, 3); });
  const Matrix zero = Matrix::Zero(H.rows(), H.cols());
  check_error(qpi::ErrorKind::numeric,
              [&] { qpi::ho_kalman_exact(zero, zero, 2, 3, 1); });
}

TEST_CASE("arrangement export is readable csv") {
  const Fixture fx = sampled_fixture();
  qpitest::TempFile f("hankel.csv");
  qpi::write_hankel_csv(fx.arr, f.path);
  const std::string text = qpitest::slurp(f.path);
  CHECK(text.rfind("row,", 0) == 0);
  std::size_t rows = 0;
  for (const char ch : text)
    if (ch == '\n') ++rows;
  CHECK(rows == static_cast<std::size_t>(fx.arr.rows()) + 1);
}
