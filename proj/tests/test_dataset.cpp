#include "qpi/dataset.hpp"

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "qpi/simulate.hpp"

using qpi::Dataset;
using qpi::ExperimentRecord;
using qpitest::check_error;

namespace {

// A fully covered sampled dataset on a small design.
Dataset small_dataset(std::uint64_t seed = 3) {
  qpi::ScheduleParams p;
  p.l = 1;
  p.a_bar = 1;
  p.b_bar = 1;
  p.flight_len = 4;
  const qpi::Schedule sched = qpi::build_schedule(p);
  const qpi::Model m = qpi::random_model(2, 2, 3, 17);
  const qpi::TruthTable truth = qpitest::truth_from_model(m, sched);
  return qpi::sample_counts(truth, sched, 400, seed);
}

}  // namespace

TEST_CASE("variance estimate uses pseudocount-shrunk frequencies") {
  ExperimentRecord rec;
  rec.N = 100;
  rec.Y = 50;
  CHECK(qpi::estimate_variance(rec) == 0.0025);
  CHECK(qpi::freq(rec) == 0.5);

  rec.Y = 0;
  const double fh = 1.0 / 102.0;
  CHECK(qpi::estimate_variance(rec) == doctest::Approx(fh * (1 - fh) / 100.0)
                                            .epsilon(1e-14));
  CHECK(qpi::estimate_variance(rec) > 0);

  rec.Y = 100;
  CHECK(qpi::estimate_variance(rec) > 0);

  // The pseudocount becomes negligible for large N.
  rec.N = 1000000000000LL;
  rec.Y = rec.N / 2;
  CHECK(qpi::estimate_variance(rec) ==
        doctest::Approx(0.25 / static_cast<double>(rec.N)).epsilon(1e-6));
}

TEST_CASE("record lookup is exact") {
  const Dataset ds = small_dataset();
  const ExperimentRecord& rec = ds.at(1, 3, 2);
  CHECK(rec.i == 1);
  CHECK(rec.t == 3);
  CHECK(rec.m == 2);
  CHECK(rec.N == 400);
  check_error(qpi::ErrorKind::io, [&] { ds.at(0, 99, 0); });
}

TEST_CASE("validation catches gaps, duplicates and bad counts") {
  Dataset ds = small_dataset();
  CHECK_NOTHROW(ds.validate());

  Dataset gap = ds;
  gap.records.erase(gap.records.begin() + 5);
  check_error(qpi::ErrorKind::io, [&] { gap.validate(); });

  Dataset dup = ds;
  dup.records.insert(dup.records.begin() + 5, dup.records[5]);
  check_error(qpi::ErrorKind::io, [&] { dup.validate(); });

  Dataset bad = ds;
  bad.records[0].Y = bad.records[0].N + 1;
  check_error(qpi::ErrorKind::io, [&] { bad.validate(); });

  bad = ds;
  bad.records[0].N = 0;
  check_error(qpi::ErrorKind::io, [&] { bad.validate(); });
}

TEST_CASE("dataset files round-trip exactly and stably") {
  Dataset ds = small_dataset();
  ds.scenario = "synthetic";
  ds.scenario_params["epsilon"] = "0.01";
  ds.scenario_params["Omega"] = "0.02";
  qpitest::TempFile f("dataset.qpd");
  qpi::write_dataset(ds, f.path);

  const Dataset back = qpi::read_dataset(f.path);
  CHECK(back.scenario == ds.scenario);
  CHECK(back.scenario_params == ds.scenario_params);
  CHECK(back.seed == ds.seed);
  CHECK(back.shots == ds.shots);
  CHECK(back.init_labels == ds.init_labels);
  CHECK(back.meas_labels == ds.meas_labels);
  REQUIRE(back.records.size() == ds.records.size());
  for (std::size_t k = 0; k < ds.records.size(); ++k) {
    CHECK(back.records[k].t == ds.records[k].t);
    CHECK(back.records[k].Y == ds.records[k].Y);
  }

  const std::string first = qpitest::slurp(f.path);
  qpi::write_dataset(back, f.path);
  CHECK(qpitest::slurp(f.path) == first);
}

TEST_CASE("dataset reader rejects malformed files") {
  check_error(qpi::ErrorKind::io, [] { qpi::read_dataset("missing.qpd"); });

  qpitest::TempFile f("bad.qpd");
  auto write_and_read = [&](const std::string& text) {
    std::ofstream out(f.path, std::ios::binary);
    out << text;
    out.close();
    qpi::read_dataset(f.path);
  };

  check_error(qpi::ErrorKind::io, [&] { write_and_read("not a dataset\n"); });

  // A structurally valid header whose bases list disagrees.
  Dataset ds = small_dataset();
  qpi::write_dataset(ds, f.path);
  std::string text = qpitest::slurp(f.path);
  const std::string good_bases = "bases: [0, 1, 2]";
  REQUIRE(text.find(good_bases) != std::string::npos);
  text.replace(text.find(good_bases), good_bases.size(), "bases: [0, 1, 3]");
  check_error(qpi::ErrorKind::io, [&] { write_and_read(text); });

  // Unknown label in a record line.
  qpi::write_dataset(ds, f.path);
  text = qpitest::slurp(f.path);
  const auto pos = text.find("\ni0,0,");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 6, "\nzz,0,");
  check_error(qpi::ErrorKind::io, [&] { write_and_read(text); });

  // Trailing junk after the record body.
  qpi::write_dataset(ds, f.path);
  text = qpitest::slurp(f.path) + "extra line\n";
  check_error(qpi::ErrorKind::io, [&] { write_and_read(text); });
}

TEST_CASE("frequency export lists one row per record") {
  const Dataset ds = small_dataset();
  qpitest::TempFile f("freq.csv");
  qpi::write_freq_csv(ds, f.path);
  const std::string text = qpitest::slurp(f.path);
  CHECK(text.rfind("i,t,m,N,Y,freq\n", 0) == 0);
  std::size_t rows = 0;
  for (const char ch : text)
    if (ch == '\n') ++rows;
  CHECK(rows == ds.records.size() + 1);
}

TEST_CASE("truth tables round-trip and reject bad probabilities") {
  qpi::ScheduleParams p;
  p.l = 1;
  p.a_bar = 1;
  p.b_bar = 1;
  p.flight_len = 4;
  const qpi::Schedule sched = qpi::build_schedule(p);
  const qpi::Model m = qpi::random_model(2, 2, 3, 17);
  const qpi::TruthTable truth = qpitest::truth_from_model(m, sched, {10, 20});

  qpitest::TempFile f("truth.qpt");
  qpi::write_truth(truth, f.path);
  const qpi::TruthTable back = qpi::read_truth(f.path);
  CHECK(back.scenario == truth.scenario);
  CHECK(back.exact.size() == truth.exact.size());
  CHECK(back.at(10).isApprox(truth.at(10), 1e-15));
  CHECK(back.frame0 == truth.frame0);
  CHECK(back.has(20));
  CHECK(!back.has(21));
  check_error(qpi::ErrorKind::config, [&] { back.at(21); });

  // Stability under rewrite.
  const std::string first = qpitest::slurp(f.path);
  qpi::write_truth(back, f.path);
  CHECK(qpitest::slurp(f.path) == first);

  // Out-of-range probability.
  std::string text = first;
  const auto pos = text.find(",0,m0,");
  REQUIRE(pos != std::string::npos);
  const auto eol = text.find('\n', pos);
  text.replace(pos, eol - pos, ",0,m0,1.5");
  std::ofstream out(f.path, std::ios::binary);
  out << text;
  out.close();
  check_error(qpi::ErrorKind::io, [&] { qpi::read_truth(f.path); });
}
