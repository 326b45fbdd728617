#include <benchmark/benchmark.h>

#include <cstdint>

#include "qpi/dataset.hpp"
#include "qpi/dimension.hpp"
#include "qpi/hankel.hpp"
#include "qpi/inference.hpp"
#include "qpi/model.hpp"
#include "qpi/schedule.hpp"
#include "qpi/simulate.hpp"

namespace {

qpi::Schedule bench_schedule(int l, int a_bar, int b_bar, int flight_len = 0) {
  qpi::ScheduleParams p;
  p.l = l;
  p.a_bar = a_bar;
  p.b_bar = b_bar;
  p.flight_len = flight_len;
  return qpi::build_schedule(p);
}

qpi::TruthTable bench_truth(const qpi::Model& m, const qpi::Schedule& sched) {
  qpi::TruthTable truth;
  truth.scenario = "bench";
  truth.init_labels = m.init_labels;
  truth.meas_labels = m.meas_labels;
  for (std::int64_t t : sched.t_set)
    truth.exact[t] = qpi::predict(m, static_cast<std::uint64_t>(t));
  return truth;
}

qpi::Dataset bench_dataset(const qpi::Schedule& sched, int d) {
  const qpi::Model m = qpi::random_model(d, 2, 3, 5);
  return qpi::exact_dataset(bench_truth(m, sched), sched, 10000);
}

}  // namespace

static void MatrixPower(benchmark::State& state) {
  const qpi::Model m = qpi::random_model(11, 2, 3, 9);
  for (auto _ : state) {
    qpi::Matrix X =
        qpi::matrix_power(m.T, static_cast<std::uint64_t>(state.range(0)));
    benchmark::DoNotOptimize(X.data());
  }
}
BENCHMARK(MatrixPower)->RangeMultiplier(4)->Range(16, 1024);

static void AssembleArrangement(benchmark::State& state) {
  static const qpi::Schedule sched = bench_schedule(5, 10, 10, 12);
  static const qpi::Dataset ds = bench_dataset(sched, 4);
  for (auto _ : state) {
    qpi::HankelArrangement arr = qpi::assemble(ds, sched);
    benchmark::DoNotOptimize(arr.H.data());
  }
}
BENCHMARK(AssembleArrangement);

static void EstimateDimension(benchmark::State& state) {
  static const qpi::Schedule sched = bench_schedule(4, 5, 5);
  static const qpi::Dataset ds = bench_dataset(sched, 4);
  static const qpi::HankelArrangement arr = qpi::assemble(ds, sched);
  for (auto _ : state) {
    qpi::DimensionReport report = qpi::estimate_dimension(arr);
    benchmark::DoNotOptimize(report.d);
  }
}
BENCHMARK(EstimateDimension);

static void FactorizeArrangement(benchmark::State& state) {
  static const qpi::Schedule sched = bench_schedule(4, 5, 5);
  static const qpi::Dataset ds = bench_dataset(sched, 4);
  static const qpi::HankelArrangement arr = qpi::assemble(ds, sched);
  const qpi::InferenceOptions opts;
  for (auto _ : state) {
    qpi::StageTwoResult fit = qpi::stage2_factorize(arr, 4, opts);
    benchmark::DoNotOptimize(fit.T.data());
  }
}
BENCHMARK(FactorizeArrangement);

static void SampleCounts(benchmark::State& state) {
  static const qpi::Schedule sched = bench_schedule(2, 0, 11, 7);
  static const qpi::Model m = qpi::random_model(4, 3, 3, 13);
  static const qpi::TruthTable truth = bench_truth(m, sched);
  for (auto _ : state) {
    qpi::Dataset ds = qpi::sample_counts(truth, sched, state.range(0), 1);
    benchmark::DoNotOptimize(ds.records.data());
  }
}
BENCHMARK(SampleCounts)->RangeMultiplier(10)->Range(100, 10000);

int main(int argc, char** argv) {
  ::benchmark::Initialize(&argc, argv);
  if (::benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  ::benchmark::RunSpecifiedBenchmarks();
  ::benchmark::Shutdown();
  return 0;
}
