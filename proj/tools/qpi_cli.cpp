#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qpi/config.hpp"
#include "qpi/errors.hpp"
#include "qpi/evaluate.hpp"
#include "qpi/hankel.hpp"
#include "qpi/inference.hpp"
#include "qpi/model.hpp"
#include "qpi/pipeline.hpp"
#include "qpi/schedule.hpp"
#include "qpi/simulate.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::string grid;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* grid_opt = nullptr;
};

void add_common(CLI::App* sub, CommonFlags& c) {
  sub->add_option("--config", c.config, "run configuration file")
      ->required();
  c.seed_opt = sub->add_option("--seed", c.seed, "override the sampling seed");
  c.out_opt = sub->add_option("--out", c.out, "override the output directory");
  c.grid_opt = sub->add_option(
      "--grid", c.grid, "override the evaluation grid (START:STOP:STEP)");
}

qpi::RunConfig load(const CommonFlags& c) {
  qpi::RunConfig cfg = qpi::load_config(c.config);
  if (c.seed_opt->count()) cfg.seed = c.seed;
  if (c.out_opt->count()) cfg.out_dir = c.out;
  if (c.grid_opt->count()) cfg.grid = c.grid;
  return cfg;
}

int run_selftest() {
  int rc = 0;
  auto check = [&](const char* name, auto&& body) {
    try {
      body();
      std::printf("ok: %s\n", name);
    } catch (const std::exception& e) {
      std::printf("FAIL: %s: %s\n", name, e.what());
      rc = 3;
    }
  };
  auto expect = [](bool cond, const std::string& why) {
    if (!cond) qpi::fail_numeric(why);
  };

  check("base offsets double from 1", [&] {
    expect(qpi::rho(0) == 0 && qpi::rho(1) == 1 && qpi::rho(4) == 8 &&
               qpi::rho(10) == 512,
           "unexpected base offset");
  });

  check("schedule covers the example design", [&] {
    qpi::ScheduleParams p;
    p.l = 1;
    p.a_bar = 1;
    p.b_bar = 1;
    p.flight_len = 4;
    const qpi::Schedule s = qpi::build_schedule(p);
    expect(s.bases == std::vector<std::int64_t>({0, 1, 2}), "wrong bases");
    expect(s.t_set == std::vector<std::int64_t>({0, 1, 2, 3, 4, 5}),
           "wrong time set");
  });

  check("variance floor matches the closed form", [&] {
    const qpi::ExperimentRecord rec{0, 0, 0, 100, 50};
    expect(std::abs(qpi::estimate_variance(rec) - 0.0025) < 1e-15,
           "wrong regularized variance");
  });

  check("evaluation grid 0:1100:5 has 221 points", [&] {
    expect(qpi::parse_grid("0:1100:5").size() == 221, "wrong grid size");
  });

  check("model files round-trip", [&] {
    const qpi::Model m = qpi::random_model(3, 2, 3, 7);
    const std::string path = "selftest_model.qpm";
    qpi::write_model(m, path);
    const qpi::Model back = qpi::read_model(path);
    std::remove(path.c_str());
    expect((back.S - m.S).cwiseAbs().maxCoeff() == 0 &&
               (back.T - m.T).cwiseAbs().maxCoeff() == 0 &&
               (back.P - m.P).cwiseAbs().maxCoeff() == 0,
           "round trip changed the model");
  });

  check("gauge transforms leave predictions unchanged", [&] {
    const qpi::Model m = qpi::random_model(4, 2, 3, 21);
    qpi::Matrix G = qpi::Matrix::Identity(4, 4);
    G(0, 1) = 0.3;
    G(2, 3) = -0.7;
    G(3, 0) = 0.1;
    const qpi::Model g = qpi::gauge_transform(m, G);
    double worst = 0;
    for (std::uint64_t t = 0; t <= 64; ++t)
      worst = std::max(worst, (qpi::predict(m, t) - qpi::predict(g, t))
                                  .cwiseAbs()
                                  .maxCoeff());
    expect(worst < 1e-9, "gauge changed predictions by " + std::to_string(worst));
  });

  check("noise-free records recover the process", [&] {
    const qpi::Model m = qpi::random_model(3, 2, 3, 11);
    qpi::ScheduleParams p;
    p.l = 3;
    p.a_bar = 3;
    p.b_bar = 3;
    const qpi::Schedule sched = qpi::build_schedule(p);
    qpi::TruthTable truth;
    truth.scenario = "selftest";
    truth.init_labels = m.init_labels;
    truth.meas_labels = m.meas_labels;
    for (std::int64_t t : sched.t_set)
      truth.exact[t] = qpi::predict(m, static_cast<std::uint64_t>(t));
    const qpi::Dataset ds = qpi::exact_dataset(truth, sched, 100000000);
    const qpi::InferenceResult fit = qpi::infer(ds);
    double worst = 0;
    for (std::uint64_t t = 0; t <= 200; ++t)
      worst = std::max(worst, (qpi::predict(fit.model, t) - qpi::predict(m, t))
                                  .cwiseAbs()
                                  .maxCoeff());
    expect(worst < 1e-5,
           "recovered predictions off by " + std::to_string(worst));
  });

  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum process identification toolkit"};
  app.require_subcommand(1);

  CommonFlags c_sim, c_inf, c_eval, c_pipe;

  CLI::App* sim = app.add_subcommand(
      "simulate", "sample a dataset and write the exact truth table");
  add_common(sim, c_sim);

  CLI::App* inf = app.add_subcommand("infer", "fit a model to a dataset");
  add_common(inf, c_inf);
  std::string infer_data;
  inf->add_option("--data", infer_data, "dataset file (.qpd)")->required();

  CLI::App* eval = app.add_subcommand(
      "evaluate", "score a model file against an exact truth table");
  add_common(eval, c_eval);
  std::string eval_model, eval_truth, eval_data;
  eval->add_option("--model", eval_model, "model file (.qpm)")->required();
  eval->add_option("--truth", eval_truth, "truth table file (.qpt)")
      ->required();
  eval->add_option("--data", eval_data,
                   "dataset file for the raw-frequency error column");

  CLI::App* pipe = app.add_subcommand(
      "pipeline", "simulate, infer and evaluate end to end");
  add_common(pipe, c_pipe);
  int runs = 1;
  int workers = 1;
  pipe->add_option("--runs", runs, "number of repeated runs")
      ->check(CLI::PositiveNumber);
  pipe->add_option("--workers", workers, "worker threads for repeated runs")
      ->check(CLI::PositiveNumber);

  CLI::App* agg = app.add_subcommand(
      "aggregate", "merge error curves from repeated runs by time");
  std::vector<std::string> agg_files;
  std::string agg_out = "aggregate.csv";
  agg->add_option("files", agg_files, "error-curve CSV files")
      ->required()
      ->expected(-1);
  agg->add_option("--out", agg_out, "output CSV path");

  CLI::App* self = app.add_subcommand(
      "selftest", "run fast internal consistency checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) {
      const qpi::RunConfig cfg = load(c_sim);
      const qpi::SimulateOutput out =
          qpi::run_simulate(cfg, cfg.out_dir, cfg.seed);
      std::printf("dataset: %s\ntruth: %s\n", out.dataset_path.c_str(),
                  out.truth_path.c_str());
    } else if (inf->parsed()) {
      const qpi::RunConfig cfg = load(c_inf);
      const qpi::InferOutput out =
          qpi::run_infer(cfg, infer_data, cfg.out_dir);
      std::printf("model: %s\n%s", out.model_path.c_str(),
                  out.report.to_text().c_str());
    } else if (eval->parsed()) {
      const qpi::RunConfig cfg = load(c_eval);
      const qpi::ErrorCurve curve = qpi::run_evaluate(
          cfg, eval_model, eval_truth, eval_data, cfg.out_dir);
      std::printf("errors: %s/errors.csv\nmean error: %.6g over %zu times\n",
                  cfg.out_dir.c_str(), qpi::mean_error(curve), curve.size());
    } else if (pipe->parsed()) {
      const qpi::RunConfig cfg = load(c_pipe);
      const qpi::PipelineOutput out = qpi::run_pipeline(cfg, runs, workers);
      for (const qpi::RunSummary& s : out.runs)
        std::printf("run %03d: dimension %d, mean error %.6g\n", s.run_index,
                    s.d_final, s.mean_qpi_error);
      if (!out.aggregate_path.empty())
        std::printf("aggregate: %s\n", out.aggregate_path.c_str());
      std::printf("summary: %s\n", out.summary_path.c_str());
    } else if (agg->parsed()) {
      std::vector<qpi::ErrorCurve> curves;
      curves.reserve(agg_files.size());
      for (const std::string& path : agg_files)
        curves.push_back(qpi::read_error_csv(path));
      qpi::write_aggregate_csv(curves, agg_out);
      std::printf("aggregate: %s\n", agg_out.c_str());
    } else if (self->parsed()) {
      return run_selftest();
    }
  } catch (const qpi::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (e.kind()) {
      case qpi::ErrorKind::config:
        return 1;
      case qpi::ErrorKind::io:
        return 2;
      default:
        return 3;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
