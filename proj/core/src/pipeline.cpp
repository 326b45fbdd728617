#include "qpi/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <initializer_list>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "qpi/errors.hpp"
#include "text_io.hpp"

namespace qpi {

namespace {

double param_or(const std::map<std::string, double>& params,
                const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_foreign_params(const std::map<std::string, double>& params,
                           std::initializer_list<const char*> allowed,
                           const std::string& scenario) {
  for (const auto& [key, value] : params) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) known = true;
    if (!known)
      fail_config("parameter '" + key + "' does not apply to the " + scenario +
                  " scenario");
  }
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail_io("cannot create directory " + dir + ": " + ec.message());
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

Scenario make_scenario(const RunConfig& cfg) {
  if (cfg.scenario == "drift") {
    reject_foreign_params(cfg.scenario_params, {"epsilon", "Omega"}, "drift");
    DriftParams p;
    p.epsilon = param_or(cfg.scenario_params, "epsilon", p.epsilon);
    p.Omega = param_or(cfg.scenario_params, "Omega", p.Omega);
    return drift_scenario(p);
  }
  if (cfg.scenario == "leakage") {
    reject_foreign_params(cfg.scenario_params,
                          {"Delta", "pulse_width", "substeps"}, "leakage");
    LeakageParams p;
    p.Delta = param_or(cfg.scenario_params, "Delta", p.Delta);
    p.pulse_width = param_or(cfg.scenario_params, "pulse_width", p.pulse_width);
    const double substeps =
        param_or(cfg.scenario_params, "substeps", p.substeps);
    if (substeps < 1 || substeps != static_cast<int>(substeps))
      fail_config("substeps must be a positive integer");
    p.substeps = static_cast<int>(substeps);
    return leakage_scenario(p);
  }
  if (cfg.scenario == "spin_exchange") {
    reject_foreign_params(cfg.scenario_params, {"gamma"}, "spin_exchange");
    SpinExchangeParams p;
    p.gamma = param_or(cfg.scenario_params, "gamma", p.gamma);
    return spin_exchange_scenario(p);
  }
  fail_config("unknown scenario '" + cfg.scenario +
              "' (expected drift, leakage or spin_exchange)");
}

std::vector<std::int64_t> evaluation_grid(const RunConfig& cfg) {
  if (!cfg.grid.empty()) return parse_grid(cfg.grid);
  return build_schedule(cfg.schedule).t_set;
}

SimulateOutput run_simulate(const RunConfig& cfg, const std::string& dir,
                            std::uint64_t seed) {
  make_dir(dir);
  const Scenario sc = make_scenario(cfg);
  const Schedule sched = build_schedule(cfg.schedule);
  const TruthTable truth = exact_probabilities(sc, sched, evaluation_grid(cfg));
  Dataset ds = sample_counts(truth, sched, cfg.shots, seed);
  for (const auto& [key, value] : cfg.scenario_params)
    ds.scenario_params[key] = detail::fmt_double(value);

  SimulateOutput out;
  out.dataset_path = dir + "/dataset.qpd";
  out.truth_path = dir + "/truth.qpt";
  write_dataset(ds, out.dataset_path);
  write_truth(truth, out.truth_path);
  return out;
}

InferOutput run_infer(const RunConfig& cfg, const std::string& dataset_path,
                      const std::string& dir) {
  make_dir(dir);
  const Dataset ds = read_dataset(dataset_path);
  InferenceResult res = infer(ds, cfg.inference);

  InferOutput out;
  out.model_path = dir + "/model.qpm";
  write_model(res.model, out.model_path);
  detail::write_text(dir + "/dimension_report.txt",
                     res.report.dimension.to_text());
  detail::write_text(dir + "/fit_log.txt", res.report.to_text());
  out.report = std::move(res.report);
  return out;
}

ErrorCurve run_evaluate(const RunConfig& cfg, const std::string& model_path,
                        const std::string& truth_path,
                        const std::string& dataset_path,
                        const std::string& dir) {
  make_dir(dir);
  const Model model = read_model(model_path);
  const TruthTable truth = read_truth(truth_path);
  const Model baseline = qpt_baseline(truth);
  Dataset ds;
  const Dataset* raw = nullptr;
  if (!dataset_path.empty()) {
    ds = read_dataset(dataset_path);
    raw = &ds;
  }
  const ErrorCurve curve =
      error_curve(model, truth, evaluation_grid(cfg), raw, &baseline);
  write_error_csv(curve, dir + "/errors.csv");
  return curve;
}

PipelineOutput run_pipeline(const RunConfig& cfg, int runs, int workers) {
  if (runs < 1) fail_config("run count must be positive");
  workers = std::clamp(workers, 1, runs);
  make_dir(cfg.out_dir);

  std::vector<RunSummary> summaries(runs);
  std::vector<ErrorCurve> curves(runs);
  std::atomic<int> next{0};
  std::mutex failure_mu;
  std::exception_ptr failure;

  auto worker = [&]() {
    for (;;) {
      const int j = next.fetch_add(1);
      if (j >= runs) return;
      {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (failure) return;
      }
      try {
        char name[16];
        std::snprintf(name, sizeof name, "run%03d", j);
        const std::string run_dir = cfg.out_dir + "/" + name;
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(j);
        const SimulateOutput sim = run_simulate(cfg, run_dir, seed);
        const InferOutput inf = run_infer(cfg, sim.dataset_path, run_dir);
        const ErrorCurve curve = run_evaluate(cfg, inf.model_path,
                                              sim.truth_path, sim.dataset_path,
                                              run_dir);
        RunSummary s;
        s.run_index = j;
        s.seed = seed;
        s.d_final = inf.report.d_final;
        s.phi_last =
            inf.report.stage3_phi.empty() ? 0 : inf.report.stage3_phi.back();
        s.psi = inf.report.stage4_psi;
        s.mean_qpi_error = mean_error(curve);
        summaries[j] = std::move(s);
        curves[j] = std::move(curve);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  PipelineOutput out;
  out.runs = std::move(summaries);
  if (runs > 1) {
    out.aggregate_path = cfg.out_dir + "/aggregate.csv";
    write_aggregate_csv(curves, out.aggregate_path);
  }

  std::string text;
  double error_sum = 0;
  for (const RunSummary& s : out.runs) {
    char line[192];
    std::snprintf(line, sizeof line,
                  "run %03d: seed %llu, dimension %d, tail misfit %s, "
                  "objective %s, mean error %s\n",
                  s.run_index, static_cast<unsigned long long>(s.seed),
                  s.d_final, fmt6(s.phi_last).c_str(), fmt6(s.psi).c_str(),
                  fmt6(s.mean_qpi_error).c_str());
    text += line;
    error_sum += s.mean_qpi_error;
  }
  text += "runs: " + std::to_string(runs) +
          ", mean error over runs: " + fmt6(error_sum / runs) + "\n";
  out.summary_path = cfg.out_dir + "/summary.txt";
  detail::write_text(out.summary_path, text);
  return out;
}

}  // namespace qpi
