#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qpi/dataset.hpp"
#include "qpi/schedule.hpp"

namespace qpi {

using CMatrix = Eigen::MatrixXcd;

struct DriftParams {
  double epsilon = 0.01;  // rotation-angle error amplitude
  double Omega = 0.02;    // drift frequency of the angle modulation
};

struct LeakageParams {
  double Delta = 20.0;       // detuning of the non-computational level
  double pulse_width = 0.25; // 1/e half-width of the Gaussian pulse, in steps
  int substeps = 8192;       // piecewise-constant integration resolution
};

struct SpinExchangeParams {
  double gamma = 0.01;  // exchange coupling strength
};

// A ground-truth physics engine: joint-space initial states, extended Pauli
// observables and the per-step unitary. The drift step depends on the step
// index; the other scenarios are homogeneous.
struct Scenario {
  std::string name;
  std::vector<std::string> init_labels;
  std::vector<std::string> meas_labels;   // always x, y, z
  std::vector<std::string> frame_labels;  // x+, y+, z+, z- tomographic frame
  std::vector<CMatrix> init_states;       // joint density matrices
  std::vector<CMatrix> frame_states;
  std::vector<CMatrix> meas_ops;          // observables on the joint space
  std::function<CMatrix(std::int64_t)> step_unitary;  // U applied at step t
  bool time_dependent = false;

  int n_init() const { return static_cast<int>(init_states.size()); }
  int n_meas() const { return static_cast<int>(meas_ops.size()); }
};

Scenario drift_scenario(const DriftParams& p);
Scenario leakage_scenario(const LeakageParams& p);
Scenario spin_exchange_scenario(const SpinExchangeParams& p);

// Gaussian peak amplitude calibrated so one pulse is an exact pi rotation
// of the two-level truncation; solved by scalar root finding.
double leakage_pulse_amplitude(const LeakageParams& p);

// Max entrywise change of the leakage step unitary when the substep count
// is doubled; integration-convergence diagnostic.
double leakage_step_convergence(const LeakageParams& p);

// Exact YES probabilities (1 + Tr[rho_t * M]) / 2 at every scheduled t and
// every t in eval_grid, plus the frame block at t = 0, 1.
TruthTable exact_probabilities(const Scenario& sc, const Schedule& sched,
                               const std::vector<std::int64_t>& eval_grid);

// Binomial sampling with one RNG stream per experiment derived from
// (seed, i, t, m); deterministic regardless of evaluation order.
Dataset sample_counts(const TruthTable& truth, const Schedule& sched,
                      long long shots, std::uint64_t seed);

// Noise-free dataset with Y = round(F * shots); useful with very large
// `shots` as an exact-data fixture.
Dataset exact_dataset(const TruthTable& truth, const Schedule& sched,
                      long long shots);

// Total population of the non-computational level after t steps of the
// leakage scenario, per initial state; diagnostic for the scenario regime.
std::vector<std::vector<double>> leakage_level2_population(
    const LeakageParams& p, std::int64_t t_max);

}  // namespace qpi
