#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qpi/model.hpp"
#include "qpi/schedule.hpp"

namespace qpi {

// One experiment: prepare init i, apply the process t times, measure m,
// repeat N times, record Y successes.
struct ExperimentRecord {
  int i = 0;           // index into init_labels
  std::int64_t t = 0;  // repetition count
  int m = 0;           // index into meas_labels
  long long N = 0;     // trials
  long long Y = 0;     // YES outcomes
};

struct Dataset {
  ScheduleParams schedule_params;
  std::vector<std::string> init_labels;
  std::vector<std::string> meas_labels;
  std::string scenario;                           // scenario name, may be empty
  std::map<std::string, std::string> scenario_params;  // numeric metadata
  std::uint64_t seed = 0;
  long long shots = 0;
  // Sorted by (i, t, m); exactly one record per (i, t in t_set, m).
  std::vector<ExperimentRecord> records;

  int n_init() const { return static_cast<int>(init_labels.size()); }
  int n_meas() const { return static_cast<int>(meas_labels.size()); }
  const ExperimentRecord& at(int i, std::int64_t t, int m) const;
  // Validates coverage of schedule x labels, record bounds and ordering.
  void validate() const;
};

double freq(const ExperimentRecord& rec);

// Pseudocount-regularized binomial variance Fh*(1-Fh)/N with
// Fh = (Y + pc) / (N + 2*pc); strictly positive even when Y is 0 or N.
double estimate_variance(const ExperimentRecord& rec, double pseudocount = 1.0);

Dataset read_dataset(const std::string& path);
void write_dataset(const Dataset& ds, const std::string& path);

// CSV export of frequencies: columns i,t,m,N,Y,freq.
void write_freq_csv(const Dataset& ds, const std::string& path);

// Exact probabilities of the simulated process. `exact[t]` is the
// |I| x |M| matrix of YES probabilities of the scenario initializations;
// frame0/frame1 hold the four-state tomographic frame at t = 0 and t = 1
// used by the process-tomography baseline.
struct TruthTable {
  std::string scenario;
  std::vector<std::string> init_labels;
  std::vector<std::string> meas_labels;
  std::map<std::int64_t, Matrix> exact;
  std::vector<std::string> frame_labels;
  Matrix frame0, frame1;  // |frame| x |M|

  const Matrix& at(std::int64_t t) const;
  bool has(std::int64_t t) const { return exact.count(t) != 0; }
};

TruthTable read_truth(const std::string& path);
void write_truth(const TruthTable& truth, const std::string& path);

}  // namespace qpi
