#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "qpi/dataset.hpp"
#include "qpi/errors.hpp"
#include "qpi/model.hpp"
#include "qpi/schedule.hpp"

namespace qpitest {

inline void check_error(qpi::ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
    FAIL_CHECK("expected an error, none was thrown");
  } catch (const qpi::Error& e) {
    CHECK(e.kind() == kind);
  }
}

// Exact table for a synthetic model over the schedule times (plus extras).
// The tomographic frame block is filled with placeholders; tests that use
// the tomography baseline build their truth from a real scenario instead.
inline qpi::TruthTable truth_from_model(
    const qpi::Model& m, const qpi::Schedule& sched,
    const std::vector<std::int64_t>& extra = {}) {
  qpi::TruthTable tt;
  tt.scenario = "synthetic";
  tt.init_labels = m.init_labels;
  tt.meas_labels = m.meas_labels;
  for (const auto t : sched.t_set) tt.exact[t] = qpi::predict(m, t);
  for (const auto t : extra) tt.exact[t] = qpi::predict(m, t);
  tt.frame_labels = {"x+", "y+", "z+", "z-"};
  tt.frame0 = qpi::Matrix::Constant(4, m.n_meas(), 0.5);
  tt.frame1 = qpi::Matrix::Constant(4, m.n_meas(), 0.5);
  return tt;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Self-cleaning scratch file path in the test working directory.
struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("qpi_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace qpitest
