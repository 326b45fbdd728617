#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qpi/inference.hpp"
#include "qpi/schedule.hpp"

namespace qpi {

struct RunConfig {
  std::string scenario;  // drift | leakage | spin_exchange
  std::map<std::string, double> scenario_params;

  ScheduleParams schedule;
  long long shots = 10000;
  std::uint64_t seed = 1;

  InferenceOptions inference;

  std::string grid;  // START:STOP:STEP evaluation times, empty = schedule times
  std::string out_dir = "out";
};

// INI-style config: [section] headers, key = value lines, # or ; comments.
// Unknown sections or keys are config errors.
RunConfig load_config(const std::string& path);

// Expands "START:STOP:STEP" (inclusive stop) into a sorted time grid.
std::vector<std::int64_t> parse_grid(const std::string& spec);

}  // namespace qpi
