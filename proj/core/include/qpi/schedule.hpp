#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace qpi {

// Base offsets of the biexponential design: rho(0)=0, rho(i)=2^(i-1).
std::int64_t rho(int i);

struct ScheduleParams {
  int l = 1;        // observation-depth parameter of the Hankel arrangement
  int a_bar = 0;    // row-side base exponent range 0..a_bar
  int b_bar = 0;    // column-side base exponent range 0..b_bar
  int flight_len = 0;  // 0 selects the default 2l+2

  int resolved_flight_len() const {
    return flight_len > 0 ? flight_len : 2 * l + 2;
  }
  void validate() const;  // l, a_bar, b_bar >= 0 and flight_len >= 2l+1
};

// A flight covers flight_len consecutive t values starting at base; every
// (initialization, measurement) pair is scheduled at each of them.
struct Flight {
  std::int64_t base = 0;
  int len = 0;
  std::int64_t last() const { return base + len - 1; }
};

struct Schedule {
  ScheduleParams params;
  std::vector<std::int64_t> bases;   // sorted distinct values rho_a + rho_b
  std::vector<Flight> flights;       // one per distinct base, sorted by base
  std::vector<std::int64_t> t_set;   // sorted union of all flight t values
  // block_bases[b] lists the bases rho_a + rho_b for a = 0..a_bar; a flight
  // may belong to several blocks when bases coincide across (a, b) pairs.
  std::vector<std::vector<std::int64_t>> block_bases;

  int flight_len() const { return params.resolved_flight_len(); }
  bool contains(std::int64_t t) const;
};

Schedule build_schedule(const ScheduleParams& params);

// Number of Hankel cells per (i, m) pair holding the experiment at time t,
// counted across all block matrices: |{(a,b,k1,k2) : rho_a+rho_b+k1+k2 = t}|
// with k1, k2 in 0..l. Times not reachable by the arrangement are absent.
std::map<std::int64_t, int> hankel_multiplicity(const ScheduleParams& params);

}  // namespace qpi
