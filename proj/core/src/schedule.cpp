#include "qpi/schedule.hpp"

#include <algorithm>
#include <set>

#include "qpi/errors.hpp"

namespace qpi {

std::int64_t rho(int i) {
  if (i < 0) fail_config("base-offset index must be nonnegative");
  if (i > 62) fail_config("base-offset index too large for 64-bit times");
  return i == 0 ? 0 : (std::int64_t{1} << (i - 1));
}

void ScheduleParams::validate() const {
  if (l < 0) fail_config("schedule parameter l must be nonnegative");
  if (a_bar < 0 || b_bar < 0)
    fail_config("schedule exponent ranges must be nonnegative");
  if (a_bar > 62 || b_bar > 62)
    fail_config("schedule exponent ranges too large for 64-bit times");
  if (flight_len < 0)
    fail_config("flight length must be positive (0 selects the default)");
  if (resolved_flight_len() < 2 * l + 1)
    fail_config("flight length must be at least 2l+1");
}

bool Schedule::contains(std::int64_t t) const {
  return std::binary_search(t_set.begin(), t_set.end(), t);
}

Schedule build_schedule(const ScheduleParams& params) {
  params.validate();
  Schedule sched;
  sched.params = params;

  std::set<std::int64_t> base_set;
  sched.block_bases.assign(params.b_bar + 1, {});
  for (int b = 0; b <= params.b_bar; ++b)
    for (int a = 0; a <= params.a_bar; ++a) {
      const std::int64_t base = rho(a) + rho(b);
      sched.block_bases[b].push_back(base);
      base_set.insert(base);
    }
  sched.bases.assign(base_set.begin(), base_set.end());

  const int len = params.resolved_flight_len();
  std::set<std::int64_t> t_set;
  for (std::int64_t base : sched.bases) {
    sched.flights.push_back({base, len});
    for (int k = 0; k < len; ++k) t_set.insert(base + k);
  }
  sched.t_set.assign(t_set.begin(), t_set.end());
  return sched;
}

std::map<std::int64_t, int> hankel_multiplicity(const ScheduleParams& params) {
  params.validate();
  std::map<std::int64_t, int> mult;
  for (int a = 0; a <= params.a_bar; ++a)
    for (int b = 0; b <= params.b_bar; ++b)
      for (int k1 = 0; k1 <= params.l; ++k1)
        for (int k2 = 0; k2 <= params.l; ++k2)
          ++mult[rho(a) + rho(b) + k1 + k2];
  return mult;
}

}  // namespace qpi
