#include "qpi/config.hpp"

#include <set>
#include <string>

#include "qpi/errors.hpp"
#include "text_io.hpp"

namespace qpi {

namespace {

// The text parsers report io errors; a bad value inside a config file is a
// configuration error instead, so translate the kind and keep the message.
template <typename Fn>
auto as_config(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    fail_config(e.what());
  }
}

double num_value(const std::string& key, const std::string& val) {
  return as_config([&] { return detail::parse_double(val, "key '" + key + "'"); });
}

long long int_value(const std::string& key, const std::string& val) {
  return as_config([&] { return detail::parse_ll(val, "key '" + key + "'"); });
}

int small_int_value(const std::string& key, const std::string& val) {
  const long long v = int_value(key, val);
  if (v < -1000000000 || v > 1000000000)
    fail_config("key '" + key + "' is out of range: " + val);
  return static_cast<int>(v);
}

bool bool_value(const std::string& key, const std::string& val) {
  if (val == "1" || val == "true") return true;
  if (val == "0" || val == "false") return false;
  fail_config("key '" + key + "' must be a boolean, got '" + val + "'");
}

const std::set<std::string> kScenarioParamKeys = {
    "epsilon", "Omega", "Delta", "pulse_width", "substeps", "gamma"};

}  // namespace

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  const auto lines = detail::read_lines(path);
  std::string section;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string here = path + ":" + std::to_string(ln + 1);
    const std::string s = detail::trim(lines[ln]);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;

    if (s.front() == '[') {
      if (s.back() != ']')
        fail_config(here + ": malformed section header '" + s + "'");
      section = detail::trim(s.substr(1, s.size() - 2));
      if (section != "scenario" && section != "schedule" &&
          section != "sampling" && section != "inference" &&
          section != "evaluation" && section != "output")
        fail_config(here + ": unknown section [" + section + "]");
      continue;
    }

    const auto eq = s.find('=');
    if (eq == std::string::npos)
      fail_config(here + ": expected 'key = value', got '" + s + "'");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string val = detail::trim(s.substr(eq + 1));
    if (key.empty()) fail_config(here + ": empty key");
    if (section.empty())
      fail_config(here + ": key '" + key + "' appears before any section");

    if (section == "scenario") {
      if (key == "name")
        cfg.scenario = val;
      else if (kScenarioParamKeys.count(key))
        cfg.scenario_params[key] = num_value(key, val);
      else
        fail_config(here + ": unknown scenario key '" + key + "'");
    } else if (section == "schedule") {
      if (key == "l")
        cfg.schedule.l = small_int_value(key, val);
      else if (key == "a_bar")
        cfg.schedule.a_bar = small_int_value(key, val);
      else if (key == "b_bar")
        cfg.schedule.b_bar = small_int_value(key, val);
      else if (key == "flight_len")
        cfg.schedule.flight_len = small_int_value(key, val);
      else
        fail_config(here + ": unknown schedule key '" + key + "'");
    } else if (section == "sampling") {
      if (key == "shots")
        cfg.shots = int_value(key, val);
      else if (key == "seed")
        cfg.seed = as_config(
            [&] { return detail::parse_u64(val, "key 'seed'"); });
      else
        fail_config(here + ": unknown sampling key '" + key + "'");
    } else if (section == "inference") {
      InferenceOptions& opt = cfg.inference;
      if (key == "pseudocount")
        opt.pseudocount = num_value(key, val);
      else if (key == "als_max_iter")
        opt.als_max_iter = small_int_value(key, val);
      else if (key == "als_tol")
        opt.als_tol = num_value(key, val);
      else if (key == "phi_accept")
        opt.phi_accept = num_value(key, val);
      else if (key == "phi_improve")
        opt.phi_improve = num_value(key, val);
      else if (key == "ab_sweep_cap")
        opt.ab_sweep_cap = small_int_value(key, val);
      else if (key == "gn_max_iter")
        opt.gn_max_iter = small_int_value(key, val);
      else if (key == "max_passes")
        opt.max_passes = small_int_value(key, val);
      else if (key == "d_increase_cap")
        opt.d_increase_cap = small_int_value(key, val);
      else if (key == "psi_improve")
        opt.psi_improve = num_value(key, val);
      else if (key == "stage4_max_iter")
        opt.stage4_max_iter = small_int_value(key, val);
      else if (key == "beta_decay")
        opt.beta_decay = num_value(key, val);
      else if (key == "jitter_seed")
        opt.jitter_seed = as_config(
            [&] { return detail::parse_u64(val, "key 'jitter_seed'"); });
      else if (key == "verbose")
        opt.verbose = bool_value(key, val);
      else
        fail_config(here + ": unknown inference key '" + key + "'");
    } else if (section == "evaluation") {
      if (key == "grid")
        cfg.grid = val;
      else
        fail_config(here + ": unknown evaluation key '" + key + "'");
    } else {  // output
      if (key == "dir")
        cfg.out_dir = val;
      else
        fail_config(here + ": unknown output key '" + key + "'");
    }
  }
  return cfg;
}

std::vector<std::int64_t> parse_grid(const std::string& spec) {
  const auto parts = detail::split(spec, ':');
  if (parts.size() != 3)
    fail_config("grid must be START:STOP:STEP, got '" + spec + "'");
  const long long start =
      as_config([&] { return detail::parse_ll(parts[0], "grid start"); });
  const long long stop =
      as_config([&] { return detail::parse_ll(parts[1], "grid stop"); });
  const long long step =
      as_config([&] { return detail::parse_ll(parts[2], "grid step"); });
  if (start < 0 || stop < start || step < 1)
    fail_config("grid range '" + spec + "' is empty or negative");
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>((stop - start) / step + 1));
  for (long long t = start; t <= stop; t += step) out.push_back(t);
  return out;
}

}  // namespace qpi
