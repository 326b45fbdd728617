#include "qpi/config.hpp"

#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "qpi/pipeline.hpp"

using qpitest::check_error;

namespace {

std::string write_cfg(const qpitest::TempFile& f, const std::string& text) {
  std::ofstream out(f.path, std::ios::binary);
  out << text;
  return f.path;
}

}  // namespace

TEST_CASE("configs parse sections, comments and overrides") {
  qpitest::TempFile f("full.cfg");
  write_cfg(f,
            "# full example\n"
            "[scenario]\n"
            "name = drift\n"
            "epsilon = 0.02\n"
            "Omega = 0.05\n"
            "\n"
            "[schedule]\n"
            "l = 4\n"
            "a_bar = 3\n"
            "b_bar = 2\n"
            "flight_len = 11\n"
            "; alt comment style\n"
            "[sampling]\n"
            "shots = 2000\n"
            "seed = 9\n"
            "[inference]\n"
            "phi_accept = 1.25\n"
            "max_passes = 7\n"
            "verbose = true\n"
            "[evaluation]\n"
            "grid = 0:100:10\n"
            "[output]\n"
            "dir = scratch/out\n");

  const qpi::RunConfig cfg = qpi::load_config(f.path);
  CHECK(cfg.scenario == "drift");
  CHECK(cfg.scenario_params.at("epsilon") == 0.02);
  CHECK(cfg.scenario_params.at("Omega") == 0.05);
  CHECK(cfg.schedule.l == 4);
  CHECK(cfg.schedule.a_bar == 3);
  CHECK(cfg.schedule.b_bar == 2);
  CHECK(cfg.schedule.flight_len == 11);
  CHECK(cfg.shots == 2000);
  CHECK(cfg.seed == 9);
  CHECK(cfg.inference.phi_accept == 1.25);
  CHECK(cfg.inference.max_passes == 7);
  CHECK(cfg.inference.verbose);
  CHECK(cfg.grid == "0:100:10");
  CHECK(cfg.out_dir == "scratch/out");

  // Untouched keys keep their defaults.
  CHECK(cfg.inference.pseudocount == 1.0);
  CHECK(cfg.inference.stage4_max_iter == 200);
}

TEST_CASE("config errors carry the config kind and location") {
  qpitest::TempFile f("bad.cfg");

  check_error(qpi::ErrorKind::io, [] { qpi::load_config("missing.cfg"); });

  write_cfg(f, "[nonsense]\n");
  check_error(qpi::ErrorKind::config, [&] { qpi::load_config(f.path); });

  write_cfg(f, "[scenario]\ncolor = blue\n");
  check_error(qpi::ErrorKind::config, [&] { qpi::load_config(f.path); });

  write_cfg(f, "shots = 100\n");
  check_error(qpi::ErrorKind::config, [&] { qpi::load_config(f.path); });

  write_cfg(f, "[sampling]\nshots\n");
  check_error(qpi::ErrorKind::config, [&] { qpi::load_config(f.path); });

  write_cfg(f, "[sampling]\nshots = ten\n");
  check_error(qpi::ErrorKind::config, [&] { qpi::load_config(f.path); });

  write_cfg(f, "[schedule]\nl = 99999999999\n");
  check_error(qpi::ErrorKind::config, [&] { qpi::load_config(f.path); });

  write_cfg(f, "[inference]\nverbose = maybe\n");
  check_error(qpi::ErrorKind::config, [&] { qpi::load_config(f.path); });

  try {
    write_cfg(f, "[scenario]\n# padding\ncolor = blue\n");
    qpi::load_config(f.path);
    FAIL_CHECK("expected a parse failure");
  } catch (const qpi::Error& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
}

TEST_CASE("grids expand inclusively") {
  CHECK(qpi::parse_grid("0:1100:5").size() == 221);
  CHECK(qpi::parse_grid("7:7:3") == std::vector<std::int64_t>{7});
  CHECK(qpi::parse_grid("2:11:4") == std::vector<std::int64_t>{2, 6, 10});

  check_error(qpi::ErrorKind::config, [] { qpi::parse_grid("5"); });
  check_error(qpi::ErrorKind::config, [] { qpi::parse_grid("10:5:1"); });
  check_error(qpi::ErrorKind::config, [] { qpi::parse_grid("0:10:0"); });
  check_error(qpi::ErrorKind::config, [] { qpi::parse_grid("-5:10:1"); });
  check_error(qpi::ErrorKind::config, [] { qpi::parse_grid("a:b:c"); });
}

TEST_CASE("scenario construction validates names and parameters") {
  qpi::RunConfig cfg;
  cfg.scenario = "drift";
  cfg.scenario_params["epsilon"] = 0.05;
  const qpi::Scenario sc = qpi::make_scenario(cfg);
  CHECK(sc.name == "drift");
  CHECK(sc.init_labels.size() == 2);

  cfg.scenario = "warp";
  check_error(qpi::ErrorKind::config, [&] { qpi::make_scenario(cfg); });

  cfg.scenario = "drift";
  cfg.scenario_params["gamma"] = 0.1;  // belongs to spin_exchange
  check_error(qpi::ErrorKind::config, [&] { qpi::make_scenario(cfg); });

  qpi::RunConfig leak;
  leak.scenario = "leakage";
  leak.scenario_params["Delta"] = 15;
  leak.scenario_params["substeps"] = 64.5;
  check_error(qpi::ErrorKind::config, [&] { qpi::make_scenario(leak); });
  leak.scenario_params["substeps"] = 64;
  CHECK(qpi::make_scenario(leak).name == "leakage");
}

TEST_CASE("evaluation grid falls back to the schedule times") {
  qpi::RunConfig cfg;
  cfg.schedule.l = 1;
  cfg.schedule.a_bar = 1;
  cfg.schedule.b_bar = 1;
  cfg.schedule.flight_len = 4;
  CHECK(qpi::evaluation_grid(cfg) ==
        qpi::build_schedule(cfg.schedule).t_set);

  cfg.grid = "0:10:2";
  CHECK(qpi::evaluation_grid(cfg) ==
        std::vector<std::int64_t>{0, 2, 4, 6, 8, 10});
}
