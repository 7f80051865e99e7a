#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "hybrid/euler.hpp"
#include "hybrid/scenario.hpp"

using namespace hybrid;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hybrid_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("builtin scenarios") {
  const auto sod = builtin_scenario("sod", 1e-2);
  CHECK(sod.initial.left.T == 5.0);
  CHECK(sod.initial.right.T == 4.0);
  CHECK(sod.initial.right.rho == 0.125);
  CHECK(sod.budget.value == 4e5);
  CHECK(builtin_scenario("sod", 1e-1).budget.value == 6e5);
  CHECK(builtin_scenario("sod", 1e-3).budget.value == 2e5);
  CHECK(sod.t_end == 0.8);
  CHECK(sod.beta_thr == 2.5e-2);

  const auto two = builtin_scenario("two-freq");
  CHECK(two.epsilon.split == 0.5);
  CHECK(two.epsilon.at(0.25) == 1e-4);
  CHECK(two.epsilon.at(0.75) == 1e-2);
  CHECK(two.budget.value == 80000.0);
  CHECK(two.initial.at(0.5)(comp::rho) == 1.0);
  CHECK(two.initial.at(0.7)(comp::rho) == doctest::Approx(1.0 + 0.1 * std::sqrt(0.04 / 0.02)));

  const auto shock = builtin_scenario("unsteady-shock", 1e-3);
  CHECK(shock.buffer_width == 5);
  CHECK(builtin_scenario("unsteady-shock", 1e-1).buffer_width == 10);
  CHECK(builtin_scenario("unsteady-shock", 1e-2).buffer_width == 10);
  CHECK(shock.bounds.left == BoundaryKind::Reflecting);
  const auto p = primitives(shock.initial.at(0.3));
  CHECK(p.u.x() == -2.0);
  CHECK(p.theta == doctest::Approx(4.0));

  CHECK_THROWS_AS(builtin_scenario("nope"), UnknownScenario);
}

TEST_CASE("particle mass follows the budget") {
  const auto shock = builtin_scenario("unsteady-shock", 1e-2);
  CHECK(particle_mass(shock) == doctest::Approx(shock.grid.dx() / 400.0));
  const auto sod = builtin_scenario("sod", 1e-2);
  CHECK(particle_mass(sod) == doctest::Approx(1.125 / 4e5).epsilon(1e-12));
}

TEST_CASE("config text round-trips") {
  for (const auto& cfg : {builtin_scenario("sod", 1e-3), builtin_scenario("two-freq"),
                          builtin_scenario("unsteady-shock", 1e-2)}) {
    auto c = cfg;
    c.seed = 123456789012345ULL;
    c.beta_thr = 0.1 / 3.0;
    const auto text = serialize_config(c);
    CHECK(text.rfind("schema=1", 0) == 0);
    CHECK(parse_config(text) == c);
  }
}

TEST_CASE("config parsing rejects bad input") {
  const auto good = serialize_config(builtin_scenario("sod", 1e-2));
  auto replace = [&](const std::string& from, const std::string& to) {
    std::string t = good;
    const auto at = t.find(from);
    REQUIRE(at != std::string::npos);
    t.replace(at, from.size(), to);
    return t;
  };
  CHECK_THROWS_AS(parse_config(replace("schema=1", "schema=2")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace("n_cells=200", "n_cells=-3")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace("t_end=0.8", "t_end=abc")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace("output_times=0.3,0.6,0.8", "output_times=0.3,0.9")), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), Error);
}

TEST_CASE("run modes") {
  CHECK(run_mode_from_string("coupled") == RunMode::Coupled);
  CHECK(run_mode_from_string("full-dsmc") == RunMode::FullDsmc);
  CHECK(run_mode_from_string("euler-only") == RunMode::EulerOnly);
  CHECK(to_string(RunMode::FullDsmc) == "full-dsmc");
  CHECK_THROWS(run_mode_from_string("hybrid"));
}

TEST_CASE("snapshot and series CSV") {
  const auto dir = scratch_dir("csv");
  write_series({}, dir / "empty.csv");
  CHECK(slurp(dir / "empty.csv") == "step,time,dt,total_particles\n");
  CHECK(read_series(dir / "empty.csv").empty());

  SnapshotRecord r;
  r.time = 0.1;
  r.x = {0.25, 0.5, 0.75};
  r.rho = {1.0 / 3.0, 0.1, 2e-17};
  r.ux = {-0.0, 1e300, 0.2};
  r.T = {4.0, 5.0 / 7.0, 1.0};
  r.h = {0.0, 0.5, 1.0};
  r.beta = {0.0, 0.03, 0.7};
  r.np = {0, 17, 400};
  write_snapshot(r, dir / "snap.csv");
  const auto text = slurp(dir / "snap.csv");
  CHECK(count_lines(text) == 4);
  CHECK(text.find('\r') == std::string::npos);
  const auto back = read_snapshot(dir / "snap.csv");
  CHECK(back.time == r.time);
  CHECK(back.x == r.x);
  CHECK(back.rho == r.rho);
  CHECK(back.ux == r.ux);
  CHECK(back.T == r.T);
  CHECK(back.h == r.h);
  CHECK(back.beta == r.beta);
  CHECK(back.np == r.np);
  CHECK(back.total_particles == 417);

  const std::vector<SeriesEntry> series = {{1, 1e-3, 1e-3, 10}, {2, 0.1 + 0.2, 0.1, 12}};
  write_series(series, dir / "series.csv");
  const auto s = read_series(dir / "series.csv");
  REQUIRE(s.size() == 2);
  CHECK(s[1].time == 0.1 + 0.2);
  CHECK(s[1].total_particles == 12);

  CHECK_THROWS_AS(write_series(series, dir / "missing" / "series.csv"), Error);
}

TEST_CASE("euler-only run equals direct fluid steps") {
  auto cfg = builtin_scenario("sod", 1e-2);
  cfg.t_end = 0.1;
  cfg.output_times = {0.05, 0.1};
  RunOptions opts;
  opts.mode = RunMode::EulerOnly;
  const auto result = run(cfg, opts);
  REQUIRE(result.snapshots.size() == 2);
  CHECK(result.snapshots[0].time == 0.05);
  CHECK(result.snapshots[1].time == 0.1);

  auto sim = make_simulation(cfg, RunMode::EulerOnly);
  ConservedField f = sim.field;
  const Eigen::VectorXd h = Eigen::VectorXd::Zero(cfg.grid.n_cells);
  const Eigen::VectorXd eps = sim.eps;
  double t = 0.0;
  for (double stop : cfg.output_times) {
    while (t < stop) {
      const double dt = std::min(compute_dt(f, sim.particles, eps, cfg.cfl), stop - t);
      f = fluid_step(f, FieldMatrix::Zero(5, cfg.grid.n_cells), dt, h, cfg.bounds);
      t = dt == stop - t ? stop : t + dt;
    }
  }
  CHECK((result.final_field.states - f.states).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(result.series.size() == static_cast<std::size_t>(result.steps));
}

TEST_CASE("identical seeds give byte-identical outputs") {
  auto cfg = builtin_scenario("unsteady-shock", 1e-2);
  cfg.t_end = 0.02;
  cfg.output_times = {0.01, 0.02};
  cfg.budget.value = 100.0;
  for (auto mode : {RunMode::Coupled, RunMode::FullDsmc}) {
    const auto a = scratch_dir("det_a"), b = scratch_dir("det_b");
    RunOptions opts;
    opts.mode = mode;
    opts.out_dir = a;
    run(cfg, opts);
    opts.out_dir = b;
    run(cfg, opts);
    for (const char* name : {"snapshot_000.csv", "snapshot_001.csv", "series.csv", "config.ini"}) {
      INFO(name);
      CHECK(slurp(a / name) == slurp(b / name));
    }
    CHECK(fs::exists(a / "manifest.json"));
  }
}

TEST_CASE("a failing run flushes partial outputs") {
  auto cfg = builtin_scenario("sod", 1e-2);
  cfg.epsilon = {1e-16, 1e-16, 0.0};
  cfg.output_times = {0.0, 0.8};
  const auto dir = scratch_dir("fail");
  RunOptions opts;
  opts.mode = RunMode::EulerOnly;
  opts.out_dir = dir;
  CHECK_THROWS_AS(run(cfg, opts), StepFailure);
  CHECK(fs::exists(dir / "snapshot_000.csv"));
  CHECK(slurp(dir / "series.csv") == "step,time,dt,total_particles\n");
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("coupled two-frequency run keeps the left half fluid") {
  auto cfg = builtin_scenario("two-freq");
  RunOptions opts;
  opts.mode = RunMode::Coupled;
  bool left_fluid = true;
  opts.on_step = [&](const Simulation& sim) {
    for (int j = 0; j < sim.field.size(); ++j)
      if (sim.field.grid.cell_center(j) < 0.5 - cfg.buffer_width * cfg.grid.dx() && sim.transition.h(j) > 0.0)
        left_fluid = false;
  };
  const auto result = run(cfg, opts);
  CHECK(left_fluid);
  CHECK(result.snapshots.size() == 3);
}
