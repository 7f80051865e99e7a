#include "hybrid/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace hybrid {

namespace pt = boost::property_tree;

ConservedState InitialData::at(double x) const {
  PrimitiveState s;
  if (kind == Kind::Piecewise) {
    s = x <= split ? left : right;
  } else {
    s = left;
    s.rho = base + amplitude * std::sqrt((x - center) * (x - center) / width);
  }
  return assemble(s.rho, Eigen::Vector3d(s.u, 0.0, 0.0), s.T);
}

void ScenarioConfig::validate() const {
  if (grid.n_cells <= 0 || !(grid.x_max > grid.x_min)) throw ConfigError("invalid grid");
  if (!(budget.value > 0.0)) throw ConfigError("particle budget must be positive");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (buffer_width < 0) throw ConfigError("buffer width must be non-negative");
  if (!(beta_thr > 0.0)) throw ConfigError("beta_thr must be positive");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw ConfigError("cfl must lie in (0, 1]");
  if (!(epsilon.left > 0.0) || !(epsilon.right > 0.0)) throw ConfigError("epsilon must be positive");
  for (double t : output_times) {
    if (t < 0.0 || t > t_end) throw ConfigError("output time " + format_double(t) + " outside [0, t_end]");
  }
}

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
  return name == o.name && grid.x_min == o.grid.x_min && grid.x_max == o.grid.x_max &&
         grid.n_cells == o.grid.n_cells && epsilon == o.epsilon && initial == o.initial &&
         budget == o.budget && buffer_width == o.buffer_width && beta_thr == o.beta_thr && cfl == o.cfl &&
         bounds.left == o.bounds.left && bounds.right == o.bounds.right && t_end == o.t_end &&
         output_times == o.output_times && seed == o.seed;
}

namespace {

int variant_index(std::optional<double> eps) {
  const double e = eps.value_or(1e-1);
  const double levels[] = {1e-1, 1e-2, 1e-3};
  for (int i = 0; i < 3; ++i) {
    if (std::abs(e - levels[i]) <= 1e-12 * levels[i]) return i;
  }
  return -1;
}

}  // namespace

ScenarioConfig builtin_scenario(std::string_view name, std::optional<double> eps) {
  ScenarioConfig c;
  c.name = std::string(name);
  c.beta_thr = 2.5e-2;
  if (name == "two-freq") {
    c.grid = {0.0, 1.0, 200};
    c.epsilon = {1e-4, 1e-2, 0.5};
    c.initial.kind = InitialData::Kind::RootProfile;
    c.initial.left = {1.0, 0.0, 1.0};
    c.initial.right = c.initial.left;
    c.initial.base = 1.0;
    c.initial.amplitude = 0.1;
    c.initial.center = 0.5;
    c.initial.width = 0.02;
    c.budget = {ParticleBudget::Kind::Total, 80000.0};
    c.buffer_width = 10;
    c.bounds = {BoundaryKind::Open, BoundaryKind::Open};
    c.t_end = 0.15;
    c.output_times = {0.05, 0.10, 0.15};
    return c;
  }
  if (name == "unsteady-shock") {
    const double e = eps.value_or(1e-1);
    const int v = variant_index(e);
    c.grid = {0.0, 1.5, 200};
    c.epsilon = {e, e, 0.0};
    c.initial.kind = InitialData::Kind::Piecewise;
    c.initial.split = c.grid.x_max;
    c.initial.left = {1.0, -2.0, 4.0};
    c.initial.right = c.initial.left;
    c.budget = {ParticleBudget::Kind::PerUnitDensity, 400.0};
    c.buffer_width = v == 2 ? 5 : 10;
    c.bounds = {BoundaryKind::Reflecting, BoundaryKind::Open};
    c.t_end = 0.15;
    c.output_times = {0.05, 0.10, 0.15};
    return c;
  }
  if (name == "sod") {
    const double e = eps.value_or(1e-1);
    const int v = variant_index(e);
    const double totals[] = {6e5, 4e5, 2e5};
    c.grid = {0.0, 2.0, 200};
    c.epsilon = {e, e, 0.0};
    c.initial.kind = InitialData::Kind::Piecewise;
    c.initial.split = 1.0;
    c.initial.left = {1.0, 0.0, 5.0};
    c.initial.right = {0.125, 0.0, 4.0};
    c.budget = {ParticleBudget::Kind::Total, totals[v < 0 ? 0 : v]};
    c.buffer_width = v == 2 ? 5 : 10;
    c.bounds = {BoundaryKind::Open, BoundaryKind::Open};
    c.t_end = 0.8;
    c.output_times = {0.3, 0.6, 0.8};
    return c;
  }
  throw UnknownScenario("unknown scenario '" + std::string(name) +
                        "' (expected two-freq, unsteady-shock or sod)");
}

// ---------------------------------------------------------------------------
// Config text
// ---------------------------------------------------------------------------

namespace {

std::string join_times(const std::vector<double>& times) {
  std::string s;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i) s += ',';
    s += format_double(times[i]);
  }
  return s;
}

std::vector<double> split_times(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_double(item));
  }
  return out;
}

std::string budget_kind_name(ParticleBudget::Kind k) {
  return k == ParticleBudget::Kind::Total ? "total" : "per_unit_density";
}

std::string initial_kind_name(InitialData::Kind k) {
  return k == InitialData::Kind::Piecewise ? "piecewise" : "root_profile";
}

template <typename T>
T required(const pt::ptree& tree, const std::string& key) {
  try {
    return tree.get<T>(key);
  } catch (const pt::ptree_error&) {
    throw ConfigError("missing or malformed key '" + key + "'");
  }
}

double required_double(const pt::ptree& tree, const std::string& key) {
  return parse_double(required<std::string>(tree, key));
}

}  // namespace

std::string serialize_config(const ScenarioConfig& c) {
  pt::ptree tree;
  tree.put("schema", 1);
  tree.put("name", c.name);
  tree.put("grid.x_min", format_double(c.grid.x_min));
  tree.put("grid.x_max", format_double(c.grid.x_max));
  tree.put("grid.n_cells", c.grid.n_cells);
  tree.put("physics.eps_left", format_double(c.epsilon.left));
  tree.put("physics.eps_right", format_double(c.epsilon.right));
  tree.put("physics.eps_split", format_double(c.epsilon.split));
  tree.put("physics.beta_thr", format_double(c.beta_thr));
  tree.put("physics.buffer_width", c.buffer_width);
  tree.put("physics.cfl", format_double(c.cfl));
  tree.put("initial.kind", initial_kind_name(c.initial.kind));
  tree.put("initial.split", format_double(c.initial.split));
  tree.put("initial.left_rho", format_double(c.initial.left.rho));
  tree.put("initial.left_u", format_double(c.initial.left.u));
  tree.put("initial.left_T", format_double(c.initial.left.T));
  tree.put("initial.right_rho", format_double(c.initial.right.rho));
  tree.put("initial.right_u", format_double(c.initial.right.u));
  tree.put("initial.right_T", format_double(c.initial.right.T));
  tree.put("initial.base", format_double(c.initial.base));
  tree.put("initial.amplitude", format_double(c.initial.amplitude));
  tree.put("initial.center", format_double(c.initial.center));
  tree.put("initial.width", format_double(c.initial.width));
  tree.put("particles.budget_kind", budget_kind_name(c.budget.kind));
  tree.put("particles.budget", format_double(c.budget.value));
  tree.put("boundaries.left", to_string(c.bounds.left));
  tree.put("boundaries.right", to_string(c.bounds.right));
  tree.put("run.t_end", format_double(c.t_end));
  tree.put("run.output_times", join_times(c.output_times));
  tree.put("run.seed", c.seed);
  std::ostringstream out;
  pt::write_ini(out, tree);
  return out.str();
}

ScenarioConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (tree.get<int>("schema", 0) != 1) throw ConfigError("unsupported or missing schema (expected schema=1)");

  ScenarioConfig c;
  c.name = tree.get<std::string>("name", "custom");
  c.grid.x_min = required_double(tree, "grid.x_min");
  c.grid.x_max = required_double(tree, "grid.x_max");
  c.grid.n_cells = required<int>(tree, "grid.n_cells");
  c.epsilon.left = required_double(tree, "physics.eps_left");
  c.epsilon.right = parse_double(tree.get<std::string>("physics.eps_right", format_double(c.epsilon.left)));
  c.epsilon.split = parse_double(tree.get<std::string>("physics.eps_split", "0"));
  c.beta_thr = parse_double(tree.get<std::string>("physics.beta_thr", "0.025"));
  c.buffer_width = tree.get<int>("physics.buffer_width", 10);
  c.cfl = parse_double(tree.get<std::string>("physics.cfl", "0.5"));

  const auto kind = required<std::string>(tree, "initial.kind");
  if (kind == "piecewise") {
    c.initial.kind = InitialData::Kind::Piecewise;
  } else if (kind == "root_profile") {
    c.initial.kind = InitialData::Kind::RootProfile;
  } else {
    throw ConfigError("unknown initial.kind '" + kind + "'");
  }
  c.initial.split = parse_double(tree.get<std::string>("initial.split", "0"));
  c.initial.left = {required_double(tree, "initial.left_rho"), required_double(tree, "initial.left_u"),
                    required_double(tree, "initial.left_T")};
  c.initial.right = {parse_double(tree.get<std::string>("initial.right_rho", format_double(c.initial.left.rho))),
                     parse_double(tree.get<std::string>("initial.right_u", format_double(c.initial.left.u))),
                     parse_double(tree.get<std::string>("initial.right_T", format_double(c.initial.left.T)))};
  c.initial.base = parse_double(tree.get<std::string>("initial.base", "1"));
  c.initial.amplitude = parse_double(tree.get<std::string>("initial.amplitude", "0"));
  c.initial.center = parse_double(tree.get<std::string>("initial.center", "0.5"));
  c.initial.width = parse_double(tree.get<std::string>("initial.width", "1"));

  const auto budget_kind = tree.get<std::string>("particles.budget_kind", "per_unit_density");
  if (budget_kind == "total") {
    c.budget.kind = ParticleBudget::Kind::Total;
  } else if (budget_kind == "per_unit_density") {
    c.budget.kind = ParticleBudget::Kind::PerUnitDensity;
  } else {
    throw ConfigError("unknown particles.budget_kind '" + budget_kind + "'");
  }
  c.budget.value = required_double(tree, "particles.budget");

  try {
    c.bounds.left = boundary_kind_from_string(tree.get<std::string>("boundaries.left", "open"));
    c.bounds.right = boundary_kind_from_string(tree.get<std::string>("boundaries.right", "open"));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  c.t_end = required_double(tree, "run.t_end");
  c.output_times = split_times(tree.get<std::string>("run.output_times", ""));
  c.seed = tree.get<std::uint64_t>("run.seed", 1);
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

double particle_mass(const ScenarioConfig& c) {
  const double dx = c.grid.dx();
  if (c.budget.kind == ParticleBudget::Kind::PerUnitDensity) return dx / c.budget.value;
  double mass = 0.0;
  for (int j = 0; j < c.grid.n_cells; ++j) mass += c.initial.at(c.grid.cell_center(j))(comp::rho) * dx;
  return mass / c.budget.value;
}

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Coupled:
      return "coupled";
    case RunMode::FullDsmc:
      return "full-dsmc";
    case RunMode::EulerOnly:
      return "euler-only";
  }
  return "coupled";
}

RunMode run_mode_from_string(std::string_view name) {
  if (name == "coupled") return RunMode::Coupled;
  if (name == "full-dsmc") return RunMode::FullDsmc;
  if (name == "euler-only") return RunMode::EulerOnly;
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

Simulation make_simulation(const ScenarioConfig& config, RunMode mode, bool plain_dsmc) {
  config.validate();
  Simulation sim;
  const GridSpec& grid = config.grid;
  const int n = grid.n_cells;
  sim.field = ConservedField(grid);
  sim.eps.resize(n);
  for (int j = 0; j < n; ++j) {
    const double x = grid.cell_center(j);
    sim.field.state(j) = config.initial.at(x);
    sim.eps(j) = config.epsilon.at(x);
  }
  sim.particles = ParticleEnsemble(grid, particle_mass(config));
  sim.bounds = config.bounds;
  sim.rng = RngStream(config.seed);
  sim.beta = Eigen::VectorXd::Zero(n);
  sim.options.breakdown.beta_thr = config.beta_thr;
  sim.options.cfl = config.cfl;
  switch (mode) {
    case RunMode::Coupled:
      sim.options.region = RegionPolicy::Dynamic;
      sim.transition = TransitionField::fluid(n, config.buffer_width);
      break;
    case RunMode::EulerOnly:
      sim.options.region = RegionPolicy::PinnedFluid;
      sim.transition = TransitionField::fluid(n, config.buffer_width);
      break;
    case RunMode::FullDsmc:
      sim.options.region = RegionPolicy::PinnedKinetic;
      sim.options.moment_guided = !plain_dsmc;
      sim.transition = TransitionField::kinetic(n, config.buffer_width);
      seed_particles(sim);
      if (plain_dsmc) sim.field = particle_field(sim.particles, sim.transition.h);
      break;
  }
  return sim;
}

SnapshotRecord take_snapshot(const Simulation& sim) {
  SnapshotRecord r;
  const int n = sim.field.size();
  r.time = sim.time;
  r.x.resize(n);
  r.rho.resize(n);
  r.ux.resize(n);
  r.T.resize(n);
  r.h.resize(n);
  r.beta.resize(n);
  r.np.resize(n);
  for (int j = 0; j < n; ++j) {
    r.x[j] = sim.field.grid.cell_center(j);
    const double rho = sim.field.states(comp::rho, j);
    r.rho[j] = rho;
    if (rho > 0.0) {
      const auto p = primitives(sim.field.at(j));
      r.ux[j] = p.u.x();
      r.T[j] = p.theta;
    } else {
      r.ux[j] = 0.0;
      r.T[j] = 0.0;
    }
    r.h[j] = sim.transition.h(j);
    r.beta[j] = sim.beta.size() == n ? sim.beta(j) : 0.0;
    r.np[j] = sim.particles.n_cells() == n ? sim.particles.cell(j).size() : 0;
  }
  r.total_particles = sim.particles.size();
  return r;
}

namespace {

void flush_outputs(const ScenarioConfig& config, const RunOptions& options, const RunResult& result) {
  if (!options.out_dir) return;
  const auto& dir = *options.out_dir;
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < result.snapshots.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "snapshot_%03zu.csv", k);
    write_snapshot(result.snapshots[k], dir / name);
  }
  write_series(result.series, dir / "series.csv");
  std::ofstream(dir / "config.ini") << serialize_config(config);
  write_manifest(config, options, result, dir / "manifest.json");
}

}  // namespace

RunResult run(const ScenarioConfig& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  Simulation sim = make_simulation(config, options.mode, options.plain_dsmc);
  RunResult result;

  std::vector<double> targets = config.output_times;
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  std::size_t next_output = 0;
  auto emit_due = [&] {
    while (next_output < targets.size() && targets[next_output] <= sim.time) {
      result.snapshots.push_back(take_snapshot(sim));
      ++next_output;
    }
  };

  if (options.on_step) options.on_step(sim);
  emit_due();
  try {
    while (sim.time < config.t_end) {
      const double stop = next_output < targets.size() ? std::min(targets[next_output], config.t_end)
                                                       : config.t_end;
      const double cap = stop - sim.time;
      step(sim, cap);
      if (sim.last_dt == cap) sim.time = stop;
      result.series.push_back({sim.step_index, sim.time, sim.last_dt, sim.particles.size()});
      if (options.on_step) options.on_step(sim);
      emit_due();
    }
  } catch (const Error&) {
    result.final_field = sim.field;
    result.steps = sim.step_index;
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    flush_outputs(config, options, result);
    throw;
  }
  result.final_field = sim.field;
  result.steps = sim.step_index;
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  flush_outputs(config, options, result);
  return result;
}

}  // namespace hybrid
