#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "hybrid/core.hpp"
#include "hybrid/coupling.hpp"

namespace hybrid {

class UnknownScenario : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct PrimitiveState {
  double rho = 1.0;
  double u = 0.0;
  double T = 1.0;

  bool operator==(const PrimitiveState&) const = default;
};

/// Initial data: piecewise constant (left state for x <= split), or the
/// symmetric profile rho = base + amplitude * sqrt((x - center)^2 / width)
/// with u and T taken from `left`.
struct InitialData {
  enum class Kind { Piecewise, RootProfile };
  Kind kind = Kind::Piecewise;
  double split = 0.0;
  PrimitiveState left;
  PrimitiveState right;
  double base = 1.0;
  double amplitude = 0.0;
  double center = 0.5;
  double width = 1.0;

  ConservedState at(double x) const;
  bool operator==(const InitialData&) const = default;
};

/// Relaxation parameter: `left` for x < split, `right` otherwise.
struct EpsilonSpec {
  double left = 1e-2;
  double right = 1e-2;
  double split = 0.0;

  double at(double x) const { return x < split ? left : right; }
  bool operator==(const EpsilonSpec&) const = default;
};

struct ParticleBudget {
  /// PerUnitDensity: `value` particles per cell at rho = 1. Total: `value`
  /// particles for the whole initial mass.
  enum class Kind { PerUnitDensity, Total };
  Kind kind = Kind::PerUnitDensity;
  double value = 400.0;

  bool operator==(const ParticleBudget&) const = default;
};

struct ScenarioConfig {
  std::string name;
  GridSpec grid;
  EpsilonSpec epsilon;
  InitialData initial;
  ParticleBudget budget;
  int buffer_width = 10;
  double beta_thr = 2.5e-2;
  /// Courant number on the transport limits of dt.
  double cfl = 0.5;
  Boundaries bounds;
  double t_end = 0.1;
  std::vector<double> output_times;
  std::uint64_t seed = 1;

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
  bool operator==(const ScenarioConfig& other) const;
};

/// "two-freq", "unsteady-shock" or "sod". `eps` selects the variant of the
/// single-epsilon scenarios (buffer width and particle budget follow it).
ScenarioConfig builtin_scenario(std::string_view name, std::optional<double> eps = std::nullopt);

/// Flat key=value text with [section] headers and a leading schema=1.
std::string serialize_config(const ScenarioConfig& config);
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Reference particle mass implied by the budget.
double particle_mass(const ScenarioConfig& config);

enum class RunMode { Coupled, FullDsmc, EulerOnly };

std::string to_string(RunMode mode);
RunMode run_mode_from_string(std::string_view name);

struct SnapshotRecord {
  double time = 0.0;
  std::vector<double> x;
  std::vector<double> rho;
  std::vector<double> ux;
  std::vector<double> T;
  std::vector<double> h;
  std::vector<double> beta;
  std::vector<std::size_t> np;
  std::size_t total_particles = 0;

  std::size_t n_cells() const { return x.size(); }
};

struct SeriesEntry {
  std::int64_t step = 0;
  double time = 0.0;
  double dt = 0.0;
  std::size_t total_particles = 0;
};

struct RunOptions {
  RunMode mode = RunMode::Coupled;
  /// Full-DSMC only: plain DSMC (field = particle moments) instead of moment-guided particles.
  bool plain_dsmc = false;
  std::optional<std::filesystem::path> out_dir;
  /// Called after every step (and once before the first).
  std::function<void(const Simulation&)> on_step;
};

struct RunResult {
  std::vector<SnapshotRecord> snapshots;
  std::vector<SeriesEntry> series;
  ConservedField final_field;
  double wall_seconds = 0.0;
  std::int64_t steps = 0;
};

/// Initial simulation state for a config and mode.
Simulation make_simulation(const ScenarioConfig& config, RunMode mode, bool plain_dsmc = false);

SnapshotRecord take_snapshot(const Simulation& sim);

/// Steps to t_end, landing exactly on each output time. On a solver error
/// the partial outputs are written before the exception propagates.
RunResult run(const ScenarioConfig& config, const RunOptions& options);

// CSV and manifest output.
void write_snapshot(const SnapshotRecord& record, const std::filesystem::path& path);
void write_series(const std::vector<SeriesEntry>& series, const std::filesystem::path& path);
SnapshotRecord read_snapshot(const std::filesystem::path& path);
std::vector<SeriesEntry> read_series(const std::filesystem::path& path);
void write_manifest(const ScenarioConfig& config, const RunOptions& options,
                    const RunResult& result, const std::filesystem::path& path);

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace hybrid
