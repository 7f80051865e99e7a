#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Core>

#include "hybrid/core.hpp"
#include "hybrid/dsmc.hpp"
#include "hybrid/rng.hpp"

namespace hybrid {

class ZeroDt : public Error {
 public:
  using Error::Error;
};

/// A solver error annotated with the step at which it happened.
class StepFailure : public Error {
 public:
  StepFailure(std::int64_t step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

/// Per-cell blending weight h in [0, 1]: 1 on kinetic cells, a linear ramp
/// over `buffer_width` cells on each side, 0 in the fluid region.
struct TransitionField {
  Eigen::VectorXd h;
  Eigen::Array<bool, Eigen::Dynamic, 1> kinetic_mask;
  int buffer_width = 0;

  static TransitionField fluid(int n_cells, int buffer_width);
  static TransitionField kinetic(int n_cells, int buffer_width);

  int size() const { return static_cast<int>(h.size()); }
};

struct BreakdownParams {
  double beta_thr = 2.5e-2;
  /// Gradients with magnitude at or below this value count as zero.
  double grad_floor = 1e-12;
  /// A kinetic cell is released only once beta drops to release_factor * beta_thr.
  double release_factor = 0.5;
};

/// L_j = min over w in {rho, rho u_x, rho e} of |w| / |dw/dx|, using central
/// differences (one-sided at the ends). Uniform fields give +infinity.
double reference_length(const ConservedField& field, int j, double grad_floor = 1e-12);

/// beta_j = max(0, 1 - rho_j dt / eps_j) * dx / L_j.
Eigen::VectorXd breakdown_indicator(const ConservedField& field, double dt,
                                    const Eigen::VectorXd& eps, double grad_floor = 1e-12);

/// Mean free path k T / (sqrt(2) pi p sigma_c^2).
double mean_free_path(double k_const, double temperature, double pressure, double sigma_c);

struct KnudsenDiagnostic {
  double mean_free_path = 0.0;
  double reference_length = 0.0;
  double knudsen = 0.0;
  /// Local Knudsen number below 0.05.
  bool fluid_valid = true;
};

/// Gradient-length local Knudsen number of cell j (T = theta, p = rho theta).
KnudsenDiagnostic local_knudsen(const ConservedField& field, int j, double sigma_c, double k_const,
                                double grad_floor = 1e-12);

/// h built from a kinetic mask: h_j = max_k max(0, 1 - |j - k| / N_b).
TransitionField transition_from_mask(const Eigen::Array<bool, Eigen::Dynamic, 1>& mask,
                                     int buffer_width);

/// Thresholds beta with hysteresis and rebuilds the ramped h field.
TransitionField update_transition(const Eigen::VectorXd& beta, const TransitionField& prev,
                                  const BreakdownParams& params);

/// Seeds every cell that gained h > 0 while holding no particles with
/// round(rho_j dx / m_p) particles drawn from the local fluid Maxwellian.
std::size_t populate_new_cells(ParticleEnsemble& ensemble, const ConservedField& field,
                               const Eigen::VectorXd& h, RngStream& rng);

/// dt = min(cfl dx / v_max, cfl dx / A_max, min_j eps_j / rho_j). Throws ZeroDt below 1e-14.
double compute_dt(const ConservedField& field, const ParticleEnsemble& particles,
                  const Eigen::VectorXd& eps, double cfl = 1.0);

enum class RegionPolicy {
  Dynamic,        ///< h follows the breakdown indicator
  PinnedFluid,    ///< h == 0, pure finite-volume solver
  PinnedKinetic,  ///< h == 1, particles everywhere
};

struct StepOptions {
  RegionPolicy region = RegionPolicy::Dynamic;
  /// Moment solver drives the particles (guided). When false and the region is
  /// pinned kinetic, the run is plain DSMC and the field is the particle moments.
  bool moment_guided = true;
  /// Courant number applied to the two transport limits of the time step.
  double cfl = 0.5;
  BreakdownParams breakdown;
};

struct Simulation {
  ConservedField field;
  ParticleEnsemble particles;
  TransitionField transition;
  Eigen::VectorXd eps;
  Eigen::VectorXd beta;
  Boundaries bounds;
  StepOptions options;
  RngStream rng;
  double time = 0.0;
  std::int64_t step_index = 0;
  double last_dt = 0.0;
};

/// Fills the cells with h > 0 from the field (used at start-up).
void seed_particles(Simulation& sim);

/// Advances by one step. dt is the stable step clipped to dt_cap.
void step(Simulation& sim, double dt_cap = std::numeric_limits<double>::infinity());

/// Per-cell density-weighted particle moments, used as the field in plain DSMC.
ConservedField particle_field(const ParticleEnsemble& particles, const Eigen::VectorXd& h);

}  // namespace hybrid
