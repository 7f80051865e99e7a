#pragma once

#include <utility>

#include <Eigen/Core>

#include "hybrid/core.hpp"
#include "hybrid/rng.hpp"

namespace hybrid {

class InvalidProbability : public Error {
 public:
  using Error::Error;
};

/// A domain end seen by the particles.
struct WallBoundary {
  double position = 0.0;
  BoundaryKind kind = BoundaryKind::Open;
};

/// Relaxation parameter and collision rate of one cell (mu = rho for Maxwell molecules).
struct CollisionParams {
  double epsilon = 1.0;
  double mu = 1.0;
};

/// Free flight of a single particle with wall handling. Returns false when the
/// particle left through an open end.
bool advance_particle(Particle& p, double dt, const GridSpec& grid, const Boundaries& bounds);

/// Moves every particle by v_x dt, applies specular folding, periodic wrap or
/// open-end deletion, and re-bins. dt == 0 leaves the ensemble untouched.
void transport(ParticleEnsemble& ensemble, double dt, const Boundaries& bounds);

/// Removes the particles of every cell with h == 0 (they carry no mass).
/// Returns the number removed.
std::size_t rescale_weights(ParticleEnsemble& ensemble, const Eigen::VectorXd& h_new);

/// Samples equilibrium particles in the one-cell band on the fluid side of
/// each buffer edge (and beyond open domain ends touching a cell with h > 0),
/// lets them fly for dt, and keeps those that land in cells with h > 0.
/// Returns the number of particles added.
std::size_t inject_reservoir(ParticleEnsemble& ensemble, const ConservedField& fluid,
                             const Eigen::VectorXd& h, double dt, const Boundaries& bounds,
                             RngStream& rng);

/// Isotropic binary collision: v' = (v + v* + |q| n)/2, v*' = (v + v* - |q| n)/2.
std::pair<Eigen::Vector3d, Eigen::Vector3d> binary_collision(const Eigen::Vector3d& v,
                                                             const Eigen::Vector3d& v_star,
                                                             RngStream& rng);

/// Same, with a prescribed scattering direction.
std::pair<Eigen::Vector3d, Eigen::Vector3d> binary_collision(const Eigen::Vector3d& v,
                                                             const Eigen::Vector3d& v_star,
                                                             const Eigen::Vector3d& n);

/// One forward-Euler (Nanbu) collision step in cell j.
///
/// Each real particle collides with probability p = h_j mu dt / eps. Partners
/// are drawn uniformly from the real particles and a virtual reservoir sampled
/// from E[fluid_remainder]; the reservoir carries the same per-particle mass as
/// the real particles so the pick is mass-proportional. Only the real particle
/// is updated. Throws InvalidProbability when p > 1.
void collide_cell(ParticleEnsemble& ensemble, int j, const ConservedState& fluid_remainder,
                  double h_j, const CollisionParams& params, double dt, RngStream& rng);

}  // namespace hybrid
