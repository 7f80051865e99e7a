#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "hybrid/core.hpp"
#include "hybrid/rng.hpp"

namespace hybrid {

class DegenerateSample : public Error {
 public:
  using Error::Error;
};

class EmptySource : public Error {
 public:
  using Error::Error;
};

/// Per-cell particle estimates: mass density, mean velocity and mean specific
/// energy (1/N) sum |V|^2 / 2.
struct MomentEstimate {
  double mu0 = 0.0;
  Eigen::Vector3d mu1 = Eigen::Vector3d::Zero();
  double mu2 = 0.0;
  std::size_t count = 0;
};

MomentEstimate estimate_moments(std::span<const Particle> particles, double weight);

/// floor(x) + 1 with probability frac(x), floor(x) otherwise. x >= 0.
std::int64_t stochastic_round(double x, RngStream& rng);

/// Affine map V* = (V - mu1)/c + sigma1 with
/// c^2 = (2 mu2 - |mu1|^2) / (2 sigma2 - |sigma1|^2), so that the sample mean
/// and mean specific energy become sigma1 and sigma2.
///
/// Fewer than two particles: no-op. Vanishing sample variance with a
/// non-vanishing target variance throws DegenerateSample.
void match_velocity_energy(std::span<Particle> particles, const Eigen::Vector3d& sigma1,
                           double sigma2);

/// Discards (without replacement) or replicates (with replacement, replicas
/// relocated uniformly in the cell) a stochastically rounded number of
/// particles so the cell density approaches sigma0. Throws EmptySource when
/// the cell is empty and sigma0 > 0.
void match_density(ParticleEnsemble& ensemble, int j, double sigma0, double h_j, RngStream& rng);

/// Matches cell j to h_j * target: density first, then velocity and energy.
/// Empty cells are seeded from E[target]; cells whose replicas collapsed onto
/// a single velocity are redrawn from E[target] before the affine map.
void match_cell(ParticleEnsemble& ensemble, int j, const ConservedState& target, double h_j,
                RngStream& rng);

/// Appends count particles drawn from E[state] at uniform positions in cell j.
void populate_cell(ParticleEnsemble& ensemble, int j, const ConservedState& state,
                   std::size_t count, RngStream& rng);

}  // namespace hybrid
