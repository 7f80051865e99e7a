#include "hybrid/guide.hpp"

#include <algorithm>
#include <cmath>

namespace hybrid {

namespace {
constexpr double kVarianceFloor = 1e-14;
}

MomentEstimate estimate_moments(std::span<const Particle> particles, double weight) {
  MomentEstimate m;
  m.count = particles.size();
  if (particles.empty()) return m;
  for (const auto& p : particles) {
    m.mu1 += p.v;
    m.mu2 += 0.5 * p.v.squaredNorm();
  }
  const double n = static_cast<double>(particles.size());
  m.mu0 = weight * n;
  m.mu1 /= n;
  m.mu2 /= n;
  return m;
}

std::int64_t stochastic_round(double x, RngStream& rng) {
  const double fl = std::floor(x);
  const double frac = x - fl;
  auto n = static_cast<std::int64_t>(fl);
  if (frac > 0.0 && rng.uniform() < frac) ++n;
  return n;
}

namespace {

struct SampleStats {
  Eigen::Vector3d mean;
  double variance;  // summed over the three components
};

SampleStats sample_stats(std::span<const Particle> particles) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& p : particles) sum += p.v;
  const double n = static_cast<double>(particles.size());
  SampleStats s{sum / n, 0.0};
  for (const auto& p : particles) s.variance += (p.v - s.mean).squaredNorm();
  s.variance /= n;
  return s;
}

}  // namespace

void match_velocity_energy(std::span<Particle> particles, const Eigen::Vector3d& sigma1,
                           double sigma2) {
  if (particles.size() < 2) return;
  // Variances about the mean avoid the cancellation in 2 mu2 - |mu1|^2.
  const auto before = sample_stats(particles);
  const double target_var = std::max(2.0 * sigma2 - sigma1.squaredNorm(), 0.0);

  if (before.variance <= kVarianceFloor) {
    if (target_var > kVarianceFloor) {
      throw DegenerateSample("cannot stretch a zero-variance sample to a positive target variance");
    }
    for (auto& p : particles) p.v = p.v - before.mean + sigma1;
    return;
  }
  const double scale = std::sqrt(target_var / before.variance);  // 1/c
  for (auto& p : particles) p.v = (p.v - before.mean) * scale + sigma1;

  // One corrective pass removes the rounding left by the first map.
  const auto after = sample_stats(particles);
  const double rescale = after.variance > 0.0 ? std::sqrt(target_var / after.variance) : 1.0;
  for (auto& p : particles) p.v = (p.v - after.mean) * rescale + sigma1;
}

void populate_cell(ParticleEnsemble& ensemble, int j, const ConservedState& state,
                   std::size_t count, RngStream& rng) {
  if (count == 0) return;
  const auto prim = primitives(state);
  const auto velocities = sample_maxwellian(prim.rho, prim.u, prim.theta, count, rng);
  const GridSpec& grid = ensemble.grid();
  auto& cell = ensemble.cell(j);
  cell.reserve(cell.size() + count);
  for (const auto& v : velocities) {
    Particle p;
    p.x = grid.cell_left(j) + rng.uniform() * grid.dx();
    if (grid.cell_index(p.x) != j) p.x = grid.cell_center(j);
    p.v = v;
    cell.push_back(p);
  }
}

void match_density(ParticleEnsemble& ensemble, int j, double sigma0, double h_j, RngStream& rng) {
  auto& cell = ensemble.cell(j);
  const double dx = ensemble.grid().dx();
  const double particle_density = h_j * ensemble.m_p() / dx;  // mass density carried by one particle
  const double mu0 = particle_density * static_cast<double>(cell.size());
  if (cell.empty()) {
    if (sigma0 > 0.0) throw EmptySource("cell " + std::to_string(j) + " has no particles to replicate");
    return;
  }
  if (mu0 > sigma0) {
    auto n_remove = stochastic_round((mu0 - sigma0) / particle_density, rng);
    n_remove = std::min<std::int64_t>(n_remove, static_cast<std::int64_t>(cell.size()));
    // Partial Fisher-Yates: move the victims to the tail, then drop them.
    std::size_t n = cell.size();
    for (std::int64_t k = 0; k < n_remove; ++k) {
      const std::size_t pick = rng.uniform_index(n);
      std::swap(cell[pick], cell[n - 1]);
      --n;
    }
    cell.resize(n);
  } else if (mu0 < sigma0) {
    const auto n_add = stochastic_round((sigma0 - mu0) / particle_density, rng);
    const std::size_t source_count = cell.size();
    const GridSpec& grid = ensemble.grid();
    cell.reserve(source_count + static_cast<std::size_t>(n_add));
    for (std::int64_t k = 0; k < n_add; ++k) {
      Particle copy = cell[rng.uniform_index(source_count)];
      copy.x = grid.cell_left(j) + rng.uniform() * dx;
      if (grid.cell_index(copy.x) != j) copy.x = grid.cell_center(j);
      cell.push_back(copy);
    }
  }
}

void match_cell(ParticleEnsemble& ensemble, int j, const ConservedState& target, double h_j,
                RngStream& rng) {
  if (h_j <= 0.0) return;
  const auto prim = primitives(target);
  const double sigma0 = h_j * prim.rho;
  auto& cell = ensemble.cell(j);
  if (cell.empty()) {
    const double n = sigma0 * ensemble.grid().dx() / (h_j * ensemble.m_p());
    populate_cell(ensemble, j, target, static_cast<std::size_t>(stochastic_round(n, rng)), rng);
  } else {
    match_density(ensemble, j, sigma0, h_j, rng);
  }
  try {
    match_velocity_energy(cell, prim.u, prim.e);
  } catch (const DegenerateSample&) {
    const std::size_t n = cell.size();
    cell.clear();
    populate_cell(ensemble, j, target, n, rng);
    match_velocity_energy(cell, prim.u, prim.e);
  }
}

}  // namespace hybrid
