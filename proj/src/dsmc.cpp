#include "hybrid/dsmc.hpp"

#include <cmath>

#include "hybrid/guide.hpp"

namespace hybrid {

bool advance_particle(Particle& p, double dt, const GridSpec& grid, const Boundaries& bounds) {
  p.x += p.v.x() * dt;
  const double length = grid.length();
  // A particle can cross the domain several times only for dt far beyond the CFL limit.
  for (int guard = 0; guard < 64; ++guard) {
    if (p.x < grid.x_min) {
      switch (bounds.left) {
        case BoundaryKind::Open:
          return false;
        case BoundaryKind::Reflecting:
          p.x = 2.0 * grid.x_min - p.x;
          p.v.x() = -p.v.x();
          break;
        case BoundaryKind::Periodic:
          p.x += length;
          break;
      }
    } else if (p.x > grid.x_max) {
      switch (bounds.right) {
        case BoundaryKind::Open:
          return false;
        case BoundaryKind::Reflecting:
          p.x = 2.0 * grid.x_max - p.x;
          p.v.x() = -p.v.x();
          break;
        case BoundaryKind::Periodic:
          p.x -= length;
          break;
      }
    } else {
      return true;
    }
  }
  return false;
}

void transport(ParticleEnsemble& ensemble, double dt, const Boundaries& bounds) {
  if (dt == 0.0) return;
  const GridSpec& grid = ensemble.grid();
  std::vector<Particle> moved;
  moved.reserve(ensemble.size());
  for (int j = 0; j < ensemble.n_cells(); ++j) {
    auto& cell = ensemble.cell(j);
    // Particles that stay put are compacted in place; the rest are re-binned below.
    std::size_t keep = 0;
    for (auto& p : cell) {
      if (!advance_particle(p, dt, grid, bounds)) continue;
      if (grid.cell_index(p.x) == j) {
        cell[keep++] = p;
      } else {
        moved.push_back(p);
      }
    }
    cell.resize(keep);
  }
  for (const auto& p : moved) ensemble.add(p);
}

std::size_t rescale_weights(ParticleEnsemble& ensemble, const Eigen::VectorXd& h_new) {
  std::size_t removed = 0;
  for (int j = 0; j < ensemble.n_cells(); ++j) {
    if (h_new(j) <= 0.0) {
      removed += ensemble.cell(j).size();
      ensemble.cell(j).clear();
    }
  }
  return removed;
}

namespace {

/// Samples one ghost band [x_left, x_left + dx) with state `ghost` and keeps
/// the survivors that land in cells with h > 0.
std::size_t inject_band(ParticleEnsemble& ensemble, double x_left, const ConservedState& ghost,
                        const Eigen::VectorXd& h, double dt, const Boundaries& bounds,
                        RngStream& rng) {
  const GridSpec& grid = ensemble.grid();
  const double dx = grid.dx();
  if (!(ghost(comp::rho) > 0.0)) return 0;
  const auto prim = primitives(ghost);
  const auto n = stochastic_round(prim.rho * dx / ensemble.m_p(), rng);
  const auto velocities = sample_maxwellian(prim.rho, prim.u, prim.theta,
                                            static_cast<std::size_t>(n), rng);
  std::size_t added = 0;
  for (const auto& v : velocities) {
    Particle p;
    p.x = x_left + rng.uniform() * dx;
    p.v = v;
    const bool starts_inside = p.x >= grid.x_min && p.x <= grid.x_max;
    if (starts_inside) {
      if (!advance_particle(p, dt, grid, bounds)) continue;
    } else {
      // Ghost band beyond an open end: plain flight, keep only what enters.
      p.x += p.v.x() * dt;
      if (p.x < grid.x_min || p.x > grid.x_max) continue;
    }
    const int cell = grid.cell_index(p.x);
    if (h(cell) > 0.0) {
      ensemble.add(p);
      ++added;
    }
  }
  return added;
}

}  // namespace

std::size_t inject_reservoir(ParticleEnsemble& ensemble, const ConservedField& fluid,
                             const Eigen::VectorXd& h, double dt, const Boundaries& bounds,
                             RngStream& rng) {
  const GridSpec& grid = ensemble.grid();
  const int n = grid.n_cells;
  std::size_t added = 0;
  for (int j = 0; j < n; ++j) {
    if (h(j) > 0.0) continue;
    const bool left_kinetic = j > 0 && h(j - 1) > 0.0;
    const bool right_kinetic = j + 1 < n && h(j + 1) > 0.0;
    if (!left_kinetic && !right_kinetic) continue;
    RngStream band = rng.substream(static_cast<std::uint64_t>(j));
    added += inject_band(ensemble, grid.cell_left(j), fluid.at(j), h, dt, bounds, band);
  }
  // Open domain ends next to a kinetic cell see a zero-gradient ghost.
  if (bounds.left == BoundaryKind::Open && h(0) > 0.0) {
    RngStream band = rng.substream(static_cast<std::uint64_t>(n));
    added += inject_band(ensemble, grid.x_min - grid.dx(), fluid.at(0), h, dt, bounds, band);
  }
  if (bounds.right == BoundaryKind::Open && h(n - 1) > 0.0) {
    RngStream band = rng.substream(static_cast<std::uint64_t>(n + 1));
    added += inject_band(ensemble, grid.x_max, fluid.at(n - 1), h, dt, bounds, band);
  }
  return added;
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> binary_collision(const Eigen::Vector3d& v,
                                                             const Eigen::Vector3d& v_star,
                                                             const Eigen::Vector3d& n) {
  const Eigen::Vector3d center = 0.5 * (v + v_star);
  const Eigen::Vector3d half_q = 0.5 * (v - v_star).norm() * n;
  return {center + half_q, center - half_q};
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> binary_collision(const Eigen::Vector3d& v,
                                                             const Eigen::Vector3d& v_star,
                                                             RngStream& rng) {
  return binary_collision(v, v_star, rng.unit_vector());
}

void collide_cell(ParticleEnsemble& ensemble, int j, const ConservedState& fluid_remainder,
                  double h_j, const CollisionParams& params, double dt, RngStream& rng) {
  auto& cell = ensemble.cell(j);
  if (cell.empty() || h_j <= 0.0 || dt <= 0.0) return;
  double p = h_j * params.mu * dt / params.epsilon;
  if (p > 1.0 + 1e-12) {
    throw InvalidProbability("collision probability " + std::to_string(p) + " exceeds 1 in cell " +
                             std::to_string(j));
  }
  p = std::min(p, 1.0);

  // The fluid reservoir is virtual: its members are i.i.d. Maxwellian, so a
  // partner drawn from it is sampled on demand.
  std::uint64_t n_reservoir = 0;
  double sd = 0.0;
  Eigen::Vector3d u_res = Eigen::Vector3d::Zero();
  if (fluid_remainder(comp::rho) > 0.0) {
    const auto prim = primitives(fluid_remainder);
    const double count = prim.rho * ensemble.grid().dx() / (h_j * ensemble.m_p());
    n_reservoir = static_cast<std::uint64_t>(stochastic_round(count, rng));
    sd = std::sqrt(prim.theta);
    u_res = prim.u;
  }

  std::vector<Eigen::Vector3d> before(cell.size());
  for (std::size_t i = 0; i < cell.size(); ++i) before[i] = cell[i].v;
  const std::uint64_t n_real = cell.size();
  const std::uint64_t pool = n_real + n_reservoir;
  if (pool < 2) return;

  for (std::size_t i = 0; i < cell.size(); ++i) {
    if (rng.uniform() >= p) continue;
    std::uint64_t k = rng.uniform_index(pool - 1);
    if (k >= i) ++k;  // skip self
    Eigen::Vector3d partner;
    if (k < n_real) {
      partner = before[k];
    } else {
      partner = u_res + sd * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    }
    cell[i].v = binary_collision(before[i], partner, rng).first;
  }
}

}  // namespace hybrid
