#include "hybrid/core.hpp"

#include <algorithm>

namespace hybrid {

int GridSpec::cell_index(double x) const {
  const int j = static_cast<int>(std::floor((x - x_min) / dx()));
  return std::clamp(j, 0, n_cells - 1);
}

void GridSpec::validate() const {
  if (n_cells <= 0 || !(x_max > x_min)) {
    throw Error("grid requires n_cells > 0 and x_max > x_min");
  }
}

std::string to_string(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::Open:
      return "open";
    case BoundaryKind::Reflecting:
      return "reflecting";
    case BoundaryKind::Periodic:
      return "periodic";
  }
  return "open";
}

BoundaryKind boundary_kind_from_string(const std::string& name) {
  if (name == "open" || name == "neumann") return BoundaryKind::Open;
  if (name == "reflecting" || name == "wall") return BoundaryKind::Reflecting;
  if (name == "periodic") return BoundaryKind::Periodic;
  throw Error("unknown boundary kind '" + name + "'");
}

ParticleEnsemble::ParticleEnsemble(const GridSpec& grid, double m_p)
    : grid_(grid), m_p_(m_p), cells_(static_cast<std::size_t>(grid.n_cells)) {
  grid_.validate();
  if (!(m_p > 0.0)) throw Error("particle mass must be positive");
}

std::size_t ParticleEnsemble::size() const {
  std::size_t n = 0;
  for (const auto& c : cells_) n += c.size();
  return n;
}

void ParticleEnsemble::add(const Particle& p) { cell(grid_.cell_index(p.x)).push_back(p); }

std::vector<Particle> ParticleEnsemble::take_all() {
  std::vector<Particle> all;
  all.reserve(size());
  for (auto& c : cells_) {
    all.insert(all.end(), c.begin(), c.end());
    c.clear();
  }
  return all;
}

void ParticleEnsemble::clear() {
  for (auto& c : cells_) c.clear();
}

bool ParticleEnsemble::binning_consistent() const {
  for (int j = 0; j < n_cells(); ++j) {
    for (const auto& p : cell(j)) {
      if (p.x < grid_.x_min || p.x > grid_.x_max || grid_.cell_index(p.x) != j) return false;
    }
  }
  return true;
}

std::vector<Eigen::Vector3d> sample_maxwellian(double /*rho*/, const Eigen::Vector3d& u,
                                               double theta, std::size_t count, RngStream& rng) {
  std::vector<Eigen::Vector3d> out(count, u);
  if (theta <= 0.0) return out;
  const double s = std::sqrt(theta);
  for (auto& v : out) {
    v.x() += s * rng.normal();
    v.y() += s * rng.normal();
    v.z() += s * rng.normal();
  }
  return out;
}

ConservedState velocity_moments(std::span<const Particle> particles, double weight) {
  ConservedState m = ConservedState::Zero();
  for (const auto& p : particles) {
    m(comp::rho) += 1.0;
    m.segment<3>(comp::mom_x) += p.v;
    m(comp::energy) += 0.5 * p.v.squaredNorm();
  }
  return weight * m;
}

ConservedState cell_moments(const ParticleEnsemble& ensemble, const Eigen::VectorXd& h, int j) {
  const double weight = h(j) * ensemble.m_p() / ensemble.grid().dx();
  return velocity_moments(ensemble.cell(j), weight);
}

FluxMomentVector particle_flux_moments(const ParticleEnsemble& ensemble, const Eigen::VectorXd& h,
                                       int j) {
  FluxMomentVector f = FluxMomentVector::Zero();
  for (const auto& p : ensemble.cell(j)) {
    const double vx = p.v.x();
    f(comp::rho) += vx;
    f.segment<3>(comp::mom_x) += vx * p.v;
    f(comp::energy) += 0.5 * vx * p.v.squaredNorm();
  }
  return (h(j) * ensemble.m_p() / ensemble.grid().dx()) * f;
}

FluxMomentVector g_flux_moments(const ParticleEnsemble& ensemble, const Eigen::VectorXd& h, int j) {
  if (ensemble.cell(j).empty() || h(j) <= 0.0) return FluxMomentVector::Zero();
  const ConservedState kinetic = cell_moments(ensemble, h, j);
  const auto p = primitives(kinetic);
  return particle_flux_moments(ensemble, h, j) - maxwellian_flux_moments(p.rho, p.u, p.theta);
}

}  // namespace hybrid
