#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hybrid/rng.hpp"

namespace hybrid {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonPhysicalState : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Dense state types
// ---------------------------------------------------------------------------

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

/// Conserved triple (rho, rho*u, rho*e) laid out as five components.
template <typename Scalar>
using Conserved = Eigen::Matrix<Scalar, 5, 1>;

using ConservedState = Conserved<double>;

/// Five flux moments <v_x m(v) f> with m(v) = (1, v, |v|^2/2).
using FluxMomentVector = Eigen::Matrix<double, 5, 1>;

/// One column per cell.
using FieldMatrix = Eigen::Matrix<double, 5, Eigen::Dynamic>;

namespace comp {
inline constexpr Eigen::Index rho = 0;
inline constexpr Eigen::Index mom_x = 1;
inline constexpr Eigen::Index mom_y = 2;
inline constexpr Eigen::Index mom_z = 3;
inline constexpr Eigen::Index energy = 4;
}  // namespace comp

/// Adiabatic exponent for a monatomic gas with three translational degrees of freedom.
inline constexpr double kGamma = 5.0 / 3.0;

/// Temperatures in (-kThetaTolerance, 0) are clamped to zero; below that a state is rejected.
inline constexpr double kThetaTolerance = 1e-9;

template <typename Scalar>
struct Primitives {
  Scalar rho;
  Vector3<Scalar> u;
  Scalar theta;
  Scalar e;  // specific total energy
};

template <typename Derived>
auto density(const Eigen::MatrixBase<Derived>& s) {
  return s(comp::rho);
}

template <typename Derived>
auto momentum(const Eigen::MatrixBase<Derived>& s) {
  return s.template segment<3>(comp::mom_x);
}

template <typename Derived>
auto energy(const Eigen::MatrixBase<Derived>& s) {
  return s(comp::energy);
}

/// (rho, u, theta, e) from a conserved state. Throws NonPhysicalState when
/// rho <= 0 or theta < -kThetaTolerance.
template <typename Scalar>
Primitives<Scalar> primitives(const Conserved<Scalar>& s) {
  using std::isfinite;
  const Scalar rho = s(comp::rho);
  if (!(rho > Scalar(0)) || !isfinite(rho)) {
    throw NonPhysicalState("non-positive density " + std::to_string(double(rho)));
  }
  Primitives<Scalar> p;
  p.rho = rho;
  p.u = s.template segment<3>(comp::mom_x) / rho;
  p.e = s(comp::energy) / rho;
  Scalar theta = (Scalar(2) * p.e - p.u.squaredNorm()) / Scalar(3);
  if (theta < Scalar(0)) {
    if (theta < Scalar(-kThetaTolerance)) {
      throw NonPhysicalState("negative temperature " + std::to_string(double(theta)));
    }
    theta = Scalar(0);
  }
  p.theta = theta;
  return p;
}

template <typename Scalar>
Conserved<Scalar> assemble(Scalar rho, const Vector3<Scalar>& u, Scalar theta) {
  Conserved<Scalar> s;
  s(comp::rho) = rho;
  s.template segment<3>(comp::mom_x) = rho * u;
  s(comp::energy) = rho * (Scalar(0.5) * u.squaredNorm() + Scalar(1.5) * theta);
  return s;
}

template <typename Scalar>
Conserved<Scalar> assemble(const Primitives<Scalar>& p) {
  return assemble(p.rho, p.u, p.theta);
}

/// Flux moments of the Maxwellian E[rho, u, theta]:
/// (rho u_x, rho u_x u + p e_x, u_x (rho e + p)) with p = rho theta.
template <typename Scalar>
Conserved<Scalar> maxwellian_flux_moments(Scalar rho, const Vector3<Scalar>& u, Scalar theta) {
  Conserved<Scalar> f;
  const Scalar p = rho * theta;
  const Scalar rho_e = rho * (Scalar(0.5) * u.squaredNorm() + Scalar(1.5) * theta);
  f(comp::rho) = rho * u.x();
  f.template segment<3>(comp::mom_x) = rho * u.x() * u;
  f(comp::mom_x) += p;
  f(comp::energy) = u.x() * (rho_e + p);
  return f;
}

/// Hydrodynamic flux F(rho) of a conserved state.
template <typename Scalar>
Conserved<Scalar> euler_flux(const Conserved<Scalar>& s) {
  const auto p = primitives(s);
  return maxwellian_flux_moments(p.rho, p.u, p.theta);
}

// ---------------------------------------------------------------------------
// Grid and boundaries
// ---------------------------------------------------------------------------

struct GridSpec {
  double x_min = 0.0;
  double x_max = 1.0;
  int n_cells = 1;

  double dx() const { return (x_max - x_min) / n_cells; }
  double length() const { return x_max - x_min; }
  double cell_left(int j) const { return x_min + j * dx(); }
  double cell_center(int j) const { return x_min + (j + 0.5) * dx(); }

  /// Half-open binning [x_j, x_{j+1}); x == x_max maps to the last cell.
  int cell_index(double x) const;

  /// Throws Error when dx <= 0.
  void validate() const;
};

enum class BoundaryKind { Open, Reflecting, Periodic };

struct Boundaries {
  BoundaryKind left = BoundaryKind::Open;
  BoundaryKind right = BoundaryKind::Open;
};

std::string to_string(BoundaryKind kind);
BoundaryKind boundary_kind_from_string(const std::string& name);

// ---------------------------------------------------------------------------
// Fields and particles
// ---------------------------------------------------------------------------

struct ConservedField {
  GridSpec grid;
  FieldMatrix states;

  ConservedField() = default;
  explicit ConservedField(const GridSpec& g) : grid(g), states(FieldMatrix::Zero(5, g.n_cells)) {}

  int size() const { return static_cast<int>(states.cols()); }
  auto state(int j) { return states.col(j); }
  auto state(int j) const { return states.col(j); }
  ConservedState at(int j) const { return states.col(j); }
};

struct Particle {
  double x = 0.0;
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
};

/// Particles bucketed by cell. Every particle of cell j carries the same
/// effective mass h_j * m_p; the weight is implied by the transition field and
/// never stored per particle.
class ParticleEnsemble {
 public:
  ParticleEnsemble() = default;
  ParticleEnsemble(const GridSpec& grid, double m_p);

  const GridSpec& grid() const { return grid_; }
  double m_p() const { return m_p_; }
  int n_cells() const { return grid_.n_cells; }

  std::vector<Particle>& cell(int j) { return cells_[static_cast<std::size_t>(j)]; }
  const std::vector<Particle>& cell(int j) const { return cells_[static_cast<std::size_t>(j)]; }

  std::size_t size() const;
  bool empty() const { return size() == 0; }

  /// Appends to the cell containing p.x; p.x must lie inside the domain.
  void add(const Particle& p);

  /// Moves every particle out, leaving the cells empty.
  std::vector<Particle> take_all();

  void clear();

  /// True when each particle sits in the bucket matching its position.
  bool binning_consistent() const;

 private:
  GridSpec grid_;
  double m_p_ = 1.0;
  std::vector<std::vector<Particle>> cells_;
};

// ---------------------------------------------------------------------------
// Maxwellian sampling and particle moments
// ---------------------------------------------------------------------------

/// i.i.d. velocities from the Gaussian with mean u and per-component variance theta.
std::vector<Eigen::Vector3d> sample_maxwellian(double rho, const Eigen::Vector3d& u, double theta,
                                               std::size_t count, RngStream& rng);

/// Conserved moments of cell j: weights h_j m_p / dx per particle.
ConservedState cell_moments(const ParticleEnsemble& ensemble, const Eigen::VectorXd& h, int j);

/// Same, for a bare velocity list with a given per-particle mass density weight.
ConservedState velocity_moments(std::span<const Particle> particles, double weight);

/// <v_x m(v) f_K> of cell j.
FluxMomentVector particle_flux_moments(const ParticleEnsemble& ensemble, const Eigen::VectorXd& h,
                                       int j);

/// <v_x m(v) g_K> of cell j with g_K = f_K - E[rho_K].
FluxMomentVector g_flux_moments(const ParticleEnsemble& ensemble, const Eigen::VectorXd& h, int j);

}  // namespace hybrid
