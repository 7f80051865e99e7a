#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "hybrid/core.hpp"

namespace hybrid {

/// Van Leer limiter (|chi| + chi) / (1 + chi); zero for chi <= 0 and for
/// non-finite input.
template <typename Scalar>
Scalar van_leer(Scalar chi) {
  using std::isfinite;
  if (!isfinite(chi) || !(chi > Scalar(0))) return Scalar(0);
  return (chi + chi) / (Scalar(1) + chi);
}

/// Limiter degraded to first order where the cell carries particles.
template <typename Scalar>
Scalar modified_limiter(Scalar chi, Scalar h) {
  return van_leer(chi) * (Scalar(1) - h);
}

/// Limited increment den * phi_eps(num / den). A zero denominator yields zero;
/// a one-sided infinite ratio saturates the limiter at 2.
template <typename Scalar>
Scalar limited_increment(Scalar num, Scalar den, Scalar h) {
  if (den == Scalar(0)) return Scalar(0);
  const Scalar chi = num / den;
  using std::isinf;
  const Scalar phi = isinf(chi) ? (chi > Scalar(0) ? Scalar(2) : Scalar(0)) : van_leer(chi);
  return den * (phi * (Scalar(1) - h));
}

/// A field padded with two ghost cells per side plus its pointwise fluxes.
/// Column c of `states` holds interior cell c - 2.
struct GhostedField {
  FieldMatrix states;
  FieldMatrix fluxes;
  Eigen::VectorXd h;  // padded with the same ghost rule

  int interior_size() const { return static_cast<int>(states.cols()) - 4; }
  auto state(int j) const { return states.col(j + 2); }
  auto flux(int j) const { return fluxes.col(j + 2); }
  double h_at(int j) const { return h(j + 2); }
};

/// Ghost states: zero gradient for open ends, mirrored with u_x negated for
/// walls, wrap-around for periodic ends.
GhostedField make_ghosted(const ConservedField& field, const Eigen::VectorXd& h,
                          const Boundaries& bounds);

/// Ghosts for non-equilibrium flux moments (odd-in-v_x components change
/// sign at a wall).
FieldMatrix ghost_kinetic_fluxes(const FieldMatrix& gk, const Boundaries& bounds);

/// Global dissipation speed max_j |u_x| + sqrt(gamma theta).
double max_eigenvalue(const ConservedField& field);

/// Numerical flux at interface j+1/2 (j = -1 .. n-1).
FluxMomentVector muscl_lf_flux(const GhostedField& g, int j, double A);

/// Centred average of the cell non-equilibrium flux moments.
inline FluxMomentVector kinetic_flux(const FluxMomentVector& gk_j, const FluxMomentVector& gk_j1) {
  return 0.5 * (gk_j + gk_j1);
}

/// Forward-Euler conservative update with hydrodynamic and kinetic fluxes.
/// `gk` holds one 5-vector per cell (zero where no particles). Throws
/// NonPhysicalState when an updated cell loses positivity.
ConservedField fluid_step(const ConservedField& field, const FieldMatrix& gk, double dt,
                          const Eigen::VectorXd& h, const Boundaries& bounds);

/// Throws NonPhysicalState naming the first offending cell.
void check_physical(const ConservedField& field);

}  // namespace hybrid
