#include "hybrid/euler.hpp"

#include <algorithm>
#include <string>

namespace hybrid {

namespace {

ConservedState mirror(ConservedState s) {
  s(comp::mom_x) = -s(comp::mom_x);
  return s;
}

/// Odd powers of v_x flip sign under v_x -> -v_x; only the x-momentum flux is even.
FluxMomentVector mirror_flux(FluxMomentVector f) {
  f(comp::rho) = -f(comp::rho);
  f(comp::mom_y) = -f(comp::mom_y);
  f(comp::mom_z) = -f(comp::mom_z);
  f(comp::energy) = -f(comp::energy);
  return f;
}

template <typename Matrix, typename Mirror>
Matrix pad(const Matrix& interior, const Boundaries& bounds, Mirror&& mirror_fn) {
  const Eigen::Index n = interior.cols();
  Matrix padded(interior.rows(), n + 4);
  padded.middleCols(2, n) = interior;
  for (int g = 0; g < 2; ++g) {
    // Left ghost at interior index -1 - g, right ghost at n + g.
    const Eigen::Index inner_left = std::min<Eigen::Index>(g, n - 1);
    const Eigen::Index inner_right = std::max<Eigen::Index>(n - 1 - g, 0);
    switch (bounds.left) {
      case BoundaryKind::Open:
        padded.col(1 - g) = interior.col(0);
        break;
      case BoundaryKind::Reflecting:
        padded.col(1 - g) = mirror_fn(interior.col(inner_left));
        break;
      case BoundaryKind::Periodic:
        padded.col(1 - g) = interior.col((n - 1 - g + n) % n);
        break;
    }
    switch (bounds.right) {
      case BoundaryKind::Open:
        padded.col(n + 2 + g) = interior.col(n - 1);
        break;
      case BoundaryKind::Reflecting:
        padded.col(n + 2 + g) = mirror_fn(interior.col(inner_right));
        break;
      case BoundaryKind::Periodic:
        padded.col(n + 2 + g) = interior.col(g % n);
        break;
    }
  }
  return padded;
}

}  // namespace

GhostedField make_ghosted(const ConservedField& field, const Eigen::VectorXd& h,
                          const Boundaries& bounds) {
  GhostedField g;
  g.states = pad<FieldMatrix>(field.states, bounds, [](const auto& c) { return mirror(c); });
  const Eigen::Index cols = g.states.cols();
  g.fluxes.resize(5, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    g.fluxes.col(c) = euler_flux(ConservedState(g.states.col(c)));
  }
  // h follows the same ghost rule as the states (a wall mirrors, which leaves h unchanged).
  g.h = pad<Eigen::RowVectorXd>(h.transpose(), bounds, [](const auto& c) { return c; }).transpose();
  return g;
}

FieldMatrix ghost_kinetic_fluxes(const FieldMatrix& gk, const Boundaries& bounds) {
  return pad<FieldMatrix>(gk, bounds, [](const auto& c) { return mirror_flux(c); });
}

double max_eigenvalue(const ConservedField& field) {
  double a = 0.0;
  for (int j = 0; j < field.size(); ++j) {
    const auto p = primitives(field.at(j));
    a = std::max(a, std::abs(p.u.x()) + std::sqrt(kGamma * p.theta));
  }
  return a;
}

FluxMomentVector muscl_lf_flux(const GhostedField& g, int j, double A) {
  // Split fluxes w± = F ± A rho; the slope of w+ lives in cell j, that of w- in cell j+1.
  auto w_plus = [&](int k) -> FluxMomentVector { return g.flux(k) + A * g.state(k); };
  auto w_minus = [&](int k) -> FluxMomentVector { return g.flux(k) - A * g.state(k); };

  const FluxMomentVector dp_left = w_plus(j) - w_plus(j - 1);
  const FluxMomentVector dp_right = w_plus(j + 1) - w_plus(j);
  const FluxMomentVector dm_left = w_minus(j + 1) - w_minus(j);
  const FluxMomentVector dm_right = w_minus(j + 2) - w_minus(j + 1);

  FluxMomentVector sigma_plus;
  FluxMomentVector sigma_minus;
  for (Eigen::Index c = 0; c < 5; ++c) {
    sigma_plus(c) = limited_increment(dp_left(c), dp_right(c), g.h_at(j));
    sigma_minus(c) = limited_increment(dm_left(c), dm_right(c), g.h_at(j + 1));
  }
  const FluxMomentVector first_order =
      0.5 * (g.flux(j) + g.flux(j + 1)) - 0.5 * A * (g.state(j + 1) - g.state(j));
  return first_order + 0.25 * (sigma_plus - sigma_minus);
}

void check_physical(const ConservedField& field) {
  for (int j = 0; j < field.size(); ++j) {
    try {
      (void)primitives(field.at(j));
    } catch (const NonPhysicalState& e) {
      throw NonPhysicalState("cell " + std::to_string(j) + ": " + e.what());
    }
  }
}

ConservedField fluid_step(const ConservedField& field, const FieldMatrix& gk, double dt,
                          const Eigen::VectorXd& h, const Boundaries& bounds) {
  const int n = field.size();
  const double A = max_eigenvalue(field);
  const GhostedField g = make_ghosted(field, h, bounds);
  const FieldMatrix gk_padded = ghost_kinetic_fluxes(gk, bounds);

  // Interface k sits between cells k-1 and k (k = 0 .. n).
  FieldMatrix fluxes(5, n + 1);
  for (int k = 0; k <= n; ++k) {
    fluxes.col(k) = muscl_lf_flux(g, k - 1, A) +
                    kinetic_flux(gk_padded.col(k + 1), gk_padded.col(k + 2));
  }
  ConservedField next = field;
  const double ratio = dt / field.grid.dx();
  next.states -= ratio * (fluxes.rightCols(n) - fluxes.leftCols(n));
  check_physical(next);
  return next;
}

}  // namespace hybrid
