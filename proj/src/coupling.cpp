#include "hybrid/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hybrid/euler.hpp"
#include "hybrid/guide.hpp"
#include "parallel.hpp"

namespace hybrid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinDt = 1e-14;

enum StreamTag : std::uint64_t {
  kSeedTag = 1,
  kPopulateTag = 2,
  kInjectTag = 3,
  kMatchTag = 4,
  kCollideTag = 5,
};

RngStream stage_stream(const Simulation& sim, StreamTag tag) {
  return sim.rng.substream({static_cast<std::uint64_t>(sim.step_index), tag});
}

}  // namespace

TransitionField TransitionField::fluid(int n_cells, int buffer_width) {
  TransitionField t;
  t.h = Eigen::VectorXd::Zero(n_cells);
  t.kinetic_mask = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n_cells, false);
  t.buffer_width = buffer_width;
  return t;
}

TransitionField TransitionField::kinetic(int n_cells, int buffer_width) {
  TransitionField t;
  t.h = Eigen::VectorXd::Ones(n_cells);
  t.kinetic_mask = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n_cells, true);
  t.buffer_width = buffer_width;
  return t;
}

double reference_length(const ConservedField& field, int j, double grad_floor) {
  const int n = field.size();
  const double dx = field.grid.dx();
  double worst = 0.0;  // largest |dw/dx| / |w|
  for (const Eigen::Index c : {comp::rho, comp::mom_x, comp::energy}) {
    double grad;
    if (n == 1) {
      grad = 0.0;
    } else if (j == 0) {
      grad = (field.states(c, 1) - field.states(c, 0)) / dx;
    } else if (j == n - 1) {
      grad = (field.states(c, n - 1) - field.states(c, n - 2)) / dx;
    } else {
      grad = (field.states(c, j + 1) - field.states(c, j - 1)) / (2.0 * dx);
    }
    grad = std::abs(grad);
    if (grad <= grad_floor) continue;
    double value = std::abs(field.states(c, j));
    if (c == comp::mom_x && field.states(comp::rho, j) > 0.0) {
      // Momentum is measured against rho (|u| + c_s) so a gas near rest is not singular.
      const auto p = primitives(field.at(j));
      value = p.rho * (std::abs(p.u.x()) + std::sqrt(kGamma * p.theta));
    }
    worst = std::max(worst, value > 0.0 ? grad / value : kInf);
  }
  return worst > 0.0 ? 1.0 / worst : kInf;
}

Eigen::VectorXd breakdown_indicator(const ConservedField& field, double dt,
                                    const Eigen::VectorXd& eps, double grad_floor) {
  const int n = field.size();
  const double dx = field.grid.dx();
  Eigen::VectorXd beta(n);
  for (int j = 0; j < n; ++j) {
    const double weight = 1.0 - field.states(comp::rho, j) * dt / eps(j);
    if (weight <= 0.0) {
      beta(j) = 0.0;
      continue;
    }
    const double L = reference_length(field, j, grad_floor);
    beta(j) = std::isinf(L) ? 0.0 : weight * dx / L;
  }
  return beta;
}

double mean_free_path(double k_const, double temperature, double pressure, double sigma_c) {
  return k_const * temperature /
         (std::numbers::sqrt2 * std::numbers::pi * pressure * sigma_c * sigma_c);
}

KnudsenDiagnostic local_knudsen(const ConservedField& field, int j, double sigma_c,
                                double k_const, double grad_floor) {
  const auto p = primitives(field.at(j));
  KnudsenDiagnostic d;
  d.mean_free_path = mean_free_path(k_const, p.theta, p.rho * p.theta, sigma_c);
  d.reference_length = reference_length(field, j, grad_floor);
  d.knudsen = d.mean_free_path / d.reference_length;
  d.fluid_valid = d.knudsen < 0.05;
  return d;
}

TransitionField transition_from_mask(const Eigen::Array<bool, Eigen::Dynamic, 1>& mask,
                                     int buffer_width) {
  const int n = static_cast<int>(mask.size());
  TransitionField t;
  t.kinetic_mask = mask;
  t.buffer_width = buffer_width;
  t.h = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    if (!mask(k)) continue;
    t.h(k) = 1.0;
    for (int d = 1; d < buffer_width; ++d) {
      const double ramp = 1.0 - static_cast<double>(d) / buffer_width;
      if (k - d >= 0) t.h(k - d) = std::max(t.h(k - d), ramp);
      if (k + d < n) t.h(k + d) = std::max(t.h(k + d), ramp);
    }
  }
  return t;
}

TransitionField update_transition(const Eigen::VectorXd& beta, const TransitionField& prev,
                                  const BreakdownParams& params) {
  const int n = static_cast<int>(beta.size());
  Eigen::Array<bool, Eigen::Dynamic, 1> mask(n);
  const double release = params.release_factor * params.beta_thr;
  for (int j = 0; j < n; ++j) {
    const bool was_kinetic = prev.kinetic_mask.size() == n && prev.kinetic_mask(j);
    mask(j) = beta(j) > params.beta_thr || (was_kinetic && beta(j) > release);
  }
  return transition_from_mask(mask, prev.buffer_width);
}

std::size_t populate_new_cells(ParticleEnsemble& ensemble, const ConservedField& field,
                               const Eigen::VectorXd& h, RngStream& rng) {
  std::size_t added = 0;
  const double dx = ensemble.grid().dx();
  for (int j = 0; j < ensemble.n_cells(); ++j) {
    if (h(j) <= 0.0 || !ensemble.cell(j).empty()) continue;
    RngStream cell_rng = rng.substream(static_cast<std::uint64_t>(j));
    const double rho = field.states(comp::rho, j);
    const auto count = static_cast<std::size_t>(stochastic_round(rho * dx / ensemble.m_p(), cell_rng));
    populate_cell(ensemble, j, field.at(j), count, cell_rng);
    added += count;
  }
  return added;
}

double compute_dt(const ConservedField& field, const ParticleEnsemble& particles,
                  const Eigen::VectorXd& eps, double cfl) {
  const double dx = field.grid.dx();
  double v_max = 0.0;
  for (int j = 0; j < particles.n_cells(); ++j) {
    for (const auto& p : particles.cell(j)) v_max = std::max(v_max, std::abs(p.v.x()));
  }
  double a_max = 0.0;
  double relax = kInf;
  for (int j = 0; j < field.size(); ++j) {
    const double rho = field.states(comp::rho, j);
    if (rho == 0.0) continue;  // empty cell of a plain particle field
    const auto p = primitives(field.at(j));
    a_max = std::max(a_max, std::abs(p.u.x()) + std::sqrt(kGamma * p.theta));
    relax = std::min(relax, eps(j) / rho);
  }
  const double dt = std::min({v_max > 0.0 ? cfl * dx / v_max : kInf, a_max > 0.0 ? cfl * dx / a_max : kInf, relax});
  if (!(dt >= kMinDt)) throw ZeroDt("time step " + std::to_string(dt) + " underflows");
  return dt;
}

ConservedField particle_field(const ParticleEnsemble& particles, const Eigen::VectorXd& h) {
  ConservedField f(particles.grid());
  for (int j = 0; j < particles.n_cells(); ++j) f.state(j) = cell_moments(particles, h, j);
  return f;
}

void seed_particles(Simulation& sim) {
  RngStream rng = sim.rng.substream({kSeedTag});
  populate_new_cells(sim.particles, sim.field, sim.transition.h, rng);
}

namespace {

/// Collision rates use the densities that fixed dt, so p = h mu dt / eps <= 1.
void collide_all(Simulation& sim, const ConservedField& rates, const ConservedField& target,
                 bool with_remainder, double dt) {
  const Eigen::VectorXd& h = sim.transition.h;
  const RngStream base = stage_stream(sim, kCollideTag);
  detail::parallel_for(sim.particles.n_cells(), [&](int j) {
    if (h(j) <= 0.0) return;
    RngStream rng = base.substream(static_cast<std::uint64_t>(j));
    CollisionParams params{sim.eps(j), rates.states(comp::rho, j)};
    // After matching the kinetic part holds h * rho, so the remainder is (1 - h) * rho.
    const ConservedState remainder =
        with_remainder ? ConservedState((1.0 - h(j)) * target.at(j)) : ConservedState::Zero();
    collide_cell(sim.particles, j, remainder, h(j), params, dt, rng);
  });
}

void guided_step(Simulation& sim, double dt) {
  const Eigen::VectorXd& h = sim.transition.h;
  const int n = sim.field.size();

  FieldMatrix gk = FieldMatrix::Zero(5, n);
  for (int j = 0; j < n; ++j) {
    if (h(j) > 0.0) gk.col(j) = g_flux_moments(sim.particles, h, j);
  }

  if (!sim.particles.empty() || h.maxCoeff() > 0.0) {
    transport(sim.particles, dt, sim.bounds);
    RngStream inject_rng = stage_stream(sim, kInjectTag);
    inject_reservoir(sim.particles, sim.field, h, dt, sim.bounds, inject_rng);
    rescale_weights(sim.particles, h);
  }

  ConservedField next = fluid_step(sim.field, gk, dt, h, sim.bounds);

  if (h.maxCoeff() > 0.0) {
    const RngStream match_base = stage_stream(sim, kMatchTag);
    detail::parallel_for(n, [&](int j) {
      if (h(j) <= 0.0) return;
      RngStream rng = match_base.substream(static_cast<std::uint64_t>(j));
      match_cell(sim.particles, j, next.at(j), h(j), rng);
    });
    collide_all(sim, sim.field, next, true, dt);
  }
  sim.field = std::move(next);
}

void plain_dsmc_step(Simulation& sim, double dt) {
  const Eigen::VectorXd& h = sim.transition.h;
  transport(sim.particles, dt, sim.bounds);
  RngStream inject_rng = stage_stream(sim, kInjectTag);
  inject_reservoir(sim.particles, sim.field, h, dt, sim.bounds, inject_rng);
  collide_all(sim, sim.field, sim.field, false, dt);
  sim.field = particle_field(sim.particles, h);
}

}  // namespace

void step(Simulation& sim, double dt_cap) {
  try {
    double dt = std::min(compute_dt(sim.field, sim.particles, sim.eps, sim.options.cfl), dt_cap);
    if (!(dt >= kMinDt)) throw ZeroDt("time step " + std::to_string(dt) + " underflows");

    const auto& opts = sim.options;
    sim.beta = breakdown_indicator(sim.field, dt, sim.eps, opts.breakdown.grad_floor);
    if (opts.region == RegionPolicy::Dynamic) {
      sim.transition = update_transition(sim.beta, sim.transition, opts.breakdown);
      rescale_weights(sim.particles, sim.transition.h);
      RngStream rng = stage_stream(sim, kPopulateTag);
      populate_new_cells(sim.particles, sim.field, sim.transition.h, rng);
    }

    if (opts.region == RegionPolicy::PinnedKinetic && !opts.moment_guided) {
      plain_dsmc_step(sim, dt);
    } else {
      guided_step(sim, dt);
    }
    sim.time += dt;
    sim.last_dt = dt;
    ++sim.step_index;
  } catch (const StepFailure&) {
    throw;
  } catch (const Error& e) {
    throw StepFailure(sim.step_index, e.what());
  }
}

}  // namespace hybrid
