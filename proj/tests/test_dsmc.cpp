#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hybrid/dsmc.hpp"
#include "oracles.hpp"

using namespace hybrid;

namespace {

const Boundaries kWalls{BoundaryKind::Reflecting, BoundaryKind::Reflecting};
const Boundaries kOpen{BoundaryKind::Open, BoundaryKind::Open};

ParticleEnsemble single_cell(std::size_t n, double theta_x, double theta_yz, std::uint64_t seed,
                             double m_p = 1.0) {
  ParticleEnsemble e(GridSpec{0.0, 1.0, 1}, m_p);
  RngStream rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector3d v(std::sqrt(theta_x) * rng.normal(), std::sqrt(theta_yz) * rng.normal(),
                      std::sqrt(theta_yz) * rng.normal());
    e.add(Particle{rng.uniform(), v});
  }
  return e;
}

double mean_sq(const std::vector<Particle>& cell, int c) {
  double s = 0.0;
  for (const auto& p : cell) s += p.v(c) * p.v(c);
  return s / static_cast<double>(cell.size());
}

}  // namespace

TEST_CASE("transport moves particles and folds at walls") {
  ParticleEnsemble e(GridSpec{0.0, 1.0, 10}, 1.0);
  e.add(Particle{0.52, Eigen::Vector3d(1, 0, 0)});
  e.add(Particle{0.05, Eigen::Vector3d(-1, 0, 0)});
  transport(e, 0.1, kWalls);
  REQUIRE(e.size() == 2);
  REQUIRE(e.cell(6).size() == 1);
  CHECK(e.cell(6)[0].x == doctest::Approx(0.62).epsilon(1e-15));
  REQUIRE(e.cell(0).size() == 1);
  CHECK(e.cell(0)[0].x == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(e.cell(0)[0].v.x() == 1.0);
  CHECK(e.binning_consistent());
}

TEST_CASE("transport with dt = 0 is the identity") {
  auto e = single_cell(100, 1.0, 1.0, 3);
  const auto before = e.cell(0);
  transport(e, 0.0, kOpen);
  const auto& after = e.cell(0);
  REQUIRE(after.size() == before.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(after[i].x == before[i].x);
    CHECK(after[i].v == before[i].v);
  }
}

TEST_CASE("reflecting walls keep count and speeds, open ends delete") {
  ParticleEnsemble e(GridSpec{0.0, 1.0, 20}, 1.0);
  RngStream rng(5);
  for (int i = 0; i < 2000; ++i) {
    e.add(Particle{rng.uniform(), Eigen::Vector3d(3.0 * rng.normal(), rng.normal(), 0.0)});
  }
  std::vector<double> speeds;
  for (int j = 0; j < e.n_cells(); ++j)
    for (const auto& p : e.cell(j)) speeds.push_back(p.v.norm());
  std::sort(speeds.begin(), speeds.end());

  auto walled = e;
  for (int k = 0; k < 50; ++k) transport(walled, 0.05, kWalls);
  CHECK(walled.size() == 2000);
  CHECK(walled.binning_consistent());
  std::vector<double> after;
  for (int j = 0; j < walled.n_cells(); ++j)
    for (const auto& p : walled.cell(j)) after.push_back(p.v.norm());
  std::sort(after.begin(), after.end());
  CHECK(after == speeds);

  auto open = e;
  transport(open, 0.5, kOpen);
  CHECK(open.size() < 2000);
  CHECK(open.binning_consistent());

  auto periodic = e;
  transport(periodic, 0.37, Boundaries{BoundaryKind::Periodic, BoundaryKind::Periodic});
  CHECK(periodic.size() == 2000);
  CHECK(periodic.binning_consistent());
}

TEST_CASE("rescale_weights removes weightless cells only") {
  ParticleEnsemble e(GridSpec{0.0, 1.0, 2}, 1.0);
  for (int i = 0; i < 7; ++i) e.add(Particle{0.25, Eigen::Vector3d::Zero()});
  for (int i = 0; i < 4; ++i) e.add(Particle{0.75, Eigen::Vector3d::Zero()});
  Eigen::VectorXd h(2);
  h << 0.0, 1.0;
  CHECK(rescale_weights(e, h) == 7);
  CHECK(e.cell(0).empty());
  CHECK(e.cell(1).size() == 4);
  h << 0.5, 1.0;
  CHECK(rescale_weights(e, h) == 0);
  CHECK(e.size() == 4);
}

TEST_CASE("inject_reservoir") {
  const GridSpec g{0.0, 1.0, 10};
  ConservedField fluid(g);
  for (int j = 0; j < 10; ++j) fluid.state(j) = assemble(1.0, Eigen::Vector3d::Zero().eval(), 1.0);

  SUBCASE("nothing to do without a fluid zone") {
    ParticleEnsemble e(g, 1e-4);
    RngStream rng(1);
    CHECK(inject_reservoir(e, fluid, Eigen::VectorXd::Ones(10), 0.01, kWalls, rng) == 0);
  }

  SUBCASE("a cold resting reservoir cannot cross") {
    ConservedField cold(g);
    for (int j = 0; j < 10; ++j) cold.state(j) = assemble(1.0, Eigen::Vector3d::Zero().eval(), 0.0);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(10);
    h.tail(5).setOnes();
    ParticleEnsemble e(g, 1e-3);
    RngStream rng(2);
    CHECK(inject_reservoir(e, cold, h, 0.01, kWalls, rng) == 0);
    CHECK(e.empty());
  }

  SUBCASE("injected particle flux matches the effusion flux") {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(10);
    h.tail(5).setOnes();
    const double m_p = 1e-4;
    const double dt = 0.01;
    const Boundaries bounds{BoundaryKind::Open, BoundaryKind::Reflecting};
    RngStream rng(3);
    std::vector<double> counts;
    for (int s = 0; s < 200; ++s) {
      ParticleEnsemble e(g, m_p);
      RngStream step_rng = rng.substream(static_cast<std::uint64_t>(s));
      const auto added = inject_reservoir(e, fluid, h, dt, bounds, step_rng);
      CHECK(e.size() == added);
      for (int j = 0; j < 5; ++j) CHECK(e.cell(j).empty());
      counts.push_back(static_cast<double>(added));
    }
    const auto st = oracle::stats(counts);
    const double expect = oracle::effusion_flux(1.0, 1.0) * dt / m_p;
    INFO("mean " << st.mean << " expected " << expect << " sem " << st.sem());
    CHECK(std::abs(st.mean - expect) <= 3.0 * st.sem());
  }
}

TEST_CASE("binary_collision") {
  RngStream rng(7);
  const Eigen::Vector3d v(0.3, -1.0, 2.0);
  auto [a, b] = binary_collision(v, v, rng);
  CHECK(a == v);
  CHECK(b == v);

  auto [c, d] = binary_collision(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(-1, 0, 0), Eigen::Vector3d(0, 1, 0));
  CHECK(c == Eigen::Vector3d(0, 1, 0));
  CHECK(d == Eigen::Vector3d(0, -1, 0));

  double worst_mom = 0.0, worst_en = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector3d x(rng.normal(), rng.normal(), rng.normal());
    const Eigen::Vector3d y = 3.0 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    auto [xp, yp] = binary_collision(x, y, rng);
    worst_mom = std::max(worst_mom, (xp + yp - x - y).cwiseAbs().maxCoeff());
    worst_en = std::max(worst_en, std::abs(xp.squaredNorm() + yp.squaredNorm() - x.squaredNorm() - y.squaredNorm()));
  }
  CHECK(worst_mom < 1e-12);
  CHECK(worst_en < 1e-12);
}

TEST_CASE("collide_cell with h = 0 changes nothing") {
  auto e = single_cell(50, 2.0, 0.5, 11);
  const auto before = e.cell(0);
  RngStream rng(1);
  collide_cell(e, 0, ConservedState::Zero(), 0.0, CollisionParams{1e-3, 1.0}, 0.1, rng);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(e.cell(0)[i].v == before[i].v);
}

TEST_CASE("collide_cell rejects probabilities above one") {
  auto e = single_cell(10, 1.0, 1.0, 12);
  RngStream rng(1);
  CHECK_THROWS_AS(collide_cell(e, 0, ConservedState::Zero(), 1.0, CollisionParams{1e-2, 1.0}, 0.02, rng),
                  InvalidProbability);
  CHECK_NOTHROW(collide_cell(e, 0, ConservedState::Zero(), 0.5, CollisionParams{1e-2, 1.0}, 0.02, rng));
}

TEST_CASE("collide_cell without a remainder is a plain Nanbu step") {
  // Two particles, p = 1: each one collides with the other.
  ParticleEnsemble e(GridSpec{0.0, 1.0, 1}, 1.0);
  const Eigen::Vector3d v1(1, 2, 0), v2(-1, 0, 3);
  e.add(Particle{0.2, v1});
  e.add(Particle{0.7, v2});
  RngStream rng(4);
  collide_cell(e, 0, ConservedState::Zero(), 1.0, CollisionParams{1.0, 1.0}, 1.0, rng);
  const Eigen::Vector3d center = 0.5 * (v1 + v2);
  const double half_q = 0.5 * (v1 - v2).norm();
  for (const auto& p : e.cell(0)) CHECK(std::abs((p.v - center).norm() - half_q) < 1e-14);
}

TEST_CASE("collide_cell keeps a Maxwellian Maxwellian") {
  const std::size_t n = 2000;
  ConservedState remainder = assemble(1.0, Eigen::Vector3d::Zero().eval(), 1.0);
  std::vector<double> m3, m4;
  for (int s = 0; s < 100; ++s) {
    auto e = single_cell(n, 1.0, 1.0, 500 + s, 1.0 / n);
    RngStream rng(9000 + s);
    collide_cell(e, 0, remainder, 0.5, CollisionParams{1.0, 1.0}, 1.0, rng);
    double a = 0.0, b = 0.0;
    for (const auto& p : e.cell(0)) {
      a += std::pow(p.v.x(), 3);
      b += std::pow(p.v.x(), 4);
    }
    m3.push_back(a / n);
    m4.push_back(b / n);
  }
  const auto s3 = oracle::stats(m3);
  const auto s4 = oracle::stats(m4);
  INFO("m3 " << s3.mean << " +- " << s3.sem() << ", m4 " << s4.mean << " +- " << s4.sem());
  CHECK(std::abs(s3.mean) <= 3.0 * s3.sem());
  CHECK(std::abs(s4.mean - 3.0) <= 3.0 * s4.sem());
}

TEST_CASE("collide_cell conserves momentum and energy in expectation") {
  const std::size_t n = 200;
  std::array<std::vector<double>, 4> change;
  for (int s = 0; s < 500; ++s) {
    auto e = single_cell(n, 3.0, 0.2, 77, 1.0 / n);
    for (auto& p : e.cell(0)) p.v.x() += 0.5;
    const auto before = cell_moments(e, Eigen::VectorXd::Ones(1), 0);
    RngStream rng(100 + s);
    collide_cell(e, 0, ConservedState::Zero(), 1.0, CollisionParams{1.0, 1.0}, 0.5, rng);
    const auto after = cell_moments(e, Eigen::VectorXd::Ones(1), 0);
    for (int c = 0; c < 4; ++c) change[c].push_back(after(c + 1) - before(c + 1));
  }
  for (int c = 0; c < 4; ++c) {
    const auto st = oracle::stats(change[c]);
    INFO("component " << c + 1 << " mean change " << st.mean << " sem " << st.sem());
    CHECK(std::abs(st.mean) <= 3.0 * st.sem());
  }
}

TEST_CASE("collide_cell is permutation invariant in distribution") {
  const std::size_t n = 300;
  std::vector<double> forward, reversed;
  for (int s = 0; s < 200; ++s) {
    auto a = single_cell(n, 3.0, 0.2, 42, 1.0 / n);
    auto b = a;
    std::reverse(b.cell(0).begin(), b.cell(0).end());
    RngStream ra(300 + s), rb(300 + s + 100000);
    collide_cell(a, 0, ConservedState::Zero(), 1.0, CollisionParams{1.0, 1.0}, 0.3, ra);
    collide_cell(b, 0, ConservedState::Zero(), 1.0, CollisionParams{1.0, 1.0}, 0.3, rb);
    forward.push_back(mean_sq(a.cell(0), 0));
    reversed.push_back(mean_sq(b.cell(0), 0));
  }
  CHECK(oracle::welch_z(oracle::stats(forward), oracle::stats(reversed)) < 3.0);
}

TEST_CASE("temperature anisotropy relaxes at the Maxwell-molecule rate") {
  // Isotropic scattering halves the traceless second moment per collision,
  // so with collision probability p the anisotropy decays like (1 - p/2)^n.
  auto e = single_cell(20000, 2.0, 0.5, 21, 1.0 / 20000);
  const double p = 0.01;
  const auto anisotropy = [&] { return mean_sq(e.cell(0), 0) - 0.5 * (mean_sq(e.cell(0), 1) + mean_sq(e.cell(0), 2)); };
  const double a0 = anisotropy();
  double last = a0;
  const Boundaries periodic{BoundaryKind::Periodic, BoundaryKind::Periodic};
  for (int k = 1; k <= 1000; ++k) {
    transport(e, 1e-3, periodic);
    RngStream rng = RngStream(8).substream(static_cast<std::uint64_t>(k));
    collide_cell(e, 0, ConservedState::Zero(), 1.0, CollisionParams{1.0, 1.0}, p, rng);
    if (k % 100 == 0) {
      const double a = anisotropy();
      if (k <= 500) CHECK(a < last);  // later values sit at the noise floor
      last = a;
      if (k == 200) CHECK(std::abs(a / a0 - std::pow(1.0 - p / 2.0, 200)) < 0.05);
    }
  }
  CHECK(last / a0 < 0.05);
}
