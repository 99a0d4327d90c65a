#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "kal/dynamics.hpp"
#include "kal/errors.hpp"
#include "kal/kernels.hpp"
#include "kal/rng.hpp"
#include "kal/stats.hpp"

using namespace kal;

namespace {

std::vector<Vec3> random_velocities(std::size_t n, RngStream& rng, double t0 = 1.0) {
  std::vector<Vec3> v(n);
  for (auto& x : v) x = rng.normal3(std::sqrt(t0));
  return v;
}

}  // namespace

TEST_CASE("elastic collision rule") {
  SUBCASE("head-on reflection") {
    const auto [a, b] = elastic_collide({1, 0, 0}, {-1, 0, 0}, {1, 0, 0});
    CHECK(a == Vec3{-1, 0, 0});
    CHECK(b == Vec3{1, 0, 0});
  }
  SUBCASE("equal velocities are unchanged") {
    const Vec3 v{0.3, -0.7, 1.1};
    const auto [a, b] = elastic_collide(v, v, {0, 0, 1});
    CHECK(a == v);
    CHECK(b == v);
  }
  SUBCASE("omega orthogonal to the relative velocity is a no-op") {
    const auto [a, b] = elastic_collide({2, 0, 0}, {0, 0, 0}, {0, 1, 0});
    CHECK(a == Vec3{2, 0, 0});
    CHECK(b == Vec3{0, 0, 0});
  }
}

TEST_CASE("total rate closed forms") {
  RngStream rng(5, {0});
  SystemState maxwell10(random_velocities(10, rng), 10.0, 0.5, CollisionKernel::maxwell());
  CHECK(maxwell10.total_rate() == doctest::Approx(4.5).epsilon(1e-15));

  SystemState maxwell2(random_velocities(2, rng), 1.0, 0.5, CollisionKernel::maxwell());
  CHECK(maxwell2.total_rate() == doctest::Approx(1.0).epsilon(1e-15));

  SystemState lone(random_velocities(1, rng), 1.0, 0.5, CollisionKernel::maxwell());
  CHECK(lone.total_rate() == 0.0);
  SystemState empty(std::vector<Vec3>{}, 1.0, 0.5, CollisionKernel::maxwell());
  CHECK(empty.total_rate() == 0.0);
}

TEST_CASE("stepping an absorbing configuration throws") {
  RngStream rng(6, {0});
  SystemState state(random_velocities(1, rng), 1.0, 0.5, CollisionKernel::maxwell());
  CHECK_THROWS_AS(state.step_exact(rng), StateError);
  CHECK_THROWS_AS(state.step_majorant(rng), StateError);
}

TEST_CASE("two-particle annihilation clock is Exp(alpha/Lambda)") {
  // P(still 2 particles at t) = exp(-alpha t / Lambda)
  const double alpha = 0.7;
  const double lambda = 2.0;
  const double t_probe = 1.5;
  const int runs = 40000;
  int alive = 0;
  for (int r = 0; r < runs; ++r) {
    RngStream rng(42, {static_cast<std::uint64_t>(r)});
    SystemState state(random_velocities(2, rng), lambda, alpha, CollisionKernel::maxwell());
    bool survived = true;
    while (state.size() >= 2 && state.time() < t_probe) {
      const Event ev = state.step_exact(rng);
      if (ev.kind == Event::Kind::annihilation && ev.time <= t_probe) {
        survived = false;
        break;
      }
    }
    if (survived) ++alive;
  }
  const double expected = std::exp(-alpha * t_probe / lambda);
  const double se = std::sqrt(expected * (1.0 - expected) / runs);
  CHECK(std::abs(static_cast<double>(alive) / runs - expected) < 4.0 * se);
}

TEST_CASE("alpha=1 with two particles annihilates on the first event") {
  RngStream rng(77, {0});
  SystemState state(random_velocities(2, rng), 1.0, 1.0, CollisionKernel::maxwell());
  const Event ev = state.step_exact(rng);
  CHECK(ev.kind == Event::Kind::annihilation);
  CHECK(state.size() == 0);
}

TEST_CASE("alpha=0 preserves the particle count and the energy") {
  RngStream rng(78, {0});
  SystemState state(random_velocities(20, rng), 20.0, 0.0, CollisionKernel::maxwell());
  const double e0 = state.kinetic_energy();
  const Vec3 p0 = state.momentum();
  for (int i = 0; i < 2000; ++i) state.step_exact(rng);
  CHECK(state.size() == 20);
  CHECK(state.kinetic_energy() == doctest::Approx(e0).epsilon(1e-9));
  const Vec3 p1 = state.momentum();
  CHECK(norm(p1 - p0) < 1e-12 * std::max(1.0, state.max_speed()));
}

TEST_CASE("per-event conservation and relative speed preservation") {
  RngStream rng(79, {0});
  const CollisionKernel hs = CollisionKernel::hard_sphere();
  SystemState state(random_velocities(30, rng), 30.0, 0.0, hs);
  for (int i = 0; i < 5000; ++i) {
    const Vec3 p_before = state.momentum();
    const double e_before = state.kinetic_energy();
    const Event ev = state.step_exact(rng);
    REQUIRE(ev.kind == Event::Kind::elastic);
    const Vec3 p_after = state.momentum();
    const double e_after = state.kinetic_energy();
    CHECK(norm(p_after - p_before) <= 1e-12 * state.max_speed());
    CHECK(std::abs(e_after - e_before) <= 1e-10 * e_before);
  }
}

TEST_CASE("relative speed is preserved by the collision map") {
  RngStream rng(80, {0});
  const CollisionKernel hs = CollisionKernel::hard_sphere();
  for (int i = 0; i < 100000; ++i) {
    const Vec3 vi = rng.normal3(2.0);
    const Vec3 vj = rng.normal3(2.0);
    const Vec3 omega = sample_omega(hs, vi - vj, rng);
    const auto [a, b] = elastic_collide(vi, vj, omega);
    const double before = norm(vi - vj);
    if (before == 0.0) continue;
    CHECK(std::abs(norm(a - b) - before) <= 1e-12 * before);
  }
}

TEST_CASE("incremental rate cache stays coherent over many events") {
  // alpha small enough that the gas survives 1e5 events while still
  // exercising the annihilation update path a few dozen times
  RngStream rng(81, {0});
  const CollisionKernel hs = CollisionKernel::hard_sphere();
  SystemState state(random_velocities(100, rng), 100.0, 2e-4, hs);
  int events = 0;
  while (events < 100000 && state.size() >= 4) {
    state.step_exact(rng);
    ++events;
    if (events % 20000 == 0) {
      const double fresh = state.recompute_sigma_n();
      CHECK(std::abs(state.sigma_n() - fresh) <= 1e-9 * fresh);
    }
  }
  const double fresh = state.recompute_sigma_n();
  CHECK(std::abs(state.sigma_n() - fresh) <= 1e-9 * fresh);
  CHECK(events == 100000);
}

TEST_CASE("majorant invariants: max_speed dominates and acceptance is valid") {
  RngStream rng(82, {0});
  const CollisionKernel hs = CollisionKernel::hard_sphere();
  SystemState state(random_velocities(40, rng), 40.0, 0.3, hs);
  for (int i = 0; i < 20000 && state.size() >= 2; ++i) {
    state.step_majorant(rng);
    double vmax = 0.0;
    for (const auto& v : state.velocities()) vmax = std::max(vmax, norm(v));
    CHECK(state.max_speed() >= vmax - 1e-14);
  }
}

TEST_CASE("maxwell kernel under the majorant scheduler never rejects") {
  RngStream rng(83, {0});
  SystemState state(random_velocities(12, rng), 12.0, 0.2, CollisionKernel::maxwell());
  for (int i = 0; i < 5000 && state.size() >= 2; ++i) {
    const Event ev = state.step_majorant(rng);
    CHECK(ev.kind != Event::Kind::null_event);
  }
}

TEST_CASE("simulate records exactly the requested snapshot grid") {
  RngStream rng(84, {0});
  SystemState state(random_velocities(16, rng), 16.0, 0.5, CollisionKernel::maxwell());
  const std::vector<double> times = {0.0, 0.25, 0.5, 0.75, 1.0, 2.0, 5.0, 50.0};
  const Trajectory traj = simulate(state, times, SchedulingMode::exact, rng, true);
  REQUIRE(traj.snapshots.size() == times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(traj.snapshots[i].t == times[i]);
    CHECK(traj.snapshots[i].velocities.size() == traj.snapshots[i].n);
  }
  // t=0 snapshot is the initial configuration
  CHECK(traj.snapshots[0].n == 16);
  // the far-future snapshot exists even if the system absorbed
  CHECK(traj.snapshots.back().n % 2 == 0);
}

TEST_CASE("simulate at alpha=0 keeps energy at every snapshot") {
  RngStream rng(85, {0});
  SystemState state(random_velocities(24, rng), 24.0, 0.0, CollisionKernel::maxwell());
  const double e0 = state.kinetic_energy();
  const std::vector<double> times = {0.0, 0.5, 1.0, 1.5, 2.0};
  const Trajectory traj = simulate(state, times, SchedulingMode::exact, rng, false);
  for (const auto& snap : traj.snapshots) {
    CHECK(snap.n == 24);
    CHECK(snap.energy == doctest::Approx(e0).epsilon(1e-9));
  }
}

TEST_CASE("pathwise dissipation of N and energy with annihilation") {
  RngStream rng(86, {0});
  const CollisionKernel hs = CollisionKernel::hard_sphere();
  SystemState state(random_velocities(50, rng), 50.0, 0.5, hs);
  double energy = state.kinetic_energy();
  std::size_t n = state.size();
  while (state.size() >= 2 && state.time() < 3.0) {
    state.step_exact(rng);
    const double e_now = state.kinetic_energy();
    CHECK(e_now <= energy * (1.0 + 1e-10));
    CHECK(state.size() <= n);
    CHECK((n - state.size()) % 2 == 0);
    energy = e_now;
    n = state.size();
  }
}

TEST_CASE("exact and majorant annihilation-time laws agree (KS at 1%)") {
  const CollisionKernel hs = CollisionKernel::hard_sphere();
  const int runs = 4000;
  std::vector<double> exact_times;
  std::vector<double> majorant_times;
  for (int mode = 0; mode < 2; ++mode) {
    for (int r = 0; r < runs; ++r) {
      RngStream rng(555, {static_cast<std::uint64_t>(mode), static_cast<std::uint64_t>(r)});
      SystemState state(random_velocities(10, rng), 10.0, 0.5, hs);
      for (;;) {
        const Event ev = mode == 0 ? state.step_exact(rng) : state.step_majorant(rng);
        if (ev.kind == Event::Kind::annihilation) {
          (mode == 0 ? exact_times : majorant_times).push_back(ev.time);
          break;
        }
      }
    }
  }
  const KsResult ks = ks_two_sample(exact_times, majorant_times);
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("exact and majorant give the same laws for N(t) and E(t)") {
  const CollisionKernel hs = CollisionKernel::hard_sphere();
  const int runs = 3000;
  const std::vector<double> probe = {0.0, 1.0};
  std::vector<double> energies[2];
  std::vector<double> counts[2];
  for (int mode = 0; mode < 2; ++mode) {
    for (int r = 0; r < runs; ++r) {
      RngStream rng(777, {static_cast<std::uint64_t>(mode), static_cast<std::uint64_t>(r)});
      std::vector<Vec3> v(10);
      for (auto& x : v) x = rng.normal3(1.0);
      SystemState state(std::move(v), 10.0, 0.5, hs);
      const Trajectory traj = simulate(
          state, probe, mode == 0 ? SchedulingMode::exact : SchedulingMode::majorant, rng, false);
      energies[mode].push_back(traj.snapshots[1].energy);
      counts[mode].push_back(static_cast<double>(traj.snapshots[1].n));
    }
  }
  CHECK(ks_two_sample(energies[0], energies[1]).p_value > 0.01);
  // N(1) is supported on {0,2,...,10}: compare the empirical laws in TV.
  std::vector<double> pmf[2];
  for (int mode = 0; mode < 2; ++mode) {
    pmf[mode].assign(6, 0.0);
    for (double n : counts[mode]) pmf[mode][static_cast<std::size_t>(n / 2)] += 1.0 / runs;
  }
  CHECK(total_variation(pmf[0], pmf[1]) < 0.04);  // ~4 sigma of the MC noise
}

TEST_CASE("zero-rate configurations freeze instead of stepping") {
  // all equal velocities: hard-sphere rate is 0, state never changes
  std::vector<Vec3> v(4, Vec3{1.0, 0.0, 0.0});
  SystemState state(v, 4.0, 0.5, CollisionKernel::hard_sphere());
  CHECK(state.total_rate() == 0.0);
  RngStream rng(9, {0});
  const std::vector<double> times = {0.0, 1.0};
  const Trajectory traj = simulate(state, times, SchedulingMode::exact, rng, false);
  CHECK(traj.snapshots.size() == 2);
  CHECK(traj.snapshots[1].n == 4);
  CHECK_THROWS_AS(state.step_exact(rng), StateError);
}
