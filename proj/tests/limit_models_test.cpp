#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "kal/errors.hpp"
#include "kal/limit_models.hpp"
#include "kal/stats.hpp"

using namespace kal;

TEST_CASE("maxwell moment law closed form and RK4 agree") {
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(0.05 * i);
  const OracleCurve c = maxwell_moment_ode(1.0, 3.0, 0.5, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(c.n[i] - c.n_rk4[i]) <= 1e-8 * c.n[i]);
    CHECK(std::abs(c.energy[i] - c.energy_rk4[i]) <= 1e-8 * c.energy[i]);
  }
  // n0=1, alpha=0.5, t=2 -> n = 0.5
  const OracleCurve probe = maxwell_moment_ode(1.0, 3.0, 0.5, std::vector<double>{0.0, 2.0});
  CHECK(probe.n[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(probe.energy[1] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(probe.n[0] == 1.0);
  CHECK(probe.energy[0] == 3.0);
}

TEST_CASE("alpha = 0 moment curves are constant") {
  const OracleCurve c = maxwell_moment_ode(0.7, 2.0, 0.0, std::vector<double>{0.0, 5.0, 10.0});
  for (double n : c.n) CHECK(n == 0.7);
  for (double e : c.energy) CHECK(e == 2.0);
}

TEST_CASE("death chain: two-particle closed form") {
  const double alpha = 0.5;
  const double lambda = 3.0;
  std::vector<double> grid = {0.0, 0.5, 1.0, 2.0, 4.0};
  const DeathChainDistribution chain = death_chain_evolve(2, alpha, lambda, grid);
  REQUIRE(chain.support.size() == 2);  // {0, 2}
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double p2 = std::exp(-alpha * grid[i] / lambda);
    CHECK(chain.p[i][1] == doctest::Approx(p2).epsilon(1e-8));
    CHECK(chain.p[i][0] == doctest::Approx(1.0 - p2).epsilon(1e-8));
  }
}

TEST_CASE("death chain conserves mass, support and parity") {
  std::vector<double> grid = {0.0, 0.3, 1.0, 3.0};
  const DeathChainDistribution chain = death_chain_evolve(10, 0.5, 10.0, grid);
  REQUIRE(chain.support.size() == 6);
  CHECK(chain.p[0].back() == 1.0);  // delta at N0
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (double p : chain.p[i]) CHECK(p >= -1e-12);
    CHECK(std::abs(chain.mass(i) - 1.0) <= 1e-10);
  }
  for (std::size_t s = 0; s < chain.support.size(); ++s) CHECK(chain.support[s] % 2 == 0);
}

TEST_CASE("expected N from the death chain approaches the limit law") {
  // finite-size consistency: error at N0=200 below half the error at N0=50
  const std::vector<double> grid = {0.0, 1.0};
  const double alpha = 0.5;
  const double n_limit = 1.0 / (1.0 + alpha * 1.0);
  auto err_at = [&](int n0) {
    const DeathChainDistribution chain =
        death_chain_evolve(n0, alpha, static_cast<double>(n0), grid);
    return std::abs(chain.mean_n(1) / n0 - n_limit);
  };
  CHECK(err_at(200) < 0.5 * err_at(50));
}

TEST_CASE("gamma of a constant is -alpha k Sigma_B, exactly for Maxwell") {
  RngStream rng(31, {4});
  const CollisionKernel mx = CollisionKernel::maxwell();
  for (int k = 1; k <= 3; ++k) {
    std::vector<UnaryTestFunction> ones(static_cast<std::size_t>(k),
                                        UnaryTestFunction::constant(1.0));
    const TensorTestFunction unit("unit", ones);
    std::vector<Vec3> config(static_cast<std::size_t>(k) + 1);
    for (auto& v : config) v = rng.normal3(1.0);
    for (double alpha : {0.0, 0.3, 1.0}) {
      const GammaEstimate g = gamma_apply(unit, config, mx, alpha, 4, rng);
      CHECK(std::abs(g.value - (-alpha * k)) <= 1e-12);
      CHECK(g.stderr_ == 0.0);
    }
  }
}

TEST_CASE("gamma matches a brute-force uniform-sphere quadrature") {
  // k = 1, Gaussian test function, fixed pair: importance-sampled gamma_apply
  // against 1e6-draw uniform quadrature of B(u,omega) * bracket.
  RngStream rng(32, {4});
  const CollisionKernel mx = CollisionKernel::maxwell();
  const TensorTestFunction phi("g", {UnaryTestFunction::gaussian(0.8, {0.2, 0.0, -0.1})});
  const Vec3 v1{0.7, -0.3, 0.4};
  const Vec3 v2{-0.5, 0.9, 0.1};
  const double alpha = 0.4;

  const GammaEstimate is = gamma_apply(phi, std::vector<Vec3>{v1, v2}, mx, alpha, 200000, rng);

  double acc = 0.0;
  double acc2 = 0.0;
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) {
    const Vec3 w = rng.unit_vector();
    const double density = kernel_density(mx, v1 - v2, w);
    const Vec3 v1p = v1 - dot(v1 - v2, w) * w;
    const double term =
        4.0 * M_PI * density * ((1.0 - alpha) * phi.factor(0)(v1p) - phi.factor(0)(v1));
    acc += term;
    acc2 += term * term;
  }
  const double brute = acc / draws;
  const double brute_se =
      std::sqrt(std::max(0.0, (acc2 / draws - brute * brute) / (draws - 1.0)));
  const double combined = std::hypot(is.stderr_, brute_se);
  CHECK(std::abs(is.value - brute) <= 3.0 * combined);
}

TEST_CASE("gamma on product samples reproduces the limit collision operator") {
  // <B_alpha(f,f), phi> two ways: sample mean of gamma_apply over pairs drawn
  // iid from f, and an independent uniform-sphere quadrature over the same
  // draws. f = standard Maxwellian.
  const CollisionKernel mx = CollisionKernel::maxwell();
  const TensorTestFunction phi("g", {UnaryTestFunction::gaussian(1.0)});
  const double alpha = 0.5;
  const int pairs = 20000;
  std::vector<double> route_is(pairs);
  std::vector<double> route_uniform(pairs);
  RngStream rng(33, {4});
  RngStream rng2(34, {4});
  for (int i = 0; i < pairs; ++i) {
    const Vec3 a = rng.normal3(1.0);
    const Vec3 b = rng.normal3(1.0);
    route_is[i] = gamma_apply(phi, std::vector<Vec3>{a, b}, mx, alpha, 16, rng).value;
    double acc = 0.0;
    for (int d = 0; d < 64; ++d) {
      const Vec3 w = rng2.unit_vector();
      const Vec3 ap = a - dot(a - b, w) * w;
      acc += 4.0 * M_PI * kernel_density(mx, a - b, w) *
             ((1.0 - alpha) * phi.factor(0)(ap) - phi.factor(0)(a));
    }
    route_uniform[i] = acc / 64.0;
  }
  const MeanErr m1 = mean_err(route_is);
  const MeanErr m2 = mean_err(route_uniform);
  const double combined = std::hypot(m1.stderr_.value_or(0.0), m2.stderr_.value_or(0.0));
  CHECK(std::abs(m1.mean - m2.mean) <= 3.0 * combined);
}

TEST_CASE("gamma norm check on bounded kernels") {
  const CollisionKernel mx = CollisionKernel::maxwell();
  const GammaNormReport rep = gamma_norm_check(2, 0.5, mx, 2000, 17);
  CHECK(rep.pass);
  CHECK(rep.max_ratio <= 1.0 + 1e-9);
  CHECK(rep.samples == 2000);

  // unbounded kernels are rejected
  CHECK_THROWS_AS(gamma_norm_check(1, 0.5, CollisionKernel::hard_sphere(), 10, 1), DomainError);
}

TEST_CASE("constant test functions approach the norm bound as alpha -> 1") {
  // ratio |Gamma 1| / bound = alpha / (2 - alpha)
  const CollisionKernel mx = CollisionKernel::maxwell();
  RngStream rng(35, {4});
  const TensorTestFunction unit("unit", {UnaryTestFunction::constant(1.0)});
  std::vector<Vec3> config = {rng.normal3(1.0), rng.normal3(1.0)};
  for (double alpha : {0.5, 0.9, 0.99}) {
    const double value = gamma_apply(unit, config, mx, alpha, 1, rng).value;
    const double bound = (2.0 - alpha) * 1.0 * 1.0;
    CHECK(std::abs(value) / bound == doctest::Approx(alpha / (2.0 - alpha)).epsilon(1e-12));
  }
}

TEST_CASE("uniqueness contraction factor") {
  const ContractionFactor f = uniqueness_contraction_factor(1.0, 0.25, 0.5, 1.0);
  CHECK(f.a == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(f.t_max == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(uniqueness_contraction_factor(1.0, 0.0, 0.5, 1.0).a == 0.0);
}
