#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <vector>

#include "kal/errors.hpp"
#include "kal/kernels.hpp"
#include "kal/rng.hpp"
#include "kal/stats.hpp"

using namespace kal;

TEST_CASE("collision frequency closed forms") {
  const CollisionKernel hs = CollisionKernel::hard_sphere();
  const CollisionKernel mx = CollisionKernel::maxwell();
  CHECK(sigma_b(hs, {3.0, 4.0, 0.0}) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(sigma_b(mx, {0.3, -1.0, 2.0}) == 1.0);
  CHECK(sigma_b(hs, {0.0, 0.0, 0.0}) == 0.0);
  CHECK(sigma_b(mx, {0.0, 0.0, 0.0}) == 1.0);
}

TEST_CASE("kernel metadata matches the family") {
  const CollisionKernel hs = CollisionKernel::hard_sphere();
  CHECK(hs.gamma() == 1.0);
  CHECK(hs.c_b() == 1.0);
  CHECK_FALSE(hs.sup_sigma().has_value());
  const CollisionKernel mx = CollisionKernel::maxwell();
  CHECK(mx.gamma() == 0.0);
  CHECK(mx.sup_sigma() == 1.0);
}

TEST_CASE("pointwise kernel density") {
  const CollisionKernel hs = CollisionKernel::hard_sphere();
  const CollisionKernel mx = CollisionKernel::maxwell();
  CHECK(kernel_density(hs, {2.0, 0.0, 0.0}, {1.0, 0.0, 0.0}) ==
        doctest::Approx(1.0 / M_PI).epsilon(1e-14));
  CHECK(kernel_density(hs, {2.0, 0.0, 0.0}, {0.0, 1.0, 0.0}) == 0.0);
  CHECK(kernel_density(mx, {2.0, 0.0, 0.0}, {1.0, 0.0, 0.0}) ==
        doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-14));
  CHECK_THROWS_AS(kernel_density(mx, {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(kernel_density(hs, {1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}), DomainError);
  CHECK(kernel_density(hs, {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}) == 0.0);
}

TEST_CASE("angular sampler moments and azimuthal symmetry") {
  const CollisionKernel hs = CollisionKernel::hard_sphere();
  RngStream rng(123, {7});
  const Vec3 u{0.4, -1.2, 2.5};
  const Vec3 uhat = u * (1.0 / norm(u));
  const int draws = 1'000'000;
  double sum_mu = 0.0;
  double sum_mu2 = 0.0;
  std::vector<double> counts(20, 0.0);
  std::vector<double> azimuths;
  azimuths.reserve(draws);
  Vec3 e1{0.0, 0.0, 0.0};
  // build an azimuthal frame around uhat
  e1 = std::abs(uhat.x) < 0.5 ? Vec3{0.0, -uhat.z, uhat.y} : Vec3{-uhat.y, uhat.x, 0.0};
  e1 *= 1.0 / norm(e1);
  const Vec3 e2{uhat.y * e1.z - uhat.z * e1.y, uhat.z * e1.x - uhat.x * e1.z,
                uhat.x * e1.y - uhat.y * e1.x};
  for (int i = 0; i < draws; ++i) {
    const Vec3 w = sample_omega(hs, u, rng);
    CHECK(std::abs(norm(w) - 1.0) < 1e-12);
    const double mu = dot(uhat, w);
    sum_mu += mu;
    sum_mu2 += mu * mu;
    const int bin = std::min(19, static_cast<int>((mu + 1.0) / 2.0 * 20.0));
    counts[static_cast<std::size_t>(bin)] += 1.0;
    azimuths.push_back(std::atan2(dot(w, e2), dot(w, e1)));
  }
  // E[mu] = 0 and E[mu^2] = 1/2 for the density |mu| on [-1,1]; verify the
  // second moment against midpoint quadrature of mu^2 |mu| as well.
  double quad = 0.0;
  const int panels = 20000;
  for (int i = 0; i < panels; ++i) {
    const double mu = -1.0 + (i + 0.5) * (2.0 / panels);
    quad += mu * mu * std::abs(mu) * (2.0 / panels);
  }
  CHECK(quad == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(std::abs(sum_mu / draws) < 3e-3);
  CHECK(sum_mu2 / draws == doctest::Approx(quad).epsilon(5e-3));

  // chi-square of the mu histogram against the |mu| density, 20 bins, 1%.
  std::vector<double> expected(20, 0.0);
  for (int b = 0; b < 20; ++b) {
    const double lo = -1.0 + b * 0.1;
    const double hi = lo + 0.1;
    expected[static_cast<std::size_t>(b)] =
        draws * 0.5 * std::abs(hi * std::abs(hi) - lo * std::abs(lo));
  }
  const ChiSquareResult chi = chi_square_test(counts, expected);
  CHECK(chi.p_value > 0.01);

  // azimuth is uniform on [-pi, pi): one-sample KS at the 1% level.
  std::sort(azimuths.begin(), azimuths.end());
  double d_stat = 0.0;
  for (std::size_t i = 0; i < azimuths.size(); ++i) {
    const double cdf = (azimuths[i] + M_PI) / (2.0 * M_PI);
    const double hi_step = static_cast<double>(i + 1) / draws;
    const double lo_step = static_cast<double>(i) / draws;
    d_stat = std::max({d_stat, std::abs(hi_step - cdf), std::abs(cdf - lo_step)});
  }
  const double p_az = kolmogorov_survival(std::sqrt(static_cast<double>(draws)) * d_stat);
  CHECK(p_az > 0.01);
}

TEST_CASE("sampler density normalization: MC quadrature of B equals sigma_b") {
  // int_{S2} B(u, omega) domega = sigma_b(u) via uniform-sphere Monte Carlo.
  RngStream rng(2024, {11});
  for (const auto& kernel : {CollisionKernel::hard_sphere(), CollisionKernel::maxwell()}) {
    const Vec3 u{1.3, 0.2, -0.5};
    const int draws = 1'000'000;
    double acc = 0.0;
    for (int i = 0; i < draws; ++i) {
      const Vec3 w = rng.unit_vector();
      acc += kernel_density(kernel, u, w);
    }
    const double integral = 4.0 * M_PI * acc / draws;
    CHECK(integral == doctest::Approx(sigma_b(kernel, u)).epsilon(1e-2));
  }
}

TEST_CASE("growth bound sigma_b <= c_b |u|^gamma on random velocities") {
  RngStream rng(99, {3});
  for (const auto& kernel : {CollisionKernel::hard_sphere(), CollisionKernel::maxwell()}) {
    for (int i = 0; i < 100'000; ++i) {
      const Vec3 u = rng.normal3(2.0);
      CHECK(sigma_b(kernel, u) <=
            kernel.c_b() * std::pow(norm(u), kernel.gamma()) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("bounded custom kernel from a sigma table") {
  const std::filesystem::path path = std::filesystem::temp_directory_path() / "kal_sigma.csv";
  {
    std::ofstream out(path);
    out << "speed,sigma\n0,0.5\n1,0.8\n2,1.0\n10,1.0\n";
  }
  const SigmaTable table = SigmaTable::load_csv(path);
  CHECK(table(0.0) == 0.5);
  CHECK(table(0.5) == doctest::Approx(0.65));
  CHECK(table(50.0) == 1.0);
  CHECK(table.max_sigma() == 1.0);

  const CollisionKernel kernel = CollisionKernel::bounded_custom(table, 0.0, 1.0);
  CHECK(kernel.sup_sigma() == 1.0);
  CHECK(sigma_b(kernel, {0.5, 0.0, 0.0}) == doctest::Approx(0.65));

  // growth-bound violation is rejected
  CHECK_THROWS_AS(CollisionKernel::bounded_custom(table, 0.0, 0.9), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("zero relative velocity gets a uniform scattering vector") {
  const CollisionKernel mx = CollisionKernel::maxwell();
  RngStream rng(7, {1});
  Vec3 mean{};
  const int draws = 200'000;
  for (int i = 0; i < draws; ++i) {
    const Vec3 w = sample_omega(mx, {0.0, 0.0, 0.0}, rng);
    CHECK(std::abs(norm(w) - 1.0) < 1e-12);
    mean += w;
  }
  mean *= 1.0 / draws;
  CHECK(norm(mean) < 5e-3);
}
