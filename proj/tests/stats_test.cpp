#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "kal/rng.hpp"
#include "kal/stats.hpp"

using namespace kal;

TEST_CASE("pairwise and stable sums") {
  std::vector<double> v;
  for (int i = 1; i <= 1000; ++i) v.push_back(1.0 / i);
  const double reference = pairwise_sum(v);
  std::vector<double> shuffled = v;
  std::reverse(shuffled.begin(), shuffled.end());
  // stable_sum is bitwise identical under permutations
  CHECK(stable_sum(v) == stable_sum(shuffled));
  CHECK(stable_sum(v) == doctest::Approx(reference).epsilon(1e-14));
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("mean and stderr") {
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  const MeanErr m = mean_err(x);
  CHECK(m.mean == doctest::Approx(2.5));
  REQUIRE(m.stderr_.has_value());
  // sample sd = sqrt(5/3), se = sd/2
  CHECK(*m.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-12));
  const MeanErr single = mean_err(std::vector<double>{7.0});
  CHECK_FALSE(single.stderr_.has_value());
}

TEST_CASE("kolmogorov survival function") {
  CHECK(kolmogorov_survival(0.0) == 1.0);
  // Q(1.224) ~ 0.1 and Q(1.628) ~ 0.01 (classical quantiles)
  CHECK(kolmogorov_survival(1.224) == doctest::Approx(0.1).epsilon(0.01));
  CHECK(kolmogorov_survival(1.628) == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("two-sample KS accepts identical laws and rejects shifted ones") {
  RngStream rng(11, {0});
  std::vector<double> a(5000), b(5000), c(5000);
  for (auto& x : a) x = rng.normal();
  for (auto& x : b) x = rng.normal();
  for (auto& x : c) x = rng.normal() + 0.25;
  CHECK(ks_two_sample(a, b).p_value > 0.01);
  CHECK(ks_two_sample(a, c).p_value < 1e-6);
}

TEST_CASE("chi-square p-values from the incomplete gamma") {
  // chi2 with 1 dof at x = 3.841 -> p = 0.05
  CHECK(gamma_q(0.5, 3.841 / 2.0) == doctest::Approx(0.05).epsilon(0.01));
  // with 10 dof at x = 18.307 -> p = 0.05
  CHECK(gamma_q(5.0, 18.307 / 2.0) == doctest::Approx(0.05).epsilon(0.01));
}

TEST_CASE("total variation distance") {
  const std::vector<double> p = {0.5, 0.5, 0.0};
  const std::vector<double> q = {0.25, 0.5, 0.25};
  CHECK(total_variation(p, q) == doctest::Approx(0.25));
  CHECK(total_variation(p, p) == 0.0);
}

TEST_CASE("trapezoid rule") {
  std::vector<double> t, f;
  for (int i = 0; i <= 64; ++i) {
    t.push_back(i / 64.0);
    f.push_back(t.back() * t.back());
  }
  CHECK(trapezoid(t, f) == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
  CHECK(trapezoid(std::vector<double>{0.0}, std::vector<double>{5.0}) == 0.0);
}

TEST_CASE("rng streams are deterministic and tag-separated") {
  RngStream a(42, {1, 2});
  RngStream b(42, {1, 2});
  RngStream c(42, {1, 3});
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t xa = a.next_u64();
    if (xa != b.next_u64()) all_equal = false;
    if (xa != c.next_u64()) any_diff = true;
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("rng uniformity sanity") {
  RngStream rng(7, {9});
  const int n = 200000;
  double acc = 0.0;
  double acc2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    acc += u;
    acc2 += u * u;
  }
  CHECK(acc / n == doctest::Approx(0.5).epsilon(5e-3));
  CHECK(acc2 / n == doctest::Approx(1.0 / 3.0).epsilon(5e-3));
}

TEST_CASE("exponential and normal draws have the right moments") {
  RngStream rng(8, {9});
  const int n = 400000;
  double exp_acc = 0.0;
  double norm_acc = 0.0;
  double norm_acc2 = 0.0;
  for (int i = 0; i < n; ++i) {
    exp_acc += rng.exponential(2.0);
    const double z = rng.normal();
    norm_acc += z;
    norm_acc2 += z * z;
  }
  CHECK(exp_acc / n == doctest::Approx(0.5).epsilon(1e-2));
  CHECK(norm_acc / n == doctest::Approx(0.0).epsilon(1.0));  // absolute tolerance below
  CHECK(std::abs(norm_acc / n) < 5e-3);
  CHECK(norm_acc2 / n == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(rng.exponential(0.0) == std::numeric_limits<double>::infinity());
}
