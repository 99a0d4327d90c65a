#include <benchmark/benchmark.h>

#include "kal/kernels.hpp"
#include "kal/rng.hpp"

using namespace kal;

static void BM_SigmaHardSphere(benchmark::State& state) {
  const CollisionKernel hs = CollisionKernel::hard_sphere();
  RngStream rng(1, {});
  const Vec3 u = rng.normal3(1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sigma_b(hs, u));
  }
}
BENCHMARK(BM_SigmaHardSphere);

static void BM_SampleOmega(benchmark::State& state) {
  const CollisionKernel hs = CollisionKernel::hard_sphere();
  RngStream rng(2, {});
  const Vec3 u = rng.normal3(1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_omega(hs, u, rng));
  }
}
BENCHMARK(BM_SampleOmega);

static void BM_KernelDensity(benchmark::State& state) {
  const CollisionKernel hs = CollisionKernel::hard_sphere();
  RngStream rng(3, {});
  const Vec3 u = rng.normal3(1.0);
  const Vec3 w = rng.unit_vector();
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel_density(hs, u, w));
  }
}
BENCHMARK(BM_KernelDensity);

BENCHMARK_MAIN();
