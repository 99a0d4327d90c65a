#ifndef KAL_CONFIG_HPP
#define KAL_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "kal/dynamics.hpp"
#include "kal/kernels.hpp"
#include "kal/rng.hpp"
#include "kal/test_functions.hpp"

namespace kal {

/// Tensorized initial velocity law f_0. All built-ins have finite third moment.
struct InitSpec {
  enum class Type { maxwellian, bimodal, ball };
  Type type = Type::maxwellian;
  double t0 = 1.0;      // temperature (maxwellian, bimodal)
  double offset = 1.0;  // bimodal mode separation along x
  double radius = 1.0;  // ball

  Vec3 sample(RngStream& rng) const;
  /// E[|v|^2] under f_0.
  double energy_per_particle() const;
};

struct EstimatorSettings {
  int omega_samples = 64;              // MC omega draws per pair term
  double max_quadrature_dt = 1.0 / 16.0;  // coarser snapshot grids get a warning
};

/// Fully resolved run configuration. Parsed from a JSON file; defaults are
/// filled in so that to_json() echoes every effective value.
struct RunConfig {
  KernelFamily kernel_family = KernelFamily::maxwell;
  double kernel_gamma = 0.0;
  double kernel_c_b = 1.0;
  std::string kernel_table_path;  // bounded_custom only

  double alpha = 0.5;
  int n0 = 100;
  double lambda = 0.0;  // 0 means "default to N0" until resolve() runs
  double t_end = 1.0;
  int snapshot_count = 0;  // 0 means "default to 32 per unit time + 1"
  int ensemble_m = 100;
  std::uint64_t seed = 20240101;
  InitSpec init;
  SchedulingMode mode = SchedulingMode::exact;
  std::vector<TensorTestFunction> observables;           // correlations.csv
  std::vector<TensorTestFunction> residual_observables;  // residuals.csv (ell <= 3)
  EstimatorSettings estimators;
  bool selfsim_split_sample = true;
  std::uint64_t memory_cap_bytes = 2ULL << 30;
  std::string output_dir = "out";

  CollisionKernel make_kernel() const;
  double epsilon() const { return 1.0 / lambda; }
  std::vector<double> snapshot_times() const;

  /// Fill defaults (lambda = N0, snapshot grid, default observables).
  void resolve();
  /// Throws ConfigError naming the offending key.
  void validate() const;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

/// Parse a test-function spec entry (used for observables and residuals).
TensorTestFunction test_function_from_json(const nlohmann::json& j);
nlohmann::json test_function_to_json(const TensorTestFunction& fn);

}  // namespace kal

#endif
