#ifndef KAL_LIMIT_MODELS_HPP
#define KAL_LIMIT_MODELS_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kal/kernels.hpp"
#include "kal/rng.hpp"
#include "kal/test_functions.hpp"
#include "kal/vec3.hpp"

namespace kal {

/// Reference number-density and kinetic-energy-density curves for the Maxwell
/// limit dynamics: dn/dt = -alpha n^2, dE/dt = -alpha n E. Both the closed
/// form and an RK4 integration are carried for cross-validation.
struct OracleCurve {
  std::vector<double> t_grid;
  std::vector<double> n;        // closed form
  std::vector<double> energy;   // closed form
  std::vector<double> n_rk4;
  std::vector<double> energy_rk4;
};

OracleCurve maxwell_moment_ode(double n0, double e0, double alpha,
                               std::span<const double> t_grid);

/// Law of the particle number for Maxwell kernels, where N decouples from the
/// velocities: a pure death chain on {N0, N0-2, ..., 0} with rates
/// lambda_N = alpha N (N-1) / (2 Lambda).
struct DeathChainDistribution {
  std::vector<double> t_grid;
  std::vector<std::size_t> support;        // {0, 2, ..., N0}
  std::vector<std::vector<double>> p;      // p[time][state]

  double mean_n(std::size_t time_index) const;
  /// Total mass at a grid time; conserved (= 1) up to integrator error.
  double mass(std::size_t time_index) const;
  /// Probability vector at a grid time, indexed like `support`.
  const std::vector<double>& at(std::size_t time_index) const { return p.at(time_index); }
};

DeathChainDistribution death_chain_evolve(int n0, double alpha, double lambda,
                                          std::span<const double> t_grid);

/// Monte Carlo evaluation of the dual hierarchy operator
///   (Gamma_{k;k+1} Phi_k)(V_{k+1}) =
///     sum_i int_{S2} B(v_i - v_{k+1}, omega)
///           [(1-alpha) Phi_k(V-hat^{i,k+1}) - Phi_k(V_k)] domega,
/// where V-hat replaces v_i by v_i - [(v_i - v_{k+1}).omega] omega.
/// Sampling uses the kernel's own angular law; constant factors collapse to
/// the closed form -alpha Phi sum_i Sigma_B (zero variance).
struct GammaEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

GammaEstimate gamma_apply(const TensorTestFunction& phi_k, std::span<const Vec3> v_kplus1,
                          const CollisionKernel& kernel, double alpha, int omega_samples,
                          RngStream& rng);

/// Randomized verification of the operator-norm bound
///   |Gamma Phi| <= (2 - alpha) k ||Sigma_B||_inf ||Phi||_inf.
/// Draws test functions from the unit-sup-norm library and configurations from
/// a heavy-tailed proposal; any excess beyond 3 MC standard errors fails.
struct GammaNormReport {
  bool pass = true;
  double max_ratio = 0.0;           // max |Gamma| / bound observed
  std::size_t samples = 0;
  std::size_t violations = 0;
  std::string worst_sample;
};

GammaNormReport gamma_norm_check(int k, double alpha, const CollisionKernel& kernel,
                                 std::size_t sample_count, std::uint64_t seed,
                                 int omega_samples = 32);

/// Contraction factor of the hierarchy uniqueness iteration,
/// a = 2 rho0 T (2 - alpha) ||Sigma_B||_inf, and the largest T with a < 1.
struct ContractionFactor {
  double a = 0.0;
  double t_max = 0.0;
};

ContractionFactor uniqueness_contraction_factor(double rho0, double t_horizon, double alpha,
                                                double sup_sigma);

}  // namespace kal

#endif
