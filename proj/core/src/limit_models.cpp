#include "kal/limit_models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kal/errors.hpp"
#include "kal/stats.hpp"

namespace kal {

OracleCurve maxwell_moment_ode(double n0, double e0, double alpha,
                               std::span<const double> t_grid) {
  if (!(n0 > 0.0) || !(e0 > 0.0)) throw ConfigError("moment oracle: n0 and E0 must be positive");
  if (t_grid.empty() || t_grid.front() < 0.0 || !std::is_sorted(t_grid.begin(), t_grid.end()))
    throw ConfigError("moment oracle: t grid must be sorted and nonnegative");
  OracleCurve out;
  out.t_grid.assign(t_grid.begin(), t_grid.end());
  out.n.reserve(t_grid.size());
  out.energy.reserve(t_grid.size());
  for (double t : t_grid) {
    const double denom = 1.0 + alpha * n0 * t;
    out.n.push_back(n0 / denom);
    out.energy.push_back(e0 / denom);
  }
  // RK4 cross-check of the same two ODEs on a refined step.
  out.n_rk4.reserve(t_grid.size());
  out.energy_rk4.reserve(t_grid.size());
  double t = 0.0;
  double n = n0;
  double e = e0;
  auto fn = [alpha](double nn) { return -alpha * nn * nn; };
  auto fe = [alpha](double nn, double ee) { return -alpha * nn * ee; };
  const double h_max = std::min(1e-3, 0.05 / std::max(1.0, alpha * n0));
  for (double target : t_grid) {
    while (t < target) {
      const double h = std::min(h_max, target - t);
      const double kn1 = fn(n), ke1 = fe(n, e);
      const double kn2 = fn(n + 0.5 * h * kn1), ke2 = fe(n + 0.5 * h * kn1, e + 0.5 * h * ke1);
      const double kn3 = fn(n + 0.5 * h * kn2), ke3 = fe(n + 0.5 * h * kn2, e + 0.5 * h * ke2);
      const double kn4 = fn(n + h * kn3), ke4 = fe(n + h * kn3, e + h * ke3);
      n += h / 6.0 * (kn1 + 2.0 * kn2 + 2.0 * kn3 + kn4);
      e += h / 6.0 * (ke1 + 2.0 * ke2 + 2.0 * ke3 + ke4);
      t += h;
    }
    out.n_rk4.push_back(n);
    out.energy_rk4.push_back(e);
  }
  return out;
}

double DeathChainDistribution::mean_n(std::size_t time_index) const {
  const auto& pv = p.at(time_index);
  double m = 0.0;
  for (std::size_t s = 0; s < support.size(); ++s)
    m += static_cast<double>(support[s]) * pv[s];
  return m;
}

double DeathChainDistribution::mass(std::size_t time_index) const {
  const auto& pv = p.at(time_index);
  double m = 0.0;
  for (double q : pv) m += q;
  return m;
}

DeathChainDistribution death_chain_evolve(int n0, double alpha, double lambda,
                                          std::span<const double> t_grid) {
  if (n0 <= 0 || n0 % 2 != 0) throw ConfigError("death chain: N0 must be even and positive");
  if (!(lambda > 0.0)) throw ConfigError("death chain: lambda must be positive");
  if (t_grid.empty() || t_grid.front() < 0.0 || !std::is_sorted(t_grid.begin(), t_grid.end()))
    throw ConfigError("death chain: t grid must be sorted and nonnegative");

  DeathChainDistribution out;
  out.t_grid.assign(t_grid.begin(), t_grid.end());
  const std::size_t states = static_cast<std::size_t>(n0 / 2) + 1;
  out.support.resize(states);
  std::vector<double> rate(states);
  for (std::size_t s = 0; s < states; ++s) {
    out.support[s] = 2 * s;
    const double nn = static_cast<double>(out.support[s]);
    rate[s] = alpha * nn * (nn - 1.0) / (2.0 * lambda);
  }

  std::vector<double> p(states, 0.0);
  p.back() = 1.0;  // P_N(0) = delta_{N0}

  auto rhs = [&](const std::vector<double>& q, std::vector<double>& dq) {
    for (std::size_t s = 0; s < states; ++s) {
      dq[s] = -rate[s] * q[s];
      if (s + 1 < states) dq[s] += rate[s + 1] * q[s + 1];
    }
  };

  const double rate_top = rate.back();
  const double h_max = std::min(0.01, rate_top > 0.0 ? 0.1 / rate_top : 0.01);
  std::vector<double> k1(states), k2(states), k3(states), k4(states), tmp(states);
  double t = 0.0;
  for (double target : t_grid) {
    while (t < target - 1e-15) {
      const double h = std::min(h_max, target - t);
      rhs(p, k1);
      for (std::size_t s = 0; s < states; ++s) tmp[s] = p[s] + 0.5 * h * k1[s];
      rhs(tmp, k2);
      for (std::size_t s = 0; s < states; ++s) tmp[s] = p[s] + 0.5 * h * k2[s];
      rhs(tmp, k3);
      for (std::size_t s = 0; s < states; ++s) tmp[s] = p[s] + h * k3[s];
      rhs(tmp, k4);
      for (std::size_t s = 0; s < states; ++s)
        p[s] += h / 6.0 * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
      t += h;
    }
    out.p.push_back(p);
  }
  return out;
}

GammaEstimate gamma_apply(const TensorTestFunction& phi_k, std::span<const Vec3> v_kplus1,
                          const CollisionKernel& kernel, double alpha, int omega_samples,
                          RngStream& rng) {
  const int k = phi_k.ell();
  if (static_cast<int>(v_kplus1.size()) != k + 1)
    throw std::invalid_argument("gamma_apply: expected k+1 velocities");
  if (omega_samples < 1) throw std::invalid_argument("gamma_apply: omega_samples >= 1");

  const Vec3& w = v_kplus1[static_cast<std::size_t>(k)];
  const std::span<const Vec3> v_k = v_kplus1.first(static_cast<std::size_t>(k));
  const double phi_base = phi_k(v_k);

  GammaEstimate out;
  double var = 0.0;
  for (int i = 0; i < k; ++i) {
    const Vec3& vi = v_k[static_cast<std::size_t>(i)];
    const double s = sigma_b(kernel, vi - w);
    if (s == 0.0) continue;
    const auto& factor = phi_k.factor(i);
    if (factor.is_constant()) {
      // Collision leaves a constant factor unchanged: bracket is -alpha Phi.
      out.value += -alpha * phi_base * s;
      continue;
    }
    const double fi = factor(vi);
    double others = phi_base;
    if (fi != 0.0) {
      others = phi_base / fi;
    } else {
      others = 1.0;
      for (int m = 0; m < k; ++m)
        if (m != i) others *= phi_k.factor(m)(v_k[static_cast<std::size_t>(m)]);
    }
    double sum = 0.0;
    double sum_sq = 0.0;
    const OmegaSampler sampler(vi - w);
    for (int draw = 0; draw < omega_samples; ++draw) {
      const Vec3 omega = sampler.draw(rng);
      const Vec3 vi_prime = vi - dot(vi - w, omega) * omega;
      const double bracket = (1.0 - alpha) * others * factor(vi_prime) - others * fi;
      sum += bracket;
      sum_sq += bracket * bracket;
    }
    const double mean = sum / omega_samples;
    out.value += s * mean;
    if (omega_samples > 1) {
      const double sample_var =
          std::max(0.0, (sum_sq - omega_samples * mean * mean) / (omega_samples - 1));
      var += s * s * sample_var / omega_samples;
    }
  }
  out.stderr_ = std::sqrt(var);
  return out;
}

namespace {

// Unit-sup-norm library used by the norm check.
TensorTestFunction random_unit_test_function(int k, RngStream& rng) {
  std::vector<UnaryTestFunction> factors;
  factors.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    switch (rng.uniform_index(4)) {
      case 0:
        factors.push_back(UnaryTestFunction::constant(1.0));
        break;
      case 1:
        factors.push_back(UnaryTestFunction::gaussian(rng.uniform(0.2, 2.0), rng.normal3(0.5)));
        break;
      case 2:
        factors.push_back(UnaryTestFunction::fourier(rng.normal3(1.0)));
        break;
      default:
        factors.push_back(
            UnaryTestFunction::ball_indicator_smooth(rng.uniform(0.5, 3.0), rng.uniform(0.1, 1.0)));
        break;
    }
  }
  return TensorTestFunction("norm_check_draw", std::move(factors));
}

}  // namespace

GammaNormReport gamma_norm_check(int k, double alpha, const CollisionKernel& kernel,
                                 std::size_t sample_count, std::uint64_t seed,
                                 int omega_samples) {
  if (!kernel.sup_sigma().has_value())
    throw DomainError("gamma_norm_check requires a bounded kernel (sup_sigma present)");
  const double sup_sigma = *kernel.sup_sigma();

  GammaNormReport report;
  report.samples = sample_count;
  RngStream rng(seed, {stream_tag::gamma_check, static_cast<std::uint64_t>(k)});
  for (std::size_t sample = 0; sample < sample_count; ++sample) {
    const TensorTestFunction phi = random_unit_test_function(k, rng);
    // Heavy-tailed proposal: normal scaled by 1/U probes large velocities.
    std::vector<Vec3> config(static_cast<std::size_t>(k) + 1);
    for (auto& v : config) {
      const double scale = 1.0 / std::max(rng.uniform(), 1e-6);
      v = rng.normal3(scale);
    }
    const GammaEstimate est = gamma_apply(phi, config, kernel, alpha, omega_samples, rng);
    const double bound = (2.0 - alpha) * static_cast<double>(k) * sup_sigma * phi.sup_norm();
    const double ratio = std::abs(est.value) / bound;
    if (ratio > report.max_ratio) report.max_ratio = ratio;
    if (std::abs(est.value) > bound + 3.0 * est.stderr_ + 1e-12) {
      ++report.violations;
      if (report.pass) {
        std::ostringstream what;
        what << "sample " << sample << ": |Gamma| = " << std::abs(est.value) << " > bound "
             << bound << " + 3se " << 3.0 * est.stderr_;
        report.worst_sample = what.str();
      }
      report.pass = false;
    }
  }
  return report;
}

ContractionFactor uniqueness_contraction_factor(double rho0, double t_horizon, double alpha,
                                                double sup_sigma) {
  if (!(rho0 > 0.0) || !(sup_sigma > 0.0) || t_horizon < 0.0)
    throw std::invalid_argument("uniqueness_contraction_factor: positive inputs required");
  ContractionFactor out;
  out.a = 2.0 * rho0 * t_horizon * (2.0 - alpha) * sup_sigma;
  out.t_max = 1.0 / (2.0 * rho0 * (2.0 - alpha) * sup_sigma);
  return out;
}

}  // namespace kal
