#ifndef KAL_SELFSIM_HPP
#define KAL_SELFSIM_HPP

#include <optional>
#include <vector>

#include "kal/ensemble.hpp"
#include "kal/vec3.hpp"

namespace kal {

/// Self-similar frame built from ensemble moment estimates: number density
/// n_f, bulk velocity u_f, temperature T_f (3 n_f T_f = centered second
/// moment), and rescaled time tau(t) = sqrt(2) int_0^t n_f sqrt(T_f) ds.
struct SelfSimilarFrame {
  double n_f = 0.0;
  Vec3 u_f{};
  double t_f = 0.0;
  double tau = 0.0;
};

/// Frame at snapshot time t; tau by trapezoid on the snapshot grid up to t.
/// Throws DomainError when the pooled sample has zero temperature.
SelfSimilarFrame compute_frame(const EnsembleResult& ensemble, double t,
                               RealizationSubset subset = RealizationSubset::all);

/// xi_i = (v_i - u_f) / sqrt(2 T_f).
std::vector<Vec3> rescale_velocities(const std::vector<Vec3>& sample,
                                     const SelfSimilarFrame& frame);

/// Inverse map v_i = sqrt(2 T_f) xi_i + u_f.
std::vector<Vec3> unscale_velocities(const std::vector<Vec3>& rescaled,
                                     const SelfSimilarFrame& frame);

/// Deviation of the rescaled empirical (mass, momentum, energy) from the
/// conservative values (1, 0, 3/2). In same-sample mode the frame comes from
/// the same realizations and deviations are pure rounding; in split-sample
/// mode the frame comes from the first half-ensemble and the moments from the
/// second, so deviations are statistical and carry standard errors.
struct ConservedRow {
  double t = 0.0;
  double tau = 0.0;
  SelfSimilarFrame frame;
  double dev_mass = 0.0;
  Vec3 dev_momentum{};
  double dev_energy = 0.0;
  std::optional<double> se_mass;
  std::optional<Vec3> se_momentum;
  std::optional<double> se_energy;
};

struct ConservedReport {
  bool split_sample = false;
  std::vector<ConservedRow> rows;
};

ConservedReport conserved_check(const EnsembleResult& ensemble,
                                std::span<const double> t_list, bool split_sample);

/// Exploratory shape-stability output: pooled, density-normalized histogram
/// of the rescaled speeds |xi| at one snapshot (same-sample frame). No
/// acceptance threshold is attached to it.
struct SpeedHistogram {
  double t = 0.0;
  double tau = 0.0;
  std::vector<double> edges;    // bins + 1 entries, last bin collects overflow
  std::vector<double> density;  // integrates to 1 over the binned range
};

SpeedHistogram rescaled_speed_histogram(const EnsembleResult& ensemble, double t,
                                        int bins = 24, double xi_max = 4.0);

}  // namespace kal

#endif
