#include "kal/selfsim.hpp"

#include <cmath>

#include "kal/errors.hpp"
#include "kal/stats.hpp"

namespace kal {

namespace {

struct RawFrame {
  double n_f;
  Vec3 u_f;
  double t_f;
};

// Frame moments at one snapshot from the recorded (N, sum v, sum |v|^2).
RawFrame raw_frame(const EnsembleResult& ens, std::size_t snapshot, RealizationSubset subset) {
  const MomentSummary mom = ensemble_moments(ens, snapshot, subset);
  const double eps = ens.epsilon();
  const double n_f = eps * mom.n_mean;
  if (!(n_f > 0.0)) throw DomainError("zero temperature: no particles left in pooled sample");
  const Vec3 u_f = (1.0 / mom.n_mean) * mom.momentum_mean;
  // sum |v - u|^2 = sum |v|^2 - 2 u . sum v + N |u|^2
  const double centered =
      eps * (mom.energy_mean - 2.0 * dot(u_f, mom.momentum_mean) + mom.n_mean * norm2(u_f));
  const double t_f = centered / (3.0 * n_f);
  if (!(t_f > 0.0)) throw DomainError("zero temperature: degenerate velocity sample");
  return {n_f, u_f, t_f};
}

}  // namespace

SelfSimilarFrame compute_frame(const EnsembleResult& ensemble, double t,
                               RealizationSubset subset) {
  const std::size_t idx = ensemble.snapshot_index(t);
  const auto& times = ensemble.snapshot_times();
  SelfSimilarFrame out;
  // tau integrates sqrt(2) n_f sqrt(T_f) over the snapshot grid up to t.
  std::vector<double> grid(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(idx) + 1);
  std::vector<double> integrand(idx + 1);
  for (std::size_t j = 0; j <= idx; ++j) {
    const RawFrame f = raw_frame(ensemble, j, subset);
    integrand[j] = std::sqrt(2.0) * f.n_f * std::sqrt(f.t_f);
    if (j == idx) {
      out.n_f = f.n_f;
      out.u_f = f.u_f;
      out.t_f = f.t_f;
    }
  }
  out.tau = trapezoid(grid, integrand);
  return out;
}

std::vector<Vec3> rescale_velocities(const std::vector<Vec3>& sample,
                                     const SelfSimilarFrame& frame) {
  if (!(frame.t_f > 0.0)) throw DomainError("zero temperature: cannot rescale");
  const double inv = 1.0 / std::sqrt(2.0 * frame.t_f);
  std::vector<Vec3> out(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) out[i] = inv * (sample[i] - frame.u_f);
  return out;
}

std::vector<Vec3> unscale_velocities(const std::vector<Vec3>& rescaled,
                                     const SelfSimilarFrame& frame) {
  const double scale = std::sqrt(2.0 * frame.t_f);
  std::vector<Vec3> out(rescaled.size());
  for (std::size_t i = 0; i < rescaled.size(); ++i) out[i] = scale * rescaled[i] + frame.u_f;
  return out;
}

SpeedHistogram rescaled_speed_histogram(const EnsembleResult& ensemble, double t, int bins,
                                        double xi_max) {
  if (bins < 1 || !(xi_max > 0.0))
    throw std::invalid_argument("rescaled_speed_histogram: bins >= 1, xi_max > 0");
  const std::size_t idx = ensemble.snapshot_index(t);
  SpeedHistogram out;
  out.t = t;
  const SelfSimilarFrame frame = compute_frame(ensemble, t);
  out.tau = frame.tau;
  out.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b)
    out.edges[static_cast<std::size_t>(b)] = xi_max * static_cast<double>(b) / bins;
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  const double inv_scale = 1.0 / std::sqrt(2.0 * frame.t_f);
  double total = 0.0;
  std::vector<Vec3> buf;
  for (std::size_t r = 0; r < ensemble.realization_count(); ++r) {
    ensemble.load_velocities(r, idx, buf);
    for (const Vec3& v : buf) {
      const double speed = norm(v - frame.u_f) * inv_scale;
      int b = static_cast<int>(speed / xi_max * bins);
      if (b >= bins) b = bins - 1;  // overflow collects in the last bin
      counts[static_cast<std::size_t>(b)] += 1.0;
      total += 1.0;
    }
  }
  out.density.resize(static_cast<std::size_t>(bins));
  const double bin_width = xi_max / bins;
  for (int b = 0; b < bins; ++b)
    out.density[static_cast<std::size_t>(b)] =
        total > 0.0 ? counts[static_cast<std::size_t>(b)] / (total * bin_width) : 0.0;
  return out;
}

ConservedReport conserved_check(const EnsembleResult& ensemble,
                                std::span<const double> t_list, bool split_sample) {
  ConservedReport report;
  report.split_sample = split_sample;
  const double eps = ensemble.epsilon();
  const RealizationSubset frame_subset =
      split_sample ? RealizationSubset::first_half : RealizationSubset::all;
  const RealizationSubset sample_subset =
      split_sample ? RealizationSubset::second_half : RealizationSubset::all;

  for (double t : t_list) {
    const std::size_t idx = ensemble.snapshot_index(t);
    ConservedRow row;
    row.t = t;
    row.frame = compute_frame(ensemble, t, frame_subset);
    row.tau = row.frame.tau;

    const double n_f = row.frame.n_f;
    const Vec3 u = row.frame.u_f;
    const double t_f = row.frame.t_f;
    const double mom_scale = 1.0 / (n_f * std::sqrt(2.0 * t_f));
    const double en_scale = 1.0 / (2.0 * n_f * t_f);

    const std::size_t m = ensemble.realization_count();
    std::size_t lo = 0;
    std::size_t hi = m;
    if (sample_subset == RealizationSubset::second_half) lo = m / 2;
    const std::size_t count = hi - lo;
    std::vector<double> mass(count), px(count), py(count), pz(count), en(count);
    for (std::size_t r = lo; r < hi; ++r) {
      const SnapshotMoments& mom = ensemble.moments(r, idx);
      const double n = static_cast<double>(mom.n);
      mass[r - lo] = eps * n / n_f;
      const Vec3 centered = mom.momentum - n * u;
      px[r - lo] = eps * centered.x * mom_scale;
      py[r - lo] = eps * centered.y * mom_scale;
      pz[r - lo] = eps * centered.z * mom_scale;
      const double cen2 = mom.energy - 2.0 * dot(u, mom.momentum) + n * norm2(u);
      en[r - lo] = eps * cen2 * en_scale;
    }
    const MeanErr m_mass = mean_err(mass);
    const MeanErr m_px = mean_err(px);
    const MeanErr m_py = mean_err(py);
    const MeanErr m_pz = mean_err(pz);
    const MeanErr m_en = mean_err(en);
    row.dev_mass = m_mass.mean - 1.0;
    row.dev_momentum = {m_px.mean, m_py.mean, m_pz.mean};
    row.dev_energy = m_en.mean - 1.5;
    if (split_sample) {
      row.se_mass = m_mass.stderr_;
      if (m_px.stderr_ && m_py.stderr_ && m_pz.stderr_)
        row.se_momentum = Vec3{*m_px.stderr_, *m_py.stderr_, *m_pz.stderr_};
      row.se_energy = m_en.stderr_;
    }
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace kal
