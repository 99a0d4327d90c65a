#include "kal/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kal/errors.hpp"
#include "kal/stats.hpp"

namespace kal {

std::pair<Vec3, Vec3> elastic_collide(const Vec3& v_i, const Vec3& v_j, const Vec3& omega) {
  const double q = dot(v_i - v_j, omega);
  return {v_i - q * omega, v_j + q * omega};
}

SchedulingMode scheduling_mode_from_string(const std::string& name) {
  if (name == "exact") return SchedulingMode::exact;
  if (name == "majorant") return SchedulingMode::majorant;
  throw ConfigError("unknown mode '" + name + "' (expected 'exact' or 'majorant')");
}

std::string to_string(SchedulingMode mode) {
  return mode == SchedulingMode::exact ? "exact" : "majorant";
}

SystemState::SystemState(std::vector<Vec3> velocities, double lambda, double alpha,
                         CollisionKernel kernel)
    : velocities_(std::move(velocities)),
      lambda_(lambda),
      alpha_(alpha),
      kernel_(std::move(kernel)),
      uniform_rates_(kernel_.family() == KernelFamily::maxwell) {
  if (!(lambda_ > 0.0)) throw ConfigError("lambda must be positive");
  if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
  for (const Vec3& v : velocities_) max_speed_ = std::max(max_speed_, norm(v));
}

double SystemState::sigma_n() const {
  const std::size_t n = size();
  if (n < 2) return 0.0;
  if (uniform_rates_) return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const_cast<SystemState*>(this)->ensure_rate_cache();
  return sigma_n_cache_;
}

double SystemState::total_rate() const { return size() < 2 ? 0.0 : sigma_n() / lambda_; }

double SystemState::majorant_rate() const {
  const std::size_t n = size();
  if (n < 2) return 0.0;
  const double b_hat = kernel_.c_b() * std::pow(2.0 * max_speed_, kernel_.gamma());
  return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1) * b_hat / lambda_;
}

double SystemState::kinetic_energy() const {
  std::vector<double> sq(velocities_.size());
  for (std::size_t i = 0; i < velocities_.size(); ++i) sq[i] = norm2(velocities_[i]);
  return stable_sum(std::move(sq));
}

Vec3 SystemState::momentum() const {
  std::vector<double> c(velocities_.size());
  Vec3 p;
  for (std::size_t i = 0; i < velocities_.size(); ++i) c[i] = velocities_[i].x;
  p.x = stable_sum(c);
  for (std::size_t i = 0; i < velocities_.size(); ++i) c[i] = velocities_[i].y;
  p.y = stable_sum(c);
  for (std::size_t i = 0; i < velocities_.size(); ++i) c[i] = velocities_[i].z;
  p.z = stable_sum(std::move(c));
  return p;
}

double SystemState::recompute_sigma_n() const {
  const std::size_t n = size();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      total += sigma_b(kernel_, velocities_[i] - velocities_[j]);
  return total;
}

void SystemState::rebuild_rate_cache() {
  if (uniform_rates_) {
    rates_valid_ = true;
    return;
  }
  const std::size_t n = size();
  row_sums_.assign(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = sigma_b(kernel_, velocities_[i] - velocities_[j]);
      row_sums_[i] += s;
      row_sums_[j] += s;
    }
  }
  rebuild_row_prefix();
  rates_valid_ = true;
}

void SystemState::rebuild_row_prefix() {
  const std::size_t n = row_sums_.size();
  row_prefix_.resize(n);
  double cum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cum += row_sums_[i];
    row_prefix_[i] = cum;
  }
  sigma_n_cache_ = 0.5 * cum;
}

void SystemState::ensure_rate_cache() {
  if (!rates_valid_) rebuild_rate_cache();
}

double SystemState::draw_holding_time(SchedulingMode mode, RngStream& rng) const {
  const double rate = mode == SchedulingMode::exact ? total_rate() : majorant_rate();
  return rng.exponential(rate);
}

std::pair<std::size_t, std::size_t> SystemState::select_pair_uniform(RngStream& rng) {
  const std::size_t n = size();
  const std::size_t i = rng.uniform_index(n);
  std::size_t j = rng.uniform_index(n - 1);
  if (j >= i) ++j;
  return {std::min(i, j), std::max(i, j)};
}

std::pair<std::size_t, std::size_t> SystemState::select_pair_exact(RngStream& rng) {
  if (uniform_rates_) return select_pair_uniform(rng);
  ensure_rate_cache();
  // First particle with probability S_i / (2 sigma_N).
  const double target = rng.uniform() * row_prefix_.back();
  const auto it = std::upper_bound(row_prefix_.begin(), row_prefix_.end(), target);
  std::size_t i = static_cast<std::size_t>(it - row_prefix_.begin());
  if (i >= size()) i = size() - 1;
  // Partner with probability Sigma_B(v_i - v_j) / S_i. The row sum is served
  // from the incremental cache, so clamp against fresh-evaluation drift.
  const double row_target = rng.uniform() * row_sums_[i];
  double cum = 0.0;
  std::size_t j = i == 0 ? 1 : 0;
  bool found = false;
  for (std::size_t k = 0; k < size(); ++k) {
    if (k == i) continue;
    const double w = sigma_b(kernel_, velocities_[i] - velocities_[k]);
    if (w <= 0.0) continue;
    cum += w;
    j = k;
    if (cum > row_target) {
      found = true;
      break;
    }
  }
  if (!found && cum <= 0.0)
    throw StateError("pair selection reached a zero-rate row");
  return {std::min(i, j), std::max(i, j)};
}

void SystemState::update_rows_elastic(std::size_t i, std::size_t j, const Vec3& vi_old,
                                      const Vec3& vj_old) {
  const std::size_t n = size();
  const Vec3& vi_new = velocities_[i];
  const Vec3& vj_new = velocities_[j];
  double si = sigma_b(kernel_, vi_new - vj_new);
  double sj = si;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == i || k == j) continue;
    const Vec3& vk = velocities_[k];
    const double ai = sigma_b(kernel_, vk - vi_new);
    const double aj = sigma_b(kernel_, vk - vj_new);
    const double bi = sigma_b(kernel_, vk - vi_old);
    const double bj = sigma_b(kernel_, vk - vj_old);
    row_sums_[k] = std::max(0.0, row_sums_[k] + (ai - bi) + (aj - bj));
    si += ai;
    sj += aj;
  }
  row_sums_[i] = si;
  row_sums_[j] = sj;
  rebuild_row_prefix();
}

void SystemState::remove_pair(std::size_t i, std::size_t j, bool update_rows) {
  if (update_rows && !uniform_rates_) {
    const Vec3 vi = velocities_[i];
    const Vec3 vj = velocities_[j];
    for (std::size_t k = 0; k < size(); ++k) {
      if (k == i || k == j) continue;
      row_sums_[k] = std::max(0.0, row_sums_[k] - sigma_b(kernel_, velocities_[k] - vi) -
                                       sigma_b(kernel_, velocities_[k] - vj));
    }
    row_sums_.erase(row_sums_.begin() + static_cast<std::ptrdiff_t>(j));
    row_sums_.erase(row_sums_.begin() + static_cast<std::ptrdiff_t>(i));
  }
  velocities_.erase(velocities_.begin() + static_cast<std::ptrdiff_t>(j));
  velocities_.erase(velocities_.begin() + static_cast<std::ptrdiff_t>(i));
  if (update_rows && !uniform_rates_) rebuild_row_prefix();
}

Event SystemState::apply_channel(std::size_t i, std::size_t j, bool update_rows,
                                 RngStream& rng) {
  Event ev;
  ev.time = time_;
  ev.i = i;
  ev.j = j;
  if (rng.uniform() < alpha_) {
    ev.kind = Event::Kind::annihilation;
    remove_pair(i, j, update_rows);
    return ev;
  }
  ev.kind = Event::Kind::elastic;
  ev.omega = sample_omega(kernel_, velocities_[i] - velocities_[j], rng);
  const Vec3 vi_old = velocities_[i];
  const Vec3 vj_old = velocities_[j];
  auto [vi_new, vj_new] = elastic_collide(vi_old, vj_old, ev.omega);
  velocities_[i] = vi_new;
  velocities_[j] = vj_new;
  max_speed_ = std::max({max_speed_, norm(vi_new), norm(vj_new)});
  if (update_rows && !uniform_rates_) update_rows_elastic(i, j, vi_old, vj_old);
  return ev;
}

Event SystemState::apply_jump(SchedulingMode mode, double holding_time, RngStream& rng) {
  if (size() < 2) throw StateError("absorbing configuration: fewer than two particles");
  if (!std::isfinite(holding_time)) throw StateError("zero total rate: no next event exists");
  time_ += holding_time;
  if (mode == SchedulingMode::exact) {
    auto [i, j] = select_pair_exact(rng);
    return apply_channel(i, j, /*update_rows=*/true, rng);
  }
  // Majorant proposal: uniform pair, thin by Sigma_B / B_hat.
  const double b_hat = kernel_.c_b() * std::pow(2.0 * max_speed_, kernel_.gamma());
  auto [i, j] = select_pair_uniform(rng);
  const double s = sigma_b(kernel_, velocities_[i] - velocities_[j]);
  if (s > b_hat * (1.0 + 1e-12))
    throw InvariantViolation("majorant breached: acceptance ratio " +
                             std::to_string(s / b_hat) + " exceeds 1");
  if (rng.uniform() * b_hat >= s) {
    Event ev;
    ev.time = time_;
    ev.kind = Event::Kind::null_event;
    ev.i = i;
    ev.j = j;
    return ev;
  }
  invalidate_rate_cache();  // exact-mode rows are rebuilt lazily if needed again
  return apply_channel(i, j, /*update_rows=*/false, rng);
}

Event SystemState::step_exact(RngStream& rng) {
  if (size() < 2) throw StateError("absorbing configuration: fewer than two particles");
  return apply_jump(SchedulingMode::exact, draw_holding_time(SchedulingMode::exact, rng), rng);
}

Event SystemState::step_majorant(RngStream& rng) {
  if (size() < 2) throw StateError("absorbing configuration: fewer than two particles");
  return apply_jump(SchedulingMode::majorant, draw_holding_time(SchedulingMode::majorant, rng),
                    rng);
}

Trajectory simulate(SystemState& state, std::span<const double> snapshot_times,
                    SchedulingMode mode, RngStream& rng, bool retain_velocities) {
  Trajectory out;
  if (snapshot_times.empty()) return out;
  for (std::size_t i = 1; i < snapshot_times.size(); ++i)
    if (snapshot_times[i] < snapshot_times[i - 1])
      throw ConfigError("snapshot times must be nondecreasing");
  if (snapshot_times.front() < state.time())
    throw ConfigError("snapshot times must start at or after the current state time");

  std::size_t idx = 0;
  auto record_through = [&](double horizon) {
    while (idx < snapshot_times.size() && snapshot_times[idx] < horizon) {
      Snapshot snap;
      snap.t = snapshot_times[idx];
      snap.n = state.size();
      snap.energy = state.kinetic_energy();
      snap.momentum = state.momentum();
      if (retain_velocities) snap.velocities = state.velocities();
      out.snapshots.push_back(std::move(snap));
      ++idx;
    }
  };

  while (idx < snapshot_times.size()) {
    if (state.size() < 2) {
      record_through(std::numeric_limits<double>::infinity());
      break;
    }
    const double dt = state.draw_holding_time(mode, rng);
    if (!std::isfinite(dt)) {
      // Dynamically frozen (zero rate): state never changes again.
      record_through(std::numeric_limits<double>::infinity());
      break;
    }
    const double t_next = state.time() + dt;
    record_through(t_next);
    if (idx >= snapshot_times.size() && t_next > snapshot_times.back()) break;
    const Event ev = state.apply_jump(mode, dt, rng);
    switch (ev.kind) {
      case Event::Kind::elastic: ++out.elastic_events; break;
      case Event::Kind::annihilation: ++out.annihilation_events; break;
      case Event::Kind::null_event: ++out.null_events; break;
    }
  }
  return out;
}

}  // namespace kal
