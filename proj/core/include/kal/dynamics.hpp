#ifndef KAL_DYNAMICS_HPP
#define KAL_DYNAMICS_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "kal/kernels.hpp"
#include "kal/rng.hpp"
#include "kal/vec3.hpp"

namespace kal {

/// Outgoing velocities of an elastic collision with scattering vector omega:
///   v_i' = v_i - [(v_i - v_j) . omega] omega
///   v_j' = v_j + [(v_i - v_j) . omega] omega
/// Conserves momentum and kinetic energy up to rounding and preserves the
/// relative speed exactly in exact arithmetic.
std::pair<Vec3, Vec3> elastic_collide(const Vec3& v_i, const Vec3& v_j, const Vec3& omega);

struct Event {
  enum class Kind { elastic, annihilation, null_event };
  double time = 0.0;
  Kind kind = Kind::null_event;
  std::size_t i = 0;  // i < j, valid at event time
  std::size_t j = 0;
  Vec3 omega{};       // elastic events only
};

enum class SchedulingMode { exact, majorant };

SchedulingMode scheduling_mode_from_string(const std::string& name);
std::string to_string(SchedulingMode mode);

/// The N-particle velocity configuration with volume Lambda and annihilation
/// probability alpha, plus the rate bookkeeping needed by the two schedulers.
///
/// Exact mode selects pairs proportionally to Sigma_B(v_i - v_j) using
/// per-particle row sums (prefix table rebuilt in the O(N) per-event update,
/// O(log N) selection). Majorant mode proposes uniform pairs at the dominating
/// rate built from max_speed and thins; rejected proposals are Null events.
///
/// A state is confined to one worker at a time; distinct realizations run
/// concurrently with independent streams.
class SystemState {
 public:
  SystemState(std::vector<Vec3> velocities, double lambda, double alpha,
              CollisionKernel kernel);

  std::size_t size() const { return velocities_.size(); }
  const std::vector<Vec3>& velocities() const { return velocities_; }
  const CollisionKernel& kernel() const { return kernel_; }
  double lambda() const { return lambda_; }
  double alpha() const { return alpha_; }
  double time() const { return time_; }
  /// Running majorant of particle speeds; never decreased.
  double max_speed() const { return max_speed_; }

  /// Generalized collision frequency sigma_N = sum_{i<j} Sigma_B(v_i - v_j),
  /// served from the incremental cache (closed form for Maxwell kernels).
  double sigma_n() const;
  /// Total jump rate sigma_N / Lambda; 0 for N < 2 (absorbing).
  double total_rate() const;
  /// Uniform-pair proposal rate used by the majorant scheduler.
  double majorant_rate() const;

  /// One event of the exact (Gillespie) scheduler. Requires N >= 2.
  Event step_exact(RngStream& rng);
  /// One proposal of the majorant (null-collision) scheduler. Requires N >= 2.
  Event step_majorant(RngStream& rng);

  /// Holding time to the next event/proposal; +infinity when the rate is 0.
  double draw_holding_time(SchedulingMode mode, RngStream& rng) const;
  /// Advance the clock and apply one jump/proposal. step_* == draw + apply.
  Event apply_jump(SchedulingMode mode, double holding_time, RngStream& rng);

  double kinetic_energy() const;
  Vec3 momentum() const;

  /// O(N^2) recomputation of sigma_N, for cache-coherence checks.
  double recompute_sigma_n() const;
  void rebuild_rate_cache();

 private:
  void ensure_rate_cache();
  void invalidate_rate_cache() { rates_valid_ = false; }
  std::pair<std::size_t, std::size_t> select_pair_exact(RngStream& rng);
  std::pair<std::size_t, std::size_t> select_pair_uniform(RngStream& rng);
  Event apply_channel(std::size_t i, std::size_t j, bool update_rows, RngStream& rng);
  void update_rows_elastic(std::size_t i, std::size_t j, const Vec3& vi_old, const Vec3& vj_old);
  void remove_pair(std::size_t i, std::size_t j, bool update_rows);
  void rebuild_row_prefix();

  std::vector<Vec3> velocities_;
  double lambda_;
  double alpha_;
  CollisionKernel kernel_;
  double time_ = 0.0;
  double max_speed_ = 0.0;

  bool uniform_rates_;             // Maxwell: closed-form N(N-1)/2, no row sums
  bool rates_valid_ = false;
  std::vector<double> row_sums_;   // S_i = sum_{j != i} Sigma_B(v_i - v_j)
  std::vector<double> row_prefix_; // cumulative S, rebuilt per event
  double sigma_n_cache_ = 0.0;
};

struct Snapshot {
  double t = 0.0;
  std::size_t n = 0;
  double energy = 0.0;   // sum_i |v_i|^2
  Vec3 momentum{};       // sum_i v_i
  std::vector<Vec3> velocities;  // empty unless retention was requested
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  std::uint64_t elastic_events = 0;
  std::uint64_t annihilation_events = 0;
  std::uint64_t null_events = 0;
};

/// Run the jump process, recording the state at each requested time (the
/// process is piecewise constant, so timestamps are exact). Continues past
/// absorption with zero rates so every snapshot is emitted.
Trajectory simulate(SystemState& state, std::span<const double> snapshot_times,
                    SchedulingMode mode, RngStream& rng, bool retain_velocities);

}  // namespace kal

#endif
