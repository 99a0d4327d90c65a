#ifndef KAL_ENSEMBLE_HPP
#define KAL_ENSEMBLE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kal/config.hpp"
#include "kal/dynamics.hpp"
#include "kal/test_functions.hpp"

namespace kal {

struct SnapshotMoments {
  std::uint32_t n = 0;
  double energy = 0.0;  // sum |v_i|^2
  Vec3 momentum{};      // sum v_i
};

/// M independent realizations of the jump process with retained snapshot
/// records. Moment summaries stay in memory; full velocity snapshots are held
/// in memory up to the configured cap and spill to a binary sidecar file
/// beyond it (little-endian f64 records: snapshot index, N, then 3N values).
class EnsembleResult {
 public:
  EnsembleResult(const EnsembleResult&) = delete;
  EnsembleResult& operator=(const EnsembleResult&) = delete;
  EnsembleResult(EnsembleResult&&) noexcept;
  EnsembleResult& operator=(EnsembleResult&&) noexcept;
  ~EnsembleResult();

  std::size_t realization_count() const { return moments_.size(); }
  std::size_t snapshot_count() const { return snapshot_times_.size(); }
  const std::vector<double>& snapshot_times() const { return snapshot_times_; }
  double epsilon() const { return 1.0 / lambda_; }
  double lambda() const { return lambda_; }
  double alpha() const { return alpha_; }
  int n0() const { return n0_; }
  std::uint64_t seed() const { return seed_; }
  const CollisionKernel& kernel() const { return kernel_; }
  bool file_backed() const { return fd_ >= 0; }

  /// Snapshot index of time t (must match a grid point to 1e-9 absolute).
  std::size_t snapshot_index(double t) const;

  const SnapshotMoments& moments(std::size_t realization, std::size_t snapshot) const {
    return moments_[realization][snapshot];
  }

  /// Copy the retained velocity list into `out` (reusable buffer).
  void load_velocities(std::size_t realization, std::size_t snapshot,
                       std::vector<Vec3>& out) const;

  std::uint64_t total_events(Event::Kind kind) const;

 private:
  friend EnsembleResult run_ensemble(const RunConfig&);
  EnsembleResult() = default;

  std::vector<double> snapshot_times_;
  double lambda_ = 1.0;
  double alpha_ = 0.0;
  int n0_ = 0;
  std::uint64_t seed_ = 0;
  CollisionKernel kernel_ = CollisionKernel::maxwell();

  std::vector<std::vector<SnapshotMoments>> moments_;  // [realization][snapshot]
  std::uint64_t elastic_events_ = 0;
  std::uint64_t annihilation_events_ = 0;
  std::uint64_t null_events_ = 0;

  // In-memory velocity storage: flat per realization + offsets per snapshot.
  std::vector<std::vector<Vec3>> mem_;
  std::vector<std::vector<std::size_t>> mem_offsets_;
  // File-backed storage.
  int fd_ = -1;
  std::filesystem::path sidecar_path_;
  std::vector<std::vector<std::uint64_t>> file_offsets_;
};

/// Simulate M realizations (parallel over realizations, one derived stream
/// each; results are independent of worker count).
EnsembleResult run_ensemble(const RunConfig& config);

/// Unbiased factorial-moment estimator of < f_ell^eps(t), Phi > via ordered
/// distinct index tuples; O(N) per realization for tensor Phi, ell <= 3.
struct EmpiricalCorrelation {
  int ell = 0;
  std::string testfn_id;
  double value = 0.0;
  std::optional<double> stderr_;  // absent for M = 1
  double t = 0.0;
  std::size_t m = 0;
};

EmpiricalCorrelation estimate_correlation(const EnsembleResult& ensemble,
                                          const TensorTestFunction& testfn, double t);

/// Finite-N correlation error | <f2, phi x psi> - <f1,phi><f1,psi> | whose
/// vanishing expresses propagation of chaos. Standard error by delta method
/// over realization-level samples.
struct ChaosDefect {
  double value = 0.0;         // |signed_value|
  double signed_value = 0.0;
  double stderr_ = 0.0;
  double t = 0.0;
};

ChaosDefect chaos_defect(const EnsembleResult& ensemble, const UnaryTestFunction& phi,
                         const UnaryTestFunction& psi, double t);

/// Monte Carlo residual of the rescaled hierarchy identity in weak form:
///   <f_ell(t),Phi> - <f_ell(0),Phi>
///   - eps * sum_{i<j<=ell} int_0^t <f_ell(s), C_ij Phi> ds
///   -       sum_{i<=ell}   int_0^t <f_{ell+1}(s), D_i Phi> ds,
/// with omega integrals importance-sampled from the kernel's angular law and
/// time integrals by trapezoid on the snapshot grid.
struct BbgkyResidual {
  int ell = 0;
  std::string testfn_id;
  double t = 0.0;
  double residual = 0.0;
  double stderr_stat = 0.0;
  double quadrature_error = 0.0;
  double stderr_total = 0.0;
  std::string warning;  // set when the snapshot grid exceeds the tolerance
};

struct ResidualOptions {
  int omega_samples = 64;
  double max_quadrature_dt = 1.0 / 16.0;
};

BbgkyResidual bbgky_residual(const EnsembleResult& ensemble, const TensorTestFunction& testfn,
                             double t, const ResidualOptions& options = {});

/// Residuals at several snapshot times for the cost of one integrand sweep
/// (the time integrals are prefix sums on the shared grid).
std::vector<BbgkyResidual> bbgky_residual_batch(const EnsembleResult& ensemble,
                                                const TensorTestFunction& testfn,
                                                std::span<const double> t_list,
                                                const ResidualOptions& options = {});

/// Collision-bracket tuple sums of the weak-form identity at one
/// configuration, before any epsilon scaling: the ell-body term (pairs of
/// slots collided inside Phi) and the (ell+1)-body term (each slot collided
/// against an adjoined particle). Remaining slots are reduced by
/// inclusion-exclusion, so the cost is O(N^2 omega_samples) for ell <= 3.
/// Exposed for diagnostics and for brute-force oracle tests.
struct HierarchyBrackets {
  double ell_body = 0.0;
  double next_body = 0.0;
};

HierarchyBrackets hierarchy_brackets(std::span<const Vec3> velocities,
                                     const TensorTestFunction& testfn, double alpha,
                                     const CollisionKernel& kernel, int omega_samples,
                                     RngStream& rng);

/// Ensemble moment summary at one snapshot over a realization subset;
/// the building block of the self-similar frame and the moments CSV.
struct MomentSummary {
  double n_mean = 0.0;
  std::optional<double> n_stderr;
  double energy_mean = 0.0;
  std::optional<double> energy_stderr;
  Vec3 momentum_mean{};
  std::size_t m = 0;
};

enum class RealizationSubset { all, first_half, second_half };

MomentSummary ensemble_moments(const EnsembleResult& ensemble, std::size_t snapshot,
                               RealizationSubset subset = RealizationSubset::all);

}  // namespace kal

#endif
