#include "kal/ensemble.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "kal/errors.hpp"
#include "kal/parallel.hpp"
#include "kal/stats.hpp"

static_assert(std::endian::native == std::endian::little,
              "velocity sidecar assumes a little-endian host");

namespace kal {

EnsembleResult::EnsembleResult(EnsembleResult&& other) noexcept { *this = std::move(other); }

EnsembleResult& EnsembleResult::operator=(EnsembleResult&& other) noexcept {
  if (this == &other) return *this;
  if (fd_ >= 0) ::close(fd_);
  snapshot_times_ = std::move(other.snapshot_times_);
  lambda_ = other.lambda_;
  alpha_ = other.alpha_;
  n0_ = other.n0_;
  seed_ = other.seed_;
  kernel_ = other.kernel_;
  moments_ = std::move(other.moments_);
  elastic_events_ = other.elastic_events_;
  annihilation_events_ = other.annihilation_events_;
  null_events_ = other.null_events_;
  mem_ = std::move(other.mem_);
  mem_offsets_ = std::move(other.mem_offsets_);
  fd_ = other.fd_;
  other.fd_ = -1;
  sidecar_path_ = std::move(other.sidecar_path_);
  file_offsets_ = std::move(other.file_offsets_);
  return *this;
}

EnsembleResult::~EnsembleResult() {
  if (fd_ >= 0) ::close(fd_);
}

std::size_t EnsembleResult::snapshot_index(double t) const {
  for (std::size_t i = 0; i < snapshot_times_.size(); ++i)
    if (std::abs(snapshot_times_[i] - t) <= 1e-9) return i;
  throw std::invalid_argument("t = " + std::to_string(t) + " is not a snapshot time");
}

void EnsembleResult::load_velocities(std::size_t realization, std::size_t snapshot,
                                     std::vector<Vec3>& out) const {
  const std::size_t n = moments_[realization][snapshot].n;
  out.resize(n);
  if (fd_ < 0) {
    const auto& flat = mem_[realization];
    const std::size_t start = mem_offsets_[realization][snapshot];
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(start),
              flat.begin() + static_cast<std::ptrdiff_t>(start + n), out.begin());
    return;
  }
  const std::uint64_t offset = file_offsets_[realization][snapshot] + 2 * sizeof(double);
  const std::size_t bytes = n * sizeof(Vec3);
  std::size_t done = 0;
  while (done < bytes) {
    const ssize_t got = ::pread(fd_, reinterpret_cast<char*>(out.data()) + done,
                                bytes - done, static_cast<off_t>(offset + done));
    if (got <= 0) throw IoError("sidecar read failed at offset " + std::to_string(offset));
    done += static_cast<std::size_t>(got);
  }
}

std::uint64_t EnsembleResult::total_events(Event::Kind kind) const {
  switch (kind) {
    case Event::Kind::elastic: return elastic_events_;
    case Event::Kind::annihilation: return annihilation_events_;
    case Event::Kind::null_event: return null_events_;
  }
  return 0;
}

EnsembleResult run_ensemble(const RunConfig& config) {
  config.validate();
  if (config.n0 % 2 != 0) throw ConfigError("N0 must be even");

  EnsembleResult out;
  out.snapshot_times_ = config.snapshot_times();
  out.lambda_ = config.lambda;
  out.alpha_ = config.alpha;
  out.n0_ = config.n0;
  out.seed_ = config.seed;
  out.kernel_ = config.make_kernel();

  const std::size_t m = static_cast<std::size_t>(config.ensemble_m);
  const std::size_t snaps = out.snapshot_times_.size();
  out.moments_.resize(m);

  const std::uint64_t worst_case_bytes = static_cast<std::uint64_t>(m) * snaps *
                                         static_cast<std::uint64_t>(config.n0) * sizeof(Vec3);
  const bool in_memory = worst_case_bytes <= config.memory_cap_bytes;

  std::vector<std::uint64_t> elastic(m, 0), annihilated(m, 0), nulls(m, 0);

  auto simulate_one = [&](std::size_t r, std::vector<Vec3>& flat,
                          std::vector<std::size_t>& offsets) {
    RngStream stream(config.seed, {stream_tag::realization, r});
    std::vector<Vec3> v0(static_cast<std::size_t>(config.n0));
    for (auto& v : v0) v = config.init.sample(stream);
    SystemState state(std::move(v0), config.lambda, config.alpha, out.kernel_);
    Trajectory traj = simulate(state, out.snapshot_times_, config.mode, stream,
                               /*retain_velocities=*/true);
    elastic[r] = traj.elastic_events;
    annihilated[r] = traj.annihilation_events;
    nulls[r] = traj.null_events;
    auto& mom = out.moments_[r];
    mom.resize(snaps);
    flat.clear();
    offsets.resize(snaps);
    for (std::size_t s = 0; s < snaps; ++s) {
      const Snapshot& snap = traj.snapshots[s];
      mom[s].n = static_cast<std::uint32_t>(snap.n);
      mom[s].energy = snap.energy;
      mom[s].momentum = snap.momentum;
      offsets[s] = flat.size();
      flat.insert(flat.end(), snap.velocities.begin(), snap.velocities.end());
    }
  };

  if (in_memory) {
    out.mem_.resize(m);
    out.mem_offsets_.resize(m);
    parallel_for(m, [&](std::size_t r) { simulate_one(r, out.mem_[r], out.mem_offsets_[r]); });
  } else {
    std::filesystem::path dir(config.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    out.sidecar_path_ = dir / "velocities.bin";
    std::ofstream sidecar(out.sidecar_path_, std::ios::binary | std::ios::trunc);
    if (!sidecar) throw IoError("cannot open sidecar '" + out.sidecar_path_.string() + "'");
    out.file_offsets_.resize(m);
    // Chunked execution keeps only `workers` trajectories in memory while the
    // file is written in realization-index order (deterministic layout).
    const std::size_t chunk = std::max<std::size_t>(1, worker_count());
    std::vector<std::vector<Vec3>> flats(chunk);
    std::vector<std::vector<std::size_t>> offs(chunk);
    std::uint64_t cursor = 0;
    for (std::size_t base = 0; base < m; base += chunk) {
      const std::size_t count = std::min(chunk, m - base);
      parallel_for(count, [&](std::size_t k) { simulate_one(base + k, flats[k], offs[k]); });
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t r = base + k;
        auto& table = out.file_offsets_[r];
        table.resize(snaps);
        for (std::size_t s = 0; s < snaps; ++s) {
          table[s] = cursor;
          const double header[2] = {static_cast<double>(s),
                                    static_cast<double>(out.moments_[r][s].n)};
          sidecar.write(reinterpret_cast<const char*>(header), sizeof(header));
          const std::size_t n = out.moments_[r][s].n;
          sidecar.write(reinterpret_cast<const char*>(flats[k].data() + offs[k][s]),
                        static_cast<std::streamsize>(n * sizeof(Vec3)));
          cursor += sizeof(header) + n * sizeof(Vec3);
        }
        flats[k].clear();
        flats[k].shrink_to_fit();
      }
    }
    sidecar.close();
    if (!sidecar) throw IoError("sidecar write failed");
    out.fd_ = ::open(out.sidecar_path_.c_str(), O_RDONLY);
    if (out.fd_ < 0) throw IoError("cannot reopen sidecar '" + out.sidecar_path_.string() + "'");
  }

  for (std::size_t r = 0; r < m; ++r) {
    out.elastic_events_ += elastic[r];
    out.annihilation_events_ += annihilated[r];
    out.null_events_ += nulls[r];
  }
  return out;
}

namespace {

// Per-particle evaluations of one unary factor.
void eval_factor(const UnaryTestFunction& f, std::span<const Vec3> v,
                 std::vector<double>& out) {
  out.resize(v.size());
  for (std::size_t p = 0; p < v.size(); ++p) out[p] = f(v[p]);
}

// Sum of Phi over ordered tuples of distinct particle indices, by
// inclusion-exclusion over coinciding indices. Permutation-invariant
// reductions keep the result independent of particle ordering.
double ordered_tuple_sum(const std::vector<Vec3>& v, const TensorTestFunction& fn) {
  // Inclusion-exclusion is exact, so configurations with fewer than ell
  // particles contribute 0 without special-casing.
  const int ell = fn.ell();
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> c;
  switch (ell) {
    case 1: {
      eval_factor(fn.factor(0), v, a);
      return stable_sum(a);
    }
    case 2: {
      eval_factor(fn.factor(0), v, a);
      eval_factor(fn.factor(1), v, b);
      std::vector<double> ab(v.size());
      for (std::size_t p = 0; p < v.size(); ++p) ab[p] = a[p] * b[p];
      return stable_sum(a) * stable_sum(b) - stable_sum(std::move(ab));
    }
    case 3: {
      eval_factor(fn.factor(0), v, a);
      eval_factor(fn.factor(1), v, b);
      eval_factor(fn.factor(2), v, c);
      const std::size_t n = v.size();
      std::vector<double> ab(n), ac(n), bc(n), abc(n);
      for (std::size_t p = 0; p < n; ++p) {
        ab[p] = a[p] * b[p];
        ac[p] = a[p] * c[p];
        bc[p] = b[p] * c[p];
        abc[p] = ab[p] * c[p];
      }
      const double s1 = stable_sum(a), s2 = stable_sum(b), s3 = stable_sum(c);
      const double s12 = stable_sum(std::move(ab)), s13 = stable_sum(std::move(ac)),
                   s23 = stable_sum(std::move(bc)), s123 = stable_sum(std::move(abc));
      return s1 * s2 * s3 - s12 * s3 - s13 * s2 - s23 * s1 + 2.0 * s123;
    }
    default:
      throw std::invalid_argument("ordered_tuple_sum: arity must be 1..3");
  }
}

double int_pow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

}  // namespace

EmpiricalCorrelation estimate_correlation(const EnsembleResult& ensemble,
                                          const TensorTestFunction& testfn, double t) {
  const std::size_t idx = ensemble.snapshot_index(t);
  const std::size_t m = ensemble.realization_count();
  std::vector<double> samples(m);
  parallel_for(m, [&](std::size_t r) {
    std::vector<Vec3> buf;
    ensemble.load_velocities(r, idx, buf);
    samples[r] = ordered_tuple_sum(buf, testfn);
  });
  const MeanErr me = mean_err(samples);
  const double scale = int_pow(ensemble.epsilon(), testfn.ell());
  EmpiricalCorrelation out;
  out.ell = testfn.ell();
  out.testfn_id = testfn.id();
  out.value = scale * me.mean;
  if (me.stderr_) out.stderr_ = scale * *me.stderr_;
  out.t = t;
  out.m = m;
  return out;
}

ChaosDefect chaos_defect(const EnsembleResult& ensemble, const UnaryTestFunction& phi,
                         const UnaryTestFunction& psi, double t) {
  const std::size_t idx = ensemble.snapshot_index(t);
  const std::size_t m = ensemble.realization_count();
  const double eps = ensemble.epsilon();
  std::vector<double> a(m), b(m), c(m);
  parallel_for(m, [&](std::size_t r) {
    std::vector<Vec3> buf;
    ensemble.load_velocities(r, idx, buf);
    std::vector<double> fp(buf.size()), fq(buf.size()), fpq(buf.size());
    for (std::size_t p = 0; p < buf.size(); ++p) {
      fp[p] = phi(buf[p]);
      fq[p] = psi(buf[p]);
      fpq[p] = fp[p] * fq[p];
    }
    const double sp = stable_sum(std::move(fp));
    const double sq = stable_sum(std::move(fq));
    const double spq = stable_sum(std::move(fpq));
    a[r] = eps * eps * (sp * sq - spq);
    b[r] = eps * sp;
    c[r] = eps * sq;
  });
  const double ma = pairwise_sum(a) / static_cast<double>(m);
  const double mb = pairwise_sum(b) / static_cast<double>(m);
  const double mc = pairwise_sum(c) / static_cast<double>(m);
  ChaosDefect out;
  out.t = t;
  out.signed_value = ma - mb * mc;
  out.value = std::abs(out.signed_value);
  if (m >= 2) {
    const double vaa = sample_covariance(a, a);
    const double vbb = sample_covariance(b, b);
    const double vcc = sample_covariance(c, c);
    const double vab = sample_covariance(a, b);
    const double vac = sample_covariance(a, c);
    const double vbc = sample_covariance(b, c);
    // Delta method for D = A - B C with gradient (1, -mc, -mb).
    const double var = vaa + mc * mc * vbb + mb * mb * vcc - 2.0 * mc * vab - 2.0 * mb * vac +
                       2.0 * mb * mc * vbc;
    out.stderr_ = std::sqrt(std::max(0.0, var / static_cast<double>(m)));
  }
  return out;
}

HierarchyBrackets hierarchy_brackets(std::span<const Vec3> v, const TensorTestFunction& fn,
                                     double alpha, const CollisionKernel& kernel,
                                     int omega_samples, RngStream& rng) {
  const int ell = fn.ell();
  if (ell > 3) throw std::invalid_argument("hierarchy_brackets: ell <= 3 supported");
  if (omega_samples < 1) throw std::invalid_argument("hierarchy_brackets: omega_samples >= 1");
  const std::size_t n = v.size();
  const double one_minus_alpha = 1.0 - alpha;

  // Per-particle factor tables f_i(v_p), their sums, and pair-product sums
  // (needed by the two-free-slot reduction at ell = 3).
  std::vector<std::vector<double>> fv(static_cast<std::size_t>(ell));
  double fsum[3] = {0.0, 0.0, 0.0};
  double fsum2[3][3] = {};
  bool slot_const[3] = {true, true, true};
  for (int i = 0; i < ell; ++i) {
    eval_factor(fn.factor(i), v, fv[static_cast<std::size_t>(i)]);
    std::vector<double> copy = fv[static_cast<std::size_t>(i)];
    fsum[i] = stable_sum(std::move(copy));
    slot_const[i] = fn.factor(i).is_constant();
  }
  for (int i = 0; i < ell; ++i)
    for (int j = i + 1; j < ell; ++j) {
      std::vector<double> prod(n);
      for (std::size_t p = 0; p < n; ++p) prod[p] = fv[i][p] * fv[j][p];
      fsum2[i][j] = stable_sum(std::move(prod));
    }
  bool any_mc = false;
  for (int i = 0; i < ell; ++i) any_mc = any_mc || !slot_const[i];

  // Ordered distinct tuples over the remaining slots, restricted to
  // particles != p, q: 0 slots -> 1; 1 slot g -> S_g - g_p - g_q;
  // 2 slots g,h -> (S_g - g_p - g_q)(S_h - h_p - h_q) - (S_gh - gh_p - gh_q).
  auto rest_one = [&](int slot, std::size_t p, std::size_t q) {
    return fsum[slot] - fv[slot][p] - fv[slot][q];
  };
  auto rest_two = [&](int s1, int s2, std::size_t p, std::size_t q) {
    const double cross = fsum2[std::min(s1, s2)][std::max(s1, s2)] -
                         fv[s1][p] * fv[s2][p] - fv[s1][q] * fv[s2][q];
    return rest_one(s1, p, q) * rest_one(s2, p, q) - cross;
  };

  HierarchyBrackets out;
  for (std::size_t p = 0; p + 1 < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      const Vec3 u = v[p] - v[q];
      const double s = sigma_b(kernel, u);
      if (s == 0.0) continue;

      // Monte Carlo averages over shared omega draws:
      //   avgD_x[i]      of f_i(x') for x in {p, q}
      //   avgC_fwd[i][j] of f_i(p') f_j(q'), avgC_rev of f_i(q') f_j(p')
      double avg_d_p[3] = {};
      double avg_d_q[3] = {};
      double avg_c_fwd[3][3] = {};
      double avg_c_rev[3][3] = {};
      if (any_mc) {
        const OmegaSampler sampler(u);
        double prime_p[3];
        double prime_q[3];
        for (int draw = 0; draw < omega_samples; ++draw) {
          const Vec3 omega = sampler.draw(rng);
          const double proj = dot(u, omega);
          const Vec3 vp_prime = v[p] - proj * omega;
          const Vec3 vq_prime = v[q] + proj * omega;
          for (int i = 0; i < ell; ++i) {
            prime_p[i] = slot_const[i] ? fv[i][p] : fn.factor(i)(vp_prime);
            prime_q[i] = slot_const[i] ? fv[i][q] : fn.factor(i)(vq_prime);
            avg_d_p[i] += prime_p[i];
            avg_d_q[i] += prime_q[i];
          }
          for (int i = 0; i < ell; ++i)
            for (int j = i + 1; j < ell; ++j) {
              avg_c_fwd[i][j] += prime_p[i] * prime_q[j];
              avg_c_rev[i][j] += prime_q[i] * prime_p[j];
            }
        }
        const double inv = 1.0 / omega_samples;
        for (int i = 0; i < ell; ++i) {
          avg_d_p[i] *= inv;
          avg_d_q[i] *= inv;
          for (int j = i + 1; j < ell; ++j) {
            avg_c_fwd[i][j] *= inv;
            avg_c_rev[i][j] *= inv;
          }
        }
      }

      // (ell+1)-body: slot i collides against the adjoined particle.
      for (int i = 0; i < ell; ++i) {
        const double br_p = slot_const[i]
                                ? -alpha * fv[i][p]
                                : one_minus_alpha * avg_d_p[i] - fv[i][p];
        const double br_q = slot_const[i]
                                ? -alpha * fv[i][q]
                                : one_minus_alpha * avg_d_q[i] - fv[i][q];
        double rest = 1.0;
        if (ell == 2) rest = rest_one(1 - i, p, q);
        if (ell == 3) {
          const int o1 = i == 0 ? 1 : 0;
          const int o2 = i == 2 ? 1 : 2;
          rest = rest_two(o1, o2, p, q);
        }
        out.next_body += s * (br_p + br_q) * rest;
      }

      // ell-body: slots (i, j) collide with each other (both tuple orders).
      for (int i = 0; i < ell; ++i) {
        for (int j = i + 1; j < ell; ++j) {
          double fwd;
          double rev;
          if (slot_const[i] && slot_const[j]) {
            fwd = -alpha * fv[i][p] * fv[j][q];
            rev = -alpha * fv[i][q] * fv[j][p];
          } else {
            fwd = one_minus_alpha * avg_c_fwd[i][j] - fv[i][p] * fv[j][q];
            rev = one_minus_alpha * avg_c_rev[i][j] - fv[i][q] * fv[j][p];
          }
          double rest = 1.0;
          if (ell == 3) rest = rest_one(3 - i - j, p, q);
          out.ell_body += s * (fwd + rev) * rest;
        }
      }
    }
  }
  return out;
}

namespace {

// Epsilon-scaled integrand of the weak-form identity at one snapshot:
// eps * <f_ell, C Phi> + <f_{ell+1}, D Phi>, both scaling as eps^{ell+1}.
double bracket_sums(const std::vector<Vec3>& v, const TensorTestFunction& fn, double alpha,
                    const CollisionKernel& kernel, int omega_samples, double eps,
                    RngStream& rng) {
  const HierarchyBrackets sums = hierarchy_brackets(v, fn, alpha, kernel, omega_samples, rng);
  return int_pow(eps, fn.ell() + 1) * (sums.ell_body + sums.next_body);
}

}  // namespace

std::vector<BbgkyResidual> bbgky_residual_batch(const EnsembleResult& ensemble,
                                                const TensorTestFunction& testfn,
                                                std::span<const double> t_list,
                                                const ResidualOptions& options) {
  if (testfn.ell() > 3) throw std::invalid_argument("bbgky_residual: ell <= 3 supported");
  if (t_list.empty()) return {};
  const std::size_t m = ensemble.realization_count();
  const auto& times = ensemble.snapshot_times();
  const double eps = ensemble.epsilon();
  const int ell = testfn.ell();

  std::vector<std::size_t> stops;
  stops.reserve(t_list.size());
  std::size_t max_stop = 0;
  for (double t : t_list) {
    stops.push_back(ensemble.snapshot_index(t));
    max_stop = std::max(max_stop, stops.back());
  }

  double max_dt = 0.0;
  for (std::size_t j = 1; j <= max_stop; ++j) max_dt = std::max(max_dt, times[j] - times[j - 1]);
  std::string warning;
  if (max_stop > 0 && max_dt > options.max_quadrature_dt + 1e-12)
    warning = "snapshot grid spacing " + std::to_string(max_dt) +
              " exceeds quadrature tolerance " + std::to_string(options.max_quadrature_dt);

  // One integrand sweep per realization; residuals at every requested time
  // follow from prefix trapezoid integrals.
  const std::size_t cols = max_stop + 1;
  std::vector<double> integrand_flat(m * cols);
  std::vector<double> tuple_flat(m * cols);
  parallel_for(m, [&](std::size_t r) {
    RngStream rng(ensemble.seed(), {stream_tag::bbgky_omega, r});
    std::vector<Vec3> buf;
    double* integrand = integrand_flat.data() + r * cols;
    double* tuples = tuple_flat.data() + r * cols;
    for (std::size_t j = 0; j < cols; ++j) {
      ensemble.load_velocities(r, j, buf);
      integrand[j] = bracket_sums(buf, testfn, ensemble.alpha(), ensemble.kernel(),
                                  options.omega_samples, eps, rng);
      tuples[j] = ordered_tuple_sum(buf, testfn);
    }
  });

  // Mean integrand, for the Richardson quadrature-bias estimate.
  std::vector<double> mean_integrand(cols, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < cols; ++j) mean_integrand[j] += integrand_flat[r * cols + j];
  for (auto& g : mean_integrand) g /= static_cast<double>(m);

  std::vector<BbgkyResidual> results;
  results.reserve(t_list.size());
  std::vector<double> residuals(m);
  for (std::size_t k = 0; k < t_list.size(); ++k) {
    const std::size_t stop = stops[k];
    const std::span<const double> grid(times.data(), stop + 1);
    for (std::size_t r = 0; r < m; ++r) {
      const double* integrand = integrand_flat.data() + r * cols;
      const double* tuples = tuple_flat.data() + r * cols;
      const double integral = trapezoid(grid, std::span<const double>(integrand, stop + 1));
      residuals[r] = int_pow(eps, ell) * (tuples[stop] - tuples[0]) - integral;
    }
    const MeanErr me = mean_err(residuals);
    BbgkyResidual out;
    out.ell = ell;
    out.testfn_id = testfn.id();
    out.t = t_list[k];
    out.residual = me.mean;
    out.stderr_stat = me.stderr_.value_or(0.0);
    out.warning = warning;
    // Full grid vs every-other-point grid on the mean integrand.
    const double full = trapezoid(grid, std::span<const double>(mean_integrand.data(), stop + 1));
    std::vector<double> coarse_t;
    std::vector<double> coarse_g;
    for (std::size_t j = 0; j <= stop; j += 2) {
      coarse_t.push_back(times[j]);
      coarse_g.push_back(mean_integrand[j]);
    }
    if (coarse_t.back() != times[stop]) {
      coarse_t.push_back(times[stop]);
      coarse_g.push_back(mean_integrand[stop]);
    }
    const double coarse = trapezoid(coarse_t, coarse_g);
    out.quadrature_error = std::abs(full - coarse) / 3.0;
    out.stderr_total = std::hypot(out.stderr_stat, out.quadrature_error);
    results.push_back(std::move(out));
  }
  return results;
}

BbgkyResidual bbgky_residual(const EnsembleResult& ensemble, const TensorTestFunction& testfn,
                             double t, const ResidualOptions& options) {
  return bbgky_residual_batch(ensemble, testfn, std::span<const double>(&t, 1), options).back();
}

MomentSummary ensemble_moments(const EnsembleResult& ensemble, std::size_t snapshot,
                               RealizationSubset subset) {
  const std::size_t m = ensemble.realization_count();
  std::size_t lo = 0;
  std::size_t hi = m;
  if (subset == RealizationSubset::first_half) hi = m / 2;
  if (subset == RealizationSubset::second_half) lo = m / 2;
  if (hi <= lo) throw std::invalid_argument("ensemble_moments: empty realization subset");
  const std::size_t count = hi - lo;
  std::vector<double> ns(count), es(count), px(count), py(count), pz(count);
  for (std::size_t r = lo; r < hi; ++r) {
    const SnapshotMoments& mom = ensemble.moments(r, snapshot);
    ns[r - lo] = static_cast<double>(mom.n);
    es[r - lo] = mom.energy;
    px[r - lo] = mom.momentum.x;
    py[r - lo] = mom.momentum.y;
    pz[r - lo] = mom.momentum.z;
  }
  MomentSummary out;
  const MeanErr men = mean_err(ns);
  const MeanErr mee = mean_err(es);
  out.n_mean = men.mean;
  out.n_stderr = men.stderr_;
  out.energy_mean = mee.mean;
  out.energy_stderr = mee.stderr_;
  out.momentum_mean = {pairwise_sum(px) / static_cast<double>(count),
                       pairwise_sum(py) / static_cast<double>(count),
                       pairwise_sum(pz) / static_cast<double>(count)};
  out.m = count;
  return out;
}

}  // namespace kal
