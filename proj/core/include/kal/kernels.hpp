#ifndef KAL_KERNELS_HPP
#define KAL_KERNELS_HPP

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kal/rng.hpp"
#include "kal/vec3.hpp"

namespace kal {

enum class KernelFamily { maxwell, hard_sphere, bounded_custom };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// Piecewise-linear table of the collision frequency against relative speed.
/// Clamped continuation outside the tabulated range keeps the kernel bounded.
class SigmaTable {
 public:
  SigmaTable(std::vector<double> speeds, std::vector<double> sigmas);

  static SigmaTable load_csv(const std::filesystem::path& path);

  double operator()(double speed) const;
  double max_sigma() const { return max_sigma_; }
  const std::vector<double>& speeds() const { return speeds_; }
  const std::vector<double>& sigmas() const { return sigmas_; }

 private:
  std::vector<double> speeds_;
  std::vector<double> sigmas_;
  double max_sigma_ = 0.0;
};

/// Collision kernel B(z, omega) = Sigma_B(|z|) * |zhat . omega| / (2 pi).
/// All supported families share this angular law; they differ only in the
/// collision frequency Sigma_B. Immutable after construction and freely
/// shareable across threads.
class CollisionKernel {
 public:
  static CollisionKernel maxwell();
  static CollisionKernel hard_sphere();
  static CollisionKernel bounded_custom(SigmaTable table, double gamma, double c_b);

  KernelFamily family() const { return family_; }
  /// Growth exponent: Sigma_B(u) <= c_b |u|^gamma.
  double gamma() const { return gamma_; }
  double c_b() const { return c_b_; }
  /// Sup of Sigma_B; present iff the kernel is bounded.
  std::optional<double> sup_sigma() const { return sup_sigma_; }
  const SigmaTable* table() const { return table_.get(); }

 private:
  CollisionKernel(KernelFamily family, double gamma, double c_b,
                  std::optional<double> sup_sigma,
                  std::shared_ptr<const SigmaTable> table)
      : family_(family), gamma_(gamma), c_b_(c_b), sup_sigma_(sup_sigma),
        table_(std::move(table)) {}

  KernelFamily family_;
  double gamma_;
  double c_b_;
  std::optional<double> sup_sigma_;
  std::shared_ptr<const SigmaTable> table_;
};

/// Collision frequency Sigma_B(u) = int_{S2} B(u, omega) domega.
double sigma_b(const CollisionKernel& kernel, const Vec3& u);

/// Draw omega with density B(u, omega) / Sigma_B(u) on the unit sphere:
/// uniform azimuth about uhat, mu = uhat.omega with density |mu|.
/// For u = 0 the law is uniform (the induced collision is the identity).
Vec3 sample_omega(const CollisionKernel& kernel, const Vec3& u, RngStream& rng);

/// Repeated scattering draws for one fixed relative velocity; the azimuthal
/// frame is precomputed once, which matters inside the pair-quadrature loops.
/// Draws consume the same stream values as sample_omega.
class OmegaSampler {
 public:
  explicit OmegaSampler(const Vec3& u);
  Vec3 draw(RngStream& rng) const;

 private:
  Vec3 uhat_{};
  Vec3 e1_{};
  Vec3 e2_{};
  bool uniform_ = false;  // u = 0 degenerates to the uniform law
};

/// Pointwise kernel density B(u, omega). |omega| must be 1 within 1e-12.
/// Throws DomainError for families whose angular density is undefined at u=0.
double kernel_density(const CollisionKernel& kernel, const Vec3& u, const Vec3& omega);

}  // namespace kal

#endif
