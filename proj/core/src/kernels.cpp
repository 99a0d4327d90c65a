#include "kal/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kal/errors.hpp"

namespace kal {

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::maxwell: return "maxwell";
    case KernelFamily::hard_sphere: return "hard_sphere";
    case KernelFamily::bounded_custom: return "bounded_custom";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "maxwell") return KernelFamily::maxwell;
  if (name == "hard_sphere") return KernelFamily::hard_sphere;
  if (name == "bounded_custom") return KernelFamily::bounded_custom;
  throw ConfigError("unknown kernel.family '" + name + "'");
}

SigmaTable::SigmaTable(std::vector<double> speeds, std::vector<double> sigmas)
    : speeds_(std::move(speeds)), sigmas_(std::move(sigmas)) {
  if (speeds_.size() != sigmas_.size() || speeds_.empty())
    throw ConfigError("sigma table: need matching nonempty speed/sigma columns");
  if (!std::is_sorted(speeds_.begin(), speeds_.end()))
    throw ConfigError("sigma table: speeds must be sorted ascending");
  for (double s : sigmas_)
    if (!(s >= 0.0) || !std::isfinite(s))
      throw ConfigError("sigma table: sigma values must be finite and nonnegative");
  max_sigma_ = *std::max_element(sigmas_.begin(), sigmas_.end());
}

SigmaTable SigmaTable::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sigma table '" + path.string() + "'");
  std::vector<double> speeds;
  std::vector<double> sigmas;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double speed = 0.0;
    double sigma = 0.0;
    if (!(row >> speed >> sigma)) {
      if (speeds.empty()) continue;  // header row
      throw ConfigError("sigma table '" + path.string() + "': malformed row '" + line + "'");
    }
    speeds.push_back(speed);
    sigmas.push_back(sigma);
  }
  return SigmaTable(std::move(speeds), std::move(sigmas));
}

double SigmaTable::operator()(double speed) const {
  if (speed <= speeds_.front()) return sigmas_.front();
  if (speed >= speeds_.back()) return sigmas_.back();
  const auto it = std::upper_bound(speeds_.begin(), speeds_.end(), speed);
  const std::size_t hi = static_cast<std::size_t>(it - speeds_.begin());
  const std::size_t lo = hi - 1;
  const double w = (speed - speeds_[lo]) / (speeds_[hi] - speeds_[lo]);
  return sigmas_[lo] + w * (sigmas_[hi] - sigmas_[lo]);
}

CollisionKernel CollisionKernel::maxwell() {
  return CollisionKernel(KernelFamily::maxwell, 0.0, 1.0, 1.0, nullptr);
}

CollisionKernel CollisionKernel::hard_sphere() {
  return CollisionKernel(KernelFamily::hard_sphere, 1.0, 1.0, std::nullopt, nullptr);
}

CollisionKernel CollisionKernel::bounded_custom(SigmaTable table, double gamma, double c_b) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("kernel.gamma must lie in [0,1]");
  if (!(c_b > 0.0)) throw ConfigError("kernel.c_b must be positive");
  // Node checks suffice: c_b*s^gamma is concave for gamma in [0,1], so a
  // chord below it at both endpoints stays below it everywhere.
  for (std::size_t i = 0; i < table.speeds().size(); ++i) {
    const double s = table.speeds()[i];
    if (table.sigmas()[i] > c_b * std::pow(s, gamma) * (1.0 + 1e-12) + 1e-300)
      throw ConfigError("sigma table violates growth bound c_b*|u|^gamma at speed " +
                        std::to_string(s));
  }
  const double sup = table.max_sigma();
  return CollisionKernel(KernelFamily::bounded_custom, gamma, c_b, sup,
                         std::make_shared<const SigmaTable>(std::move(table)));
}

double sigma_b(const CollisionKernel& kernel, const Vec3& u) {
  switch (kernel.family()) {
    case KernelFamily::maxwell:
      return 1.0;
    case KernelFamily::hard_sphere:
      return norm(u);
    case KernelFamily::bounded_custom:
      return (*kernel.table())(norm(u));
  }
  return 0.0;
}

namespace {

// Orthonormal frame {e1, e2, axis}; axis must be unit length.
void orthonormal_frame(const Vec3& axis, Vec3& e1, Vec3& e2) {
  if (std::abs(axis.x) <= 0.5)
    e1 = {0.0, -axis.z, axis.y};
  else
    e1 = {-axis.y, axis.x, 0.0};
  e1 *= 1.0 / norm(e1);
  e2 = {axis.y * e1.z - axis.z * e1.y,
        axis.z * e1.x - axis.x * e1.z,
        axis.x * e1.y - axis.y * e1.x};
}

}  // namespace

OmegaSampler::OmegaSampler(const Vec3& u) {
  const double speed2 = norm2(u);
  if (speed2 == 0.0) {
    uniform_ = true;
    return;
  }
  uhat_ = u * (1.0 / std::sqrt(speed2));
  orthonormal_frame(uhat_, e1_, e2_);
}

Vec3 OmegaSampler::draw(RngStream& rng) const {
  if (uniform_) return rng.unit_vector();
  // mu = uhat.omega has density |mu| on [-1,1]: |mu| = sqrt(U), sign uniform.
  double mu = std::sqrt(rng.uniform());
  if (rng.uniform() < 0.5) mu = -mu;
  const double phi = 2.0 * M_PI * rng.uniform();
  const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
  return mu * uhat_ + (s * std::cos(phi)) * e1_ + (s * std::sin(phi)) * e2_;
}

Vec3 sample_omega(const CollisionKernel& kernel, const Vec3& u, RngStream& rng) {
  (void)kernel;  // all families share the |uhat.omega| angular law
  return OmegaSampler(u).draw(rng);
}

double kernel_density(const CollisionKernel& kernel, const Vec3& u, const Vec3& omega) {
  if (std::abs(norm(omega) - 1.0) > 1e-12)
    throw DomainError("kernel_density: omega must be a unit vector");
  const double speed = norm(u);
  if (speed == 0.0) {
    if (kernel.family() == KernelFamily::hard_sphere) return 0.0;
    throw DomainError("undefined angular density at zero relative velocity");
  }
  return sigma_b(kernel, u) * std::abs(dot(u, omega)) / (2.0 * M_PI * speed);
}

}  // namespace kal
