#ifndef KAL_TEST_FUNCTIONS_HPP
#define KAL_TEST_FUNCTIONS_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "kal/vec3.hpp"

namespace kal {

/// One-variable observables; higher arities are tensor products of these.
/// All kinds except TruncatedEnergy are bounded; TruncatedEnergy with an
/// infinite cap degenerates to the plain kinetic energy |v|^2.
class UnaryTestFunction {
 public:
  enum class Kind { constant, gaussian, fourier, ball_indicator_smooth, truncated_energy };

  static UnaryTestFunction constant(double value = 1.0);
  /// exp(-a |v - c|^2), a > 0.
  static UnaryTestFunction gaussian(double a, const Vec3& c = {});
  /// cos(k . v).
  static UnaryTestFunction fourier(const Vec3& k);
  /// Cosine-tapered indicator of the ball |v| <= R: 1 inside R - width,
  /// 0 outside R + width, continuous in between.
  static UnaryTestFunction ball_indicator_smooth(double radius, double width);
  /// min(|v|^2, r); r may be +infinity.
  static UnaryTestFunction truncated_energy(double r);

  double operator()(const Vec3& v) const;

  Kind kind() const { return kind_; }
  bool is_constant() const { return kind_ == Kind::constant; }
  bool is_bounded() const { return kind_ != Kind::truncated_energy || std::isfinite(p1_); }
  /// Sup norm; +infinity for the uncapped energy.
  double sup_norm() const;
  std::string describe() const;

 private:
  UnaryTestFunction(Kind kind, double p1, double p2, const Vec3& vec)
      : kind_(kind), p1_(p1), p2_(p2), vec_(vec) {}

  Kind kind_;
  double p1_ = 0.0;
  double p2_ = 0.0;
  Vec3 vec_{};
};

/// Tensor product Phi(v_1,...,v_ell) = phi_1(v_1) ... phi_ell(v_ell).
class TensorTestFunction {
 public:
  TensorTestFunction(std::string id, std::vector<UnaryTestFunction> factors);

  int ell() const { return static_cast<int>(factors_.size()); }
  const std::string& id() const { return id_; }
  const std::vector<UnaryTestFunction>& factors() const { return factors_; }
  const UnaryTestFunction& factor(int slot) const { return factors_.at(static_cast<std::size_t>(slot)); }

  double operator()(std::span<const Vec3> velocities) const;

  bool is_bounded() const;
  double sup_norm() const;

 private:
  std::string id_;
  std::vector<UnaryTestFunction> factors_;
};

}  // namespace kal

#endif
