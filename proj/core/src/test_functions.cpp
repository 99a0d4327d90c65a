#include "kal/test_functions.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kal/errors.hpp"

namespace kal {

UnaryTestFunction UnaryTestFunction::constant(double value) {
  return UnaryTestFunction(Kind::constant, value, 0.0, {});
}

UnaryTestFunction UnaryTestFunction::gaussian(double a, const Vec3& c) {
  if (!(a > 0.0)) throw ConfigError("gaussian test function: width parameter must be positive");
  return UnaryTestFunction(Kind::gaussian, a, 0.0, c);
}

UnaryTestFunction UnaryTestFunction::fourier(const Vec3& k) {
  return UnaryTestFunction(Kind::fourier, 0.0, 0.0, k);
}

UnaryTestFunction UnaryTestFunction::ball_indicator_smooth(double radius, double width) {
  if (!(radius > 0.0) || !(width > 0.0))
    throw ConfigError("ball indicator: radius and width must be positive");
  return UnaryTestFunction(Kind::ball_indicator_smooth, radius, width, {});
}

UnaryTestFunction UnaryTestFunction::truncated_energy(double r) {
  if (!(r > 0.0)) throw ConfigError("truncated energy: cap must be positive");
  return UnaryTestFunction(Kind::truncated_energy, r, 0.0, {});
}

double UnaryTestFunction::operator()(const Vec3& v) const {
  switch (kind_) {
    case Kind::constant:
      return p1_;
    case Kind::gaussian:
      return std::exp(-p1_ * norm2(v - vec_));
    case Kind::fourier:
      return std::cos(dot(vec_, v));
    case Kind::ball_indicator_smooth: {
      const double r = norm(v);
      const double lo = p1_ - p2_;
      const double hi = p1_ + p2_;
      if (r <= lo) return 1.0;
      if (r >= hi) return 0.0;
      return 0.5 * (1.0 + std::cos(M_PI * (r - lo) / (hi - lo)));
    }
    case Kind::truncated_energy:
      return std::min(norm2(v), p1_);
  }
  return 0.0;
}

double UnaryTestFunction::sup_norm() const {
  switch (kind_) {
    case Kind::constant:
      return std::abs(p1_);
    case Kind::gaussian:
    case Kind::fourier:
    case Kind::ball_indicator_smooth:
      return 1.0;
    case Kind::truncated_energy:
      return p1_;
  }
  return 0.0;
}

std::string UnaryTestFunction::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::constant:
      out << "const(" << p1_ << ")";
      break;
    case Kind::gaussian:
      out << "gauss(a=" << p1_ << ",c=[" << vec_.x << "," << vec_.y << "," << vec_.z << "])";
      break;
    case Kind::fourier:
      out << "fourier(k=[" << vec_.x << "," << vec_.y << "," << vec_.z << "])";
      break;
    case Kind::ball_indicator_smooth:
      out << "ball(R=" << p1_ << ",w=" << p2_ << ")";
      break;
    case Kind::truncated_energy:
      out << "energy(r=" << p1_ << ")";
      break;
  }
  return out.str();
}

TensorTestFunction::TensorTestFunction(std::string id, std::vector<UnaryTestFunction> factors)
    : id_(std::move(id)), factors_(std::move(factors)) {
  if (factors_.empty()) throw ConfigError("test function '" + id_ + "': needs at least one factor");
}

double TensorTestFunction::operator()(std::span<const Vec3> velocities) const {
  if (velocities.size() != factors_.size())
    throw std::invalid_argument("tensor test function: arity mismatch");
  double prod = 1.0;
  for (std::size_t i = 0; i < factors_.size(); ++i) prod *= factors_[i](velocities[i]);
  return prod;
}

bool TensorTestFunction::is_bounded() const {
  for (const auto& f : factors_)
    if (!f.is_bounded()) return false;
  return true;
}

double TensorTestFunction::sup_norm() const {
  double s = 1.0;
  for (const auto& f : factors_) s *= f.sup_norm();
  return s;
}

}  // namespace kal
