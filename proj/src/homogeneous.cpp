#include "paraspec/homogeneous.hpp"

#include <cmath>

#include "paraspec/errors.hpp"
#include "paraspec/numerics.hpp"

namespace paraspec {

namespace {

GroupElement checked(GroupElement g) {
  if (std::abs(g.det() - 1.0) > kDetDriftThreshold) return g.renormalized();
  return g;
}

}  // namespace

GroupElement GroupElement::operator*(const GroupElement& o) const {
  return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
}

GroupElement GroupElement::renormalized() const {
  const double det_value = det();
  if (!(det_value > 0.0)) throw DomainError("matrix has non-positive determinant");
  const double s = 1.0 / std::sqrt(det_value);
  return {a * s, b * s, c * s, d * s};
}

double GroupElement::distance(const GroupElement& o) const {
  return std::sqrt((a - o.a) * (a - o.a) + (b - o.b) * (b - o.b) + (c - o.c) * (c - o.c) + (d - o.d) * (d - o.d));
}

GroupElement geodesic(const GroupElement& g, double s) {
  if (!(std::abs(s) <= 50.0)) throw DomainError("geodesic time out of range: " + std::to_string(s));
  const double e = std::exp(0.5 * s);
  const double ei = 1.0 / e;
  return checked({g.a * e, g.b * ei, g.c * e, g.d * ei});
}

GroupElement horocycle(const GroupElement& g, double t) {
  return checked({g.a, g.a * t + g.b, g.c, g.c * t + g.d});
}

GroupElement opposite_horocycle(const GroupElement& g, double r) {
  return checked({g.a + g.b * r, g.b, g.c + g.d * r, g.d});
}

double renormalization_residual(double s, double t) {
  if (std::abs(s) > 10.0 || std::abs(t) > 1e3) throw DomainError("renormalization residual: (s, t) out of range");
  const GroupElement id = GroupElement::identity();
  const GroupElement lhs = geodesic(id, -s) * horocycle(id, t) * geodesic(id, s);
  const GroupElement rhs = horocycle(id, t * std::exp(kRenormalizationSign * s));
  return lhs.distance(rhs);
}

bool in_fundamental_domain(std::complex<double> z, double tol) {
  return z.imag() > 0.0 && std::abs(z.real()) <= 0.5 + tol && std::norm(z) >= 1.0 - tol;
}

namespace {

// Internal reduction thresholds are tighter than the public predicate so that
// reducing an already reduced point performs no step.
constexpr double kStepTol = 1e-12;

}  // namespace

ModularPoint reduce(const GroupElement& g_in) {
  GroupElement g = checked(g_in);
  std::complex<double> z = g.act({0.0, 1.0});
  for (int steps = 0;; ++steps) {
    if (steps > kReduceStepCap) throw IterationCapExceeded("fundamental-domain reduction did not terminate");
    bool moved = false;
    if (std::abs(z.real()) > 0.5 + kStepTol) {
      const double n = std::round(z.real());
      g = {g.a - n * g.c, g.b - n * g.d, g.c, g.d};
      moved = true;
    }
    z = g.act({0.0, 1.0});
    if (std::norm(z) < 1.0 - kStepTol) {
      g = {-g.c, -g.d, g.a, g.b};
      z = g.act({0.0, 1.0});
      moved = true;
    }
    if (!moved) break;
  }
  g = checked(g);
  return {g, g.act({0.0, 1.0}), frame_angle_of(g)};
}

std::complex<double> reduce_z(std::complex<double> z) {
  for (int steps = 0;; ++steps) {
    if (steps > kReduceStepCap) throw IterationCapExceeded("fundamental-domain reduction did not terminate");
    bool moved = false;
    if (std::abs(z.real()) > 0.5 + kStepTol) {
      z -= std::round(z.real());
      moved = true;
    }
    if (std::norm(z) < 1.0 - kStepTol) {
      z = -1.0 / z;
      moved = true;
    }
    if (!moved) return z;
  }
}

double modular_distance(std::complex<double> z1, std::complex<double> z2) {
  double best = std::abs(z1 - z2);
  const std::complex<double> images[] = {z2 + 1.0, z2 - 1.0, -1.0 / z2, -1.0 / z2 + 1.0, -1.0 / z2 - 1.0,
                                         -1.0 / (z2 + 1.0), -1.0 / (z2 - 1.0)};
  for (auto w : images) best = std::min(best, std::abs(z1 - w));
  return best;
}

double frame_angle_of(const GroupElement& g) {
  double theta = std::atan2(g.c, g.d);
  theta = std::fmod(theta, kPi);
  if (theta < 0.0) theta += kPi;
  if (theta >= kPi) theta = 0.0;
  return theta;
}

ModularPoint sample_modular_point(SampleRng& rng, double y_cap) {
  const double w_lo = 1.0 / y_cap;
  const double w_hi = 2.0 / std::sqrt(3.0);
  for (;;) {
    const double x = rng.uniform(-0.5, 0.5);
    const double y = 1.0 / rng.uniform(w_lo, w_hi);
    const double theta = rng.uniform(0.0, kPi);
    if (x * x + y * y < 1.0) continue;
    const double sy = std::sqrt(y);
    const GroupElement n_a{sy, x / sy, 0.0, 1.0 / sy};
    const GroupElement k{std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta)};
    const GroupElement g = checked(n_a * k);
    return {g, {x, y}, frame_angle_of(g)};
  }
}

double cusp_mass_above(double y_cap) { return (1.0 / y_cap) / (kPi / 3.0); }

const GroupElement& HorocycleOrbit::anchor(long k) const {
  auto it = anchors_.find(k);
  if (it != anchors_.end()) return it->second;
  const GroupElement rep = reduce(horocycle(start_, static_cast<double>(k))).rep;
  return anchors_.emplace(k, rep).first->second;
}

GroupElement HorocycleOrbit::at(double s) const {
  const double k = std::floor(s);
  const GroupElement& base = anchor(static_cast<long>(k));
  return horocycle(base, s - k);
}

}  // namespace paraspec
