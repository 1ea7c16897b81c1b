#include <cmath>
#include <mutex>

#include "paraspec/errors.hpp"
#include "paraspec/homogeneous.hpp"
#include "paraspec/numerics.hpp"

namespace paraspec {

namespace {

// log of (4 pi y)^6 |Delta(z)| with Delta = q prod_{n>=1} (1 - q^n)^24.
double log_weight12(std::complex<double> z, int order) {
  const double y = z.imag();
  const std::complex<double> q = std::exp(std::complex<double>(0.0, kTwoPi) * z);
  std::complex<double> qn = q;
  std::complex<double> prod = 1.0;
  for (int n = 1; n <= order; ++n) {
    prod *= 1.0 - qn;
    qn *= q;
  }
  return 6.0 * std::log(4.0 * kPi * y) - kTwoPi * y + 24.0 * std::log(std::abs(prod));
}

double compute_u_max() {
  // Coarse grid, then three rounds of local zoom around the best point.
  double best = -1e300, bx = 0.0, by = 1.0;
  auto probe = [&](double x, double y) {
    if (x * x + y * y < 1.0 || y > 20.0 || std::abs(x) > 0.5) return;
    const double v = log_weight12({x, y}, 60);
    if (v > best) {
      best = v;
      bx = x;
      by = y;
    }
  };
  for (int i = 0; i <= 200; ++i) {
    const double x = -0.5 + i / 200.0;
    for (int j = 0; j <= 800; ++j) probe(x, std::sqrt(0.75) + j * (20.0 - std::sqrt(0.75)) / 800.0);
  }
  double hx = 0.005, hy = 0.025;
  for (int round = 0; round < 6; ++round) {
    const double cx = bx, cy = by;
    for (int i = -20; i <= 20; ++i)
      for (int j = -20; j <= 20; ++j) probe(cx + i * hx / 10.0, cy + j * hy / 10.0);
    hx /= 10.0;
    hy /= 10.0;
  }
  return std::exp(best);
}

}  // namespace

std::vector<std::string> registered_observables() { return {"discriminant", "discriminant_squared"}; }

double discriminant_weight12(std::complex<double> z, int order) { return std::exp(log_weight12(z, order)); }

double discriminant_u_max() {
  static const double value = compute_u_max();
  return value;
}

double discriminant_observable(std::complex<double> z, int order) {
  if (order < 30) throw DomainError("series truncation order must be >= 30");
  if (!(z.imag() > 0.0)) throw DomainError("point not in the upper half plane");
  return std::exp(log_weight12(z, order) - std::log(discriminant_u_max()));
}

double discriminant_tail_bound(std::complex<double> z, int order) {
  const double r = std::exp(-kTwoPi * z.imag());
  const double rn = std::pow(r, order + 1);
  // |log prod_{n>N} |1 - q^n|^24| <= 24 sum_{n>N} -log(1 - r^n) <= 24 r^{N+1} / ((1 - r)(1 - r^{N+1}))
  const double log_bound = 24.0 * rn / ((1.0 - r) * (1.0 - rn));
  return std::expm1(log_bound);
}

double eval_invariant_observable(std::string_view name, std::complex<double> z, int order) {
  if (name == "discriminant") return discriminant_observable(z, order);
  if (name == "discriminant_squared") {
    const double u = discriminant_observable(z, order);
    return u * u;
  }
  throw UnknownObservable(std::string(name));
}

double eval_invariant_observable(std::string_view name, const ModularPoint& p, int order) {
  return eval_invariant_observable(name, p.z, order);
}

}  // namespace paraspec
