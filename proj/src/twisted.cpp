#include "paraspec/twisted.hpp"

#include <cmath>

namespace paraspec {

namespace {

double orbit_integral(const ModularPoint& x, double t, const TimeChange& alpha, double shift, double abs_tol) {
  if (t == 0.0) return 0.0;
  if (alpha.is_constant()) return (alpha.c - shift) * t;
  const HorocycleOrbit orbit(x.rep);
  const double lo = std::min(0.0, t), hi = std::max(0.0, t);
  const QuadResult q =
      integrate_segmented([&](double s) { return alpha.alpha(orbit.at(s)) - shift; }, lo, hi, abs_tol);
  return t >= 0.0 ? q.value : -q.value;
}

}  // namespace

double twisted_phase(const ModularPoint& x, double t, const TimeChange& alpha, const Tolerances& tol) {
  return orbit_integral(x, t, alpha, 0.0, tol.quad_abs);
}

TwistedPoint twisted_flow(const TwistedPoint& p, double t, const TimeChange& alpha, const Tolerances& tol) {
  if (t == 0.0) return p;
  TwistedPoint out;
  out.base = reduce(horocycle(p.base.rep, t));
  out.theta = frac(p.theta + frac(twisted_phase(p.base, t, alpha, tol)));
  return out;
}

double cocycle_a(const ModularPoint& x, double t, const TimeChange& alpha, const Tolerances& tol) {
  return orbit_integral(x, t, alpha, 1.0, tol.quad_abs);
}

}  // namespace paraspec
