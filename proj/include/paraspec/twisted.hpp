#pragma once

#include "paraspec/homogeneous.hpp"
#include "paraspec/numerics.hpp"
#include "paraspec/time_change.hpp"

namespace paraspec {

/// Point of the circle extension M x S^1; theta in turns, kept in [0, 1).
struct TwistedPoint {
  ModularPoint base;
  double theta = 0.0;
};

// Base moves by unit-speed horocycle time t, theta by the integral of alpha
// along that horocycle segment (adaptive quadrature, absolute tolerance tol.quad_abs).
TwistedPoint twisted_flow(const TwistedPoint& p, double t, const TimeChange& alpha, const Tolerances& tol = {});

// Unreduced theta advance: integral over [0, t] of alpha(h_s x) ds.
double twisted_phase(const ModularPoint& x, double t, const TimeChange& alpha, const Tolerances& tol = {});

// a(x, t) = integral over [0, t] of (alpha - 1)(h_s x) ds.
double cocycle_a(const ModularPoint& x, double t, const TimeChange& alpha, const Tolerances& tol = {});

}  // namespace paraspec
