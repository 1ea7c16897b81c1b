#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include <boost/numeric/odeint.hpp>
#include <string>

#include "paraspec/errors.hpp"

namespace paraspec {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Integration tolerances shared by the flow modules. `scaled(0.5)` halves all
// of them (used by the tolerance-robustness checks).
struct Tolerances {
  double ode = 1e-8;          // per-step local error of the adaptive RK stepper
  double quad_rel = 1e-6;     // orbit quadrature, relative to the integration time
  double quad_abs = 1e-9;     // absolute tolerance for circle-coordinate advances

  Tolerances scaled(double f) const { return {ode * f, quad_rel * f, quad_abs * f}; }
  bool operator==(const Tolerances&) const = default;
};

// Pairwise (cascade) summation; result depends only on the order of `v`.
double pairwise_sum(std::span<const double> v);
std::complex<double> pairwise_sum(std::span<const std::complex<double>> v);

// Fractional part in [0, 1).
inline double frac(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

// ---------------------------------------------------------------------------
// Parallel map over an index range.

// Worker count from PARASPEC_WORKERS, default 1.
int default_workers();

// Calls f(i) for every i in [0, n). Callers write results into per-index slots,
// so output never depends on scheduling. If any call throws, the exception of
// the lowest failing index is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& f);

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod (7/15) quadrature, Boost.Math backed.

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

using ScalarFn = std::function<double(double)>;

// Adaptive bisection until the error estimate is below abs_tol. Throws
// QuadratureFailure when max_depth bisections do not reach it.
QuadResult integrate_gk(const ScalarFn& f, double a, double b, double abs_tol, unsigned max_depth = 15);

// Splits [a, b] into pieces of length <= segment and distributes abs_tol over
// them in proportion to their length. Suited to long orbit integrals.
QuadResult integrate_segmented(const ScalarFn& f, double a, double b, double abs_tol, double segment = 1.0);

// ---------------------------------------------------------------------------
// Finite-difference derivatives with Richardson extrapolation.

struct DerivativeEstimate {
  double value = 0.0;
  double error = 0.0;
};

struct FirstSecond {
  DerivativeEstimate first;
  DerivativeEstimate second;
};

// Central differences at steps h, h/2, h/4 extrapolated twice. The error is the
// gap between the two once-extrapolated values.
FirstSecond richardson_derivatives(const ScalarFn& f, double h, bool want_second = true);

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) adaptive integration, Boost.Odeint backed.

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-8;
  double initial_step = 0.05;
  double max_step = 1.0;
  std::size_t max_steps = 5'000'000;  // per checkpoint interval
};

// Integrates y' = f(t, y) from t0 through the given checkpoints (monotone in
// one direction), landing exactly on each and calling on_checkpoint(i, t, y).
// Solver failures surface as OdeStepFailure.
template <std::size_t N, class Rhs, class Observer>
std::array<double, N> dopri5(Rhs&& f, double t0, std::array<double, N> y, std::span<const double> checkpoints,
                             const OdeOptions& opt, Observer&& on_checkpoint) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, N>;
  if (checkpoints.empty()) return y;
  // Backward runs integrate z(s) = y(-s) forward; odeint's controlled
  // integrate_times does not step with negative dt.
  const double dir = checkpoints.back() >= t0 ? 1.0 : -1.0;
  std::vector<double> times;
  times.reserve(checkpoints.size() + 1);
  times.push_back(dir * t0);
  for (double t : checkpoints) times.push_back(dir * t);
  auto stepper = odeint::make_controlled(opt.atol, opt.rtol, opt.max_step, odeint::runge_kutta_dopri5<State>());
  auto system = [&](const State& x, State& dxdt, double s) {
    dxdt = f(dir * s, x);
    if (dir < 0)
      for (double& v : dxdt) v = -v;
  };
  std::size_t index = 0;  // integrate_times also observes t0
  try {
    odeint::integrate_times(
        stepper, system, y, times.begin(), times.end(), opt.initial_step,
        [&](const State& x, double s) {
          const double t = dir * s;
          for (double v : x)
            if (!std::isfinite(v)) throw OdeStepFailure("non-finite state at t = " + std::to_string(t));
          if (index > 0) on_checkpoint(index - 1, checkpoints[index - 1], x);
          ++index;
        },
        odeint::max_step_checker(static_cast<int>(std::min<std::size_t>(opt.max_steps, 2'000'000'000))));
  } catch (const odeint::no_progress_error& e) {
    throw OdeStepFailure(e.what());
  } catch (const odeint::step_adjustment_error& e) {
    throw OdeStepFailure(e.what());
  }
  return y;
}


}  // namespace paraspec
