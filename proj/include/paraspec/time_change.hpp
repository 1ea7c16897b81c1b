#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "paraspec/homogeneous.hpp"
#include "paraspec/numerics.hpp"

namespace paraspec {

/// alpha(p) = c (1 + epsilon u(p)) with u a registered invariant observable and
/// c chosen so that alpha integrates to 1 against the probability volume.
struct TimeChange {
  double epsilon = 0.0;
  std::string base = "discriminant";
  double c = 1.0;
  double positivity_margin = 1.0;  // 1 - epsilon sup|u|
  double mass_stderr = 0.0;        // standard error of the Monte Carlo mass of (1 + epsilon u)
  long n_samples = 0;
  std::uint64_t seed = 0;
  double y_cap = 50.0;
  double truncation_bias = 0.0;    // bound on the mass error from the cusp cut

  // Constant time change alpha = c.
  static TimeChange constant(double c = 1.0);

  bool is_constant() const { return epsilon == 0.0; }
  double alpha(std::complex<double> z) const;  // any point of the upper half plane
  double alpha(const GroupElement& g) const { return alpha(g.act({0.0, 1.0})); }
  double alpha(const ModularPoint& p) const { return alpha(p.z); }
};

inline constexpr double kPositivityHeadroom = 0.9;
inline constexpr double kMaxRelativeMassError = 1e-3;

// Seeded Monte Carlo normalization over the fundamental domain cut at y_cap.
// Throws PositivityViolated, InsufficientSamples, UnknownObservable.
TimeChange normalize_alpha(const std::string& u, double epsilon, long n_samples, std::uint64_t seed,
                           double y_cap = 50.0, int workers = 1);

// Fields of log alpha along the geodesic direction at a group element.
struct AlphaField {
  double alpha = 1.0;
  double x_log = 0.0;      // X alpha / alpha
  double x2_log = 0.0;     // X (X alpha / alpha)
  double error = 0.0;      // Richardson error estimate of x_log
  double error2 = 0.0;     // Richardson error estimate of x2_log
};

inline constexpr double kDefaultDerivativeStep = 1e-2;
inline constexpr double kDerivativeErrorCap = 1e-5;

AlphaField alpha_field(const TimeChange& alpha, const GroupElement& g, double h = kDefaultDerivativeStep,
                       bool want_second = false);

// X alpha / alpha at p with its error estimate. Throws DerivativeUnstable when
// the estimate exceeds kDerivativeErrorCap.
DerivativeEstimate x_log_derivative(const TimeChange& alpha, const ModularPoint& p,
                                    double h = kDefaultDerivativeStep);

struct FlowResult {
  ModularPoint point;
  double sigma = 0.0;  // horocycle time reached
};

// phi_t(x) for the flow generated by U / alpha: h_sigma(t) x with
// d sigma / dt = 1 / alpha(h_sigma x). Requires |t| <= 1e4.
FlowResult time_changed_flow_detail(const ModularPoint& x, double t, const TimeChange& alpha,
                                    const Tolerances& tol = {});
ModularPoint time_changed_flow(const ModularPoint& x, double t, const TimeChange& alpha, const Tolerances& tol = {});

// G(alpha, t)(x) = integral over [0, t] of (X alpha / alpha - 1)(phi_tau x) d tau.
double G_of_t(const ModularPoint& x, double t, const TimeChange& alpha, const Tolerances& tol = {});

// G at several increasing positive times along one orbit.
std::vector<double> G_profile(const ModularPoint& x, const std::vector<double>& times, const TimeChange& alpha,
                              const Tolerances& tol = {});

struct KushnirenkoReport {
  double raw_sup = 0.0;       // max over samples of |X alpha / alpha|
  double sup_estimate = 0.0;  // raw_sup with the 10% inflation
  double spread = 0.0;        // raw_sup minus the max over the first half of the samples
  bool pass = true;
  long n_samples = 0;
  std::uint64_t seed = 0;
};

inline constexpr double kSafetyInflation = 1.1;

KushnirenkoReport kushnirenko_verdict(const TimeChange& alpha, long n_samples, std::uint64_t seed, int workers = 1);

// Sample points shared by the Monte Carlo estimators of one stream.
std::vector<ModularPoint> sample_points(std::uint64_t seed, Stream stream, long n, double y_cap = 50.0);

}  // namespace paraspec
