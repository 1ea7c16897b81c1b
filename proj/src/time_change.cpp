#include "paraspec/time_change.hpp"

#include <cmath>

#include "paraspec/errors.hpp"

namespace paraspec {

TimeChange TimeChange::constant(double c) {
  TimeChange tc;
  tc.c = c;
  return tc;
}

double TimeChange::alpha(std::complex<double> z) const {
  if (epsilon == 0.0) return c;
  return c * (1.0 + epsilon * eval_invariant_observable(base, reduce_z(z)));
}

std::vector<ModularPoint> sample_points(std::uint64_t seed, Stream stream, long n, double y_cap) {
  std::vector<ModularPoint> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    SampleRng rng(seed, stream, static_cast<std::uint64_t>(i));
    out.push_back(sample_modular_point(rng, y_cap));
  }
  return out;
}

TimeChange normalize_alpha(const std::string& u, double epsilon, long n_samples, std::uint64_t seed, double y_cap,
                           int workers) {
  if (!(epsilon >= 0.0)) throw InvalidSpec("epsilon must be >= 0");
  if (n_samples < 2) throw InsufficientSamples("normalization needs at least 2 samples");
  // Name check before any sampling.
  (void)eval_invariant_observable(u, std::complex<double>(0.0, 1.0));

  TimeChange tc;
  tc.epsilon = epsilon;
  tc.base = u;
  tc.n_samples = n_samples;
  tc.seed = seed;
  tc.y_cap = y_cap;

  std::vector<double> values(static_cast<std::size_t>(n_samples));
  parallel_for(values.size(), workers, [&](std::size_t i) {
    SampleRng rng(seed, Stream::normalize, i);
    values[i] = eval_invariant_observable(u, sample_modular_point(rng, y_cap));
  });
  double sup_u = 1.0;  // u is normalized by its grid maximum
  for (double v : values) sup_u = std::max(sup_u, std::abs(v));
  if (epsilon * sup_u >= kPositivityHeadroom) {
    throw PositivityViolated("epsilon * sup|u| = " + std::to_string(epsilon * sup_u) + " exceeds headroom " +
                             std::to_string(kPositivityHeadroom));
  }
  tc.positivity_margin = 1.0 - epsilon * sup_u;

  const double n = static_cast<double>(n_samples);
  const double mean_u = pairwise_sum(values) / n;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - mean_u) * (values[i] - mean_u);
  const double var_u = pairwise_sum(sq) / (n - 1.0);

  // Above the cut u is below u(i y_cap) ~ e^{-2 pi y_cap}; that slab carries
  // mass m of the probability volume and contributes (1 + epsilon u) ~ 1.
  const double m = cusp_mass_above(y_cap);
  const double mass = (1.0 - m) * (1.0 + epsilon * mean_u) + m;
  tc.mass_stderr = (1.0 - m) * epsilon * std::sqrt(var_u / n);
  tc.truncation_bias = m * epsilon * discriminant_observable({0.0, y_cap});
  if (tc.mass_stderr / mass > kMaxRelativeMassError) {
    throw InsufficientSamples("relative standard error " + std::to_string(tc.mass_stderr / mass) + " with " +
                              std::to_string(n_samples) + " samples");
  }
  tc.c = 1.0 / mass;
  return tc;
}

AlphaField alpha_field(const TimeChange& alpha, const GroupElement& g, double h, bool want_second) {
  AlphaField out;
  out.alpha = alpha.alpha(g);
  if (alpha.is_constant()) return out;
  // log(1 + eps u) along s -> g a(s); the factor c drops out of every derivative.
  const double eps = alpha.epsilon;
  const std::string& name = alpha.base;
  auto f = [&](double s) {
    const std::complex<double> w(0.0, std::exp(s));
    const std::complex<double> z = (g.a * w + g.b) / (g.c * w + g.d);
    return std::log1p(eps * eval_invariant_observable(name, reduce_z(z)));
  };
  const FirstSecond d = richardson_derivatives(f, h, want_second);
  out.x_log = d.first.value;
  out.error = d.first.error;
  if (want_second) {
    out.x2_log = d.second.value;
    out.error2 = d.second.error;
  }
  return out;
}

DerivativeEstimate x_log_derivative(const TimeChange& alpha, const ModularPoint& p, double h) {
  const AlphaField f = alpha_field(alpha, p.rep, h, false);
  if (f.error > kDerivativeErrorCap) {
    throw DerivativeUnstable("Richardson error " + std::to_string(f.error) + " at z = (" +
                             std::to_string(p.z.real()) + ", " + std::to_string(p.z.imag()) + ")");
  }
  return {f.x_log, f.error};
}

namespace {

OdeOptions ode_options(const Tolerances& tol) {
  OdeOptions opt;
  opt.rtol = tol.ode;
  opt.atol = tol.ode;
  return opt;
}

void check_time(double t) {
  if (!(std::abs(t) <= 1e4)) throw DomainError("flow time out of range: " + std::to_string(t));
}

}  // namespace

FlowResult time_changed_flow_detail(const ModularPoint& x, double t, const TimeChange& alpha, const Tolerances& tol) {
  check_time(t);
  FlowResult out;
  if (alpha.is_constant()) {
    out.sigma = t / alpha.c;
  } else {
    const HorocycleOrbit orbit(x.rep);
    auto rhs = [&](double, const std::array<double, 1>& y) {
      return std::array<double, 1>{1.0 / alpha.alpha(orbit.at(y[0]))};
    };
    const double checkpoints[] = {t};
    // local error control; tightened so the accumulated clock error stays under the check below
    const auto y = dopri5<1>(rhs, 0.0, {0.0}, checkpoints, ode_options(tol.scaled(0.01)),
                             [](std::size_t, double, auto&) {});
    out.sigma = y[0];
    const double lo = std::min(0.0, out.sigma), hi = std::max(0.0, out.sigma);
    const QuadResult q = integrate_segmented([&](double s) { return alpha.alpha(orbit.at(s)); }, lo, hi,
                                             0.1 * tol.ode * (1.0 + std::abs(t)));
    const double clock = out.sigma >= 0.0 ? q.value : -q.value;
    const double mismatch = std::abs(clock - t);
    if (mismatch > 10.0 * tol.ode * (1.0 + std::abs(t))) {
      throw OdeStepFailure("clock consistency check failed: |integral alpha - t| = " + std::to_string(mismatch));
    }
  }
  out.point = reduce(horocycle(x.rep, out.sigma));
  return out;
}

ModularPoint time_changed_flow(const ModularPoint& x, double t, const TimeChange& alpha, const Tolerances& tol) {
  return time_changed_flow_detail(x, t, alpha, tol).point;
}

std::vector<double> G_profile(const ModularPoint& x, const std::vector<double>& times, const TimeChange& alpha,
                              const Tolerances& tol) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0) || (i > 0 && times[i] <= times[i - 1]))
      throw DomainError("G profile times must be positive and increasing");
    check_time(times[i]);
  }
  std::vector<double> out(times.size());
  if (alpha.is_constant()) {
    for (std::size_t i = 0; i < times.size(); ++i) out[i] = -times[i];
    return out;
  }
  const HorocycleOrbit orbit(x.rep);
  auto rhs = [&](double, const std::array<double, 2>& y) {
    const AlphaField f = alpha_field(alpha, orbit.at(y[0]));
    if (f.error > kDerivativeErrorCap) throw DerivativeUnstable("Richardson error " + std::to_string(f.error));
    return std::array<double, 2>{1.0 / f.alpha, f.x_log - 1.0};
  };
  OdeOptions opt = ode_options(tol);
  dopri5<2>(rhs, 0.0, {0.0, 0.0}, times, opt, [&](std::size_t i, double, const std::array<double, 2>& y) {
    out[i] = y[1];
  });
  return out;
}

double G_of_t(const ModularPoint& x, double t, const TimeChange& alpha, const Tolerances& tol) {
  return G_profile(x, {t}, alpha, tol).front();
}

KushnirenkoReport kushnirenko_verdict(const TimeChange& alpha, long n_samples, std::uint64_t seed, int workers) {
  KushnirenkoReport r;
  r.n_samples = n_samples;
  r.seed = seed;
  std::vector<double> values(static_cast<std::size_t>(std::max<long>(n_samples, 0)));
  parallel_for(values.size(), workers, [&](std::size_t i) {
    SampleRng rng(seed, Stream::kushnirenko, i);
    const ModularPoint p = sample_modular_point(rng, alpha.y_cap);
    values[i] = std::abs(x_log_derivative(alpha, p).value);
  });
  double half_sup = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    r.raw_sup = std::max(r.raw_sup, values[i]);
    if (i < values.size() / 2) half_sup = half_sup > values[i] ? half_sup : values[i];
  }
  r.spread = r.raw_sup - half_sup;
  r.sup_estimate = kSafetyInflation * r.raw_sup;
  r.pass = r.sup_estimate < 1.0;
  return r;
}

}  // namespace paraspec
