#include "paraspec/spectral.hpp"

#include <fftw3.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "fftw_lock.hpp"
#include "paraspec/errors.hpp"
#include "paraspec/rng.hpp"
#include "paraspec/twisted.hpp"

namespace paraspec {

namespace {

OdeOptions ode_options(const Tolerances& tol) {
  OdeOptions o;
  o.rtol = tol.ode;
  o.atol = tol.ode;
  return o;
}

double observable_at(const std::string& name, const GroupElement& g) {
  return eval_invariant_observable(name, reduce_z(g.act({0.0, 1.0})));
}

}  // namespace

CorrelationSeries correlation_flow(const System& system, const FlowCorrelationOptions& opt) {
  if (is_map_system(system)) throw InvalidSpec("correlation_flow needs a flow system");
  if (!(opt.dt > 0.0) || !(opt.T >= opt.dt)) throw InvalidSpec("need 0 < dt <= T");
  if (opt.T > 1e4) throw InvalidSpec("T must be at most 1e4");
  if (opt.n_samples < 2 * kBatchCount)
    throw InsufficientSamples("correlation_flow needs at least " + std::to_string(2 * kBatchCount) + " samples");
  const bool twisted = std::holds_alternative<TwistedFlow>(system);
  const TimeChange& alpha =
      twisted ? std::get<TwistedFlow>(system).alpha : std::get<TimeChangedFlow>(system).alpha;
  const int mode = twisted ? std::get<TwistedFlow>(system).n : 0;
  (void)eval_invariant_observable(opt.observable, std::complex<double>{0.0, 2.0});  // validates the name

  const long nt = static_cast<long>(std::floor(opt.T / opt.dt + 1e-9)) + 1;
  std::vector<double> times(static_cast<std::size_t>(nt));
  for (long j = 0; j < nt; ++j) times[static_cast<std::size_t>(j)] = static_cast<double>(j) * opt.dt;
  const std::span<const double> positive(times.data() + 1, times.size() - 1);

  const std::size_t ns = static_cast<std::size_t>(opt.n_samples);
  const std::size_t ntu = times.size();
  // f(phi_t x_i) and the phase e^{2 pi i n tau} per sample, and the sample weight.
  std::vector<double> fvals(ns * ntu);
  std::vector<std::complex<double>> phases(twisted ? ns * ntu : 0);
  std::vector<double> weights(ns);

  parallel_for(ns, opt.workers, [&](std::size_t i) {
    SampleRng rng(opt.seed, Stream::correlation, i);
    const ModularPoint x = sample_modular_point(rng, alpha.y_cap);
    double* fv = fvals.data() + i * ntu;
    weights[i] = twisted ? 1.0 : alpha.alpha(x);
    fv[0] = eval_invariant_observable(opt.observable, x);
    const HorocycleOrbit orbit(x.rep);
    if (twisted) {
      std::complex<double>* ph = phases.data() + i * ntu;
      ph[0] = 1.0;
      auto record = [&](std::size_t j, double t, double theta) {
        fv[j + 1] = observable_at(opt.observable, orbit.at(t));
        ph[j + 1] = std::polar(1.0, kTwoPi * frac(static_cast<double>(mode) * theta));
      };
      if (alpha.is_constant()) {
        for (std::size_t j = 0; j < positive.size(); ++j) record(j, positive[j], alpha.c * positive[j]);
      } else {
        auto rhs = [&](double s, const std::array<double, 1>&) {
          return std::array<double, 1>{alpha.alpha(orbit.at(s))};
        };
        dopri5<1>(rhs, 0.0, {0.0}, positive, ode_options(opt.tol),
                  [&](std::size_t j, double t, const std::array<double, 1>& y) { record(j, t, y[0]); });
      }
    } else if (alpha.is_constant()) {
      for (std::size_t j = 0; j < positive.size(); ++j)
        fv[j + 1] = observable_at(opt.observable, orbit.at(positive[j] / alpha.c));
    } else {
      auto rhs = [&](double, const std::array<double, 1>& y) {
        return std::array<double, 1>{1.0 / alpha.alpha(orbit.at(y[0]))};
      };
      dopri5<1>(rhs, 0.0, {0.0}, positive, ode_options(opt.tol),
                [&](std::size_t j, double, const std::array<double, 1>& y) {
                  fv[j + 1] = observable_at(opt.observable, orbit.at(y[0]));
                });
    }
  });

  // Weighted sample mean of f at time 0; the flow preserves the weighted measure.
  std::vector<double> wf(ns);
  for (std::size_t i = 0; i < ns; ++i) wf[i] = weights[i] * fvals[i * ntu];
  const double mean = pairwise_sum(wf) / pairwise_sum(weights);

  CorrelationSeries out;
  out.times = times;
  out.values.resize(ntu);
  out.std_error.resize(ntu);
  out.estimator = {"montecarlo", opt.n_samples, opt.seed, 0};
  out.system_desc = describe(system) + "; f = " + opt.observable + " - mean";

  std::vector<std::complex<double>> prod(ns);
  std::vector<std::complex<double>> batch(kBatchCount);
  for (std::size_t j = 0; j < ntu; ++j) {
    for (std::size_t i = 0; i < ns; ++i) {
      const double f0 = fvals[i * ntu] - mean;
      const double ft = fvals[i * ntu + j] - mean;
      std::complex<double> p = weights[i] * ft * f0;
      if (twisted) p *= phases[i * ntu + j];
      prod[i] = p;
    }
    out.values[j] = pairwise_sum(prod) / static_cast<double>(ns);
    for (int b = 0; b < kBatchCount; ++b) {
      const std::size_t lo = ns * static_cast<std::size_t>(b) / kBatchCount;
      const std::size_t hi = ns * static_cast<std::size_t>(b + 1) / kBatchCount;
      batch[static_cast<std::size_t>(b)] =
          pairwise_sum(std::span<const std::complex<double>>(prod.data() + lo, hi - lo)) / static_cast<double>(hi - lo);
    }
    const std::complex<double> bm = pairwise_sum(batch) / static_cast<double>(kBatchCount);
    double ss = 0.0;
    for (const auto& v : batch) ss += std::norm(v - bm);
    out.std_error[j] = std::sqrt(ss / (kBatchCount * (kBatchCount - 1.0)));
  }
  out.values[0] = out.values[0].real();
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(L2Verdict v) {
  switch (v) {
    case L2Verdict::bounded: return "BOUNDED";
    case L2Verdict::growing: return "GROWING";
    case L2Verdict::undetermined: return "UNDETERMINED";
  }
  return "?";
}

namespace {

struct NonnegativePart {
  std::vector<double> times;
  std::vector<std::complex<double>> values;
  std::vector<double> se;
};

NonnegativePart nonnegative_part(const CorrelationSeries& s) {
  NonnegativePart out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.times[i] < 0.0) continue;
    out.times.push_back(s.times[i]);
    out.values.push_back(s.values[i]);
    out.se.push_back(i < s.std_error.size() ? s.std_error[i] : 0.0);
  }
  for (std::size_t i = 1; i < out.times.size(); ++i)
    if (out.times[i] <= out.times[i - 1]) throw NonuniformGrid("series times must be increasing");
  return out;
}

// Spacing of a grid 0, dt, 2 dt, ...; throws NonuniformGrid.
double uniform_step(const std::vector<double>& t) {
  if (t.size() < 2 || t[0] != 0.0) throw NonuniformGrid("series must start at time 0 with at least two points");
  const double dt = t[1];
  for (std::size_t j = 0; j < t.size(); ++j) {
    const double expect = static_cast<double>(j) * dt;
    if (std::abs(t[j] - expect) > 1e-9 * std::max(1.0, expect))
      throw NonuniformGrid("time " + std::to_string(t[j]) + " is off the uniform grid");
  }
  return dt;
}

bool unit_integer_lags(const std::vector<double>& t) {
  for (std::size_t j = 0; j < t.size(); ++j)
    if (t[j] != static_cast<double>(j)) return false;
  return true;
}

}  // namespace

PartialNorm l2_partial_norm(const CorrelationSeries& series) {
  const NonnegativePart part = nonnegative_part(series);
  PartialNorm out;
  out.times = part.times;
  const std::size_t n = part.times.size();
  out.cumulative.resize(n);
  const bool discrete = unit_integer_lags(part.times);
  // Monte Carlo: |c|^2 - se^2 is the unbiased estimate of |c|^2; keeps the noise
  // floor from growing the norm linearly.
  const bool debias = series.estimator.method == "montecarlo";
  auto sq = [&](std::size_t j) {
    const double v = std::norm(part.values[j]);
    return debias ? std::max(v - part.se[j] * part.se[j], 0.0) : v;
  };
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double v = sq(j);
    if (discrete) {
      acc += v;
    } else if (j > 0) {
      acc += 0.5 * (v + sq(j - 1)) * (part.times[j] - part.times[j - 1]);
    }
    out.cumulative[j] = acc;
  }
  out.total = acc;
  if (n < 3 || part.times[1] <= 0.0) return out;
  const double t_max = part.times.back();
  const int decades = static_cast<int>(std::floor(std::log10(t_max / part.times[1]) + 1e-9));
  if (decades < 2) return out;
  auto cumulative_at = [&](double t) {
    const auto it = std::upper_bound(part.times.begin(), part.times.end(), t * (1.0 + 1e-12));
    return it == part.times.begin() ? 0.0 : out.cumulative[static_cast<std::size_t>(it - part.times.begin()) - 1];
  };
  for (int k = decades; k >= 0; --k) out.decade_ends.push_back(t_max / std::pow(10.0, k));
  for (std::size_t k = 1; k < out.decade_ends.size(); ++k)
    out.decade_increments.push_back(cumulative_at(out.decade_ends[k]) - cumulative_at(out.decade_ends[k - 1]));

  const double last = out.decade_increments.back();
  bool nondecreasing = true;
  for (std::size_t k = 1; k < out.decade_increments.size(); ++k)
    nondecreasing = nondecreasing && out.decade_increments[k] >= out.decade_increments[k - 1];
  if (out.total == 0.0 || last < kBoundedShare * out.total) {
    out.verdict = L2Verdict::bounded;
  } else if (nondecreasing) {
    out.verdict = L2Verdict::growing;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double ls_slope(const std::vector<double>& x, const std::vector<double>& y, const std::vector<std::size_t>& idx) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i : idx) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(idx.size());
  my /= static_cast<double>(idx.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i : idx) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

DecayFit decay_exponent(const CorrelationSeries& series, int bins_per_decade, std::uint64_t seed,
                        int bootstrap_rounds) {
  const NonnegativePart part = nonnegative_part(series);
  if (part.times.empty() || part.times.back() <= 0.0) throw TooFewPoints("no positive times");
  const double t_max = part.times.back();
  const double t_lo = t_max / 100.0;
  DecayFit fit;
  const int n_bins = 2 * bins_per_decade;
  std::vector<double> bin_t(static_cast<std::size_t>(n_bins), 0.0), bin_v(static_cast<std::size_t>(n_bins), -1.0);
  for (std::size_t j = 0; j < part.times.size(); ++j) {
    const double t = part.times[j];
    if (t < t_lo * (1.0 - 1e-12) || t <= 0.0) continue;
    ++fit.n_points;
    int b = static_cast<int>(std::floor(std::log10(t / t_lo) * bins_per_decade));
    b = std::clamp(b, 0, n_bins - 1);
    const double v = std::abs(part.values[j]);
    if (v > bin_v[static_cast<std::size_t>(b)]) {
      bin_v[static_cast<std::size_t>(b)] = v;
      bin_t[static_cast<std::size_t>(b)] = t;
    }
  }
  if (fit.n_points < kMinFitPoints)
    throw TooFewPoints(std::to_string(fit.n_points) + " points in the fit window, need " +
                       std::to_string(kMinFitPoints));
  std::vector<double> lx, ly;
  for (int b = 0; b < n_bins; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    if (bin_v[ub] <= 0.0) continue;
    fit.env_times.push_back(bin_t[ub]);
    fit.env_values.push_back(bin_v[ub]);
    lx.push_back(std::log(bin_t[ub]));
    ly.push_back(std::log(bin_v[ub]));
  }
  fit.n_bins = static_cast<int>(lx.size());
  if (fit.n_bins < 3) throw TooFewPoints("fewer than 3 nonempty envelope bins");
  for (std::size_t k = 1; k < fit.env_values.size(); ++k)
    if (fit.env_values[k] > fit.env_values[k - 1] * (1.0 + 1e-9)) ++fit.nonmonotone_bins;

  std::vector<std::size_t> all(lx.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  fit.beta_hat = -ls_slope(lx, ly, all);

  SampleRng rng(seed, Stream::bootstrap, 0);
  std::vector<double> betas;
  betas.reserve(static_cast<std::size_t>(bootstrap_rounds));
  std::vector<std::size_t> idx(lx.size());
  for (int r = 0; r < bootstrap_rounds; ++r) {
    for (auto& k : idx) k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(lx.size()));
    const double s = ls_slope(lx, ly, idx);
    if (std::isfinite(s)) betas.push_back(-s);
  }
  if (betas.empty()) {
    fit.ci_low = fit.ci_high = fit.beta_hat;
  } else {
    std::sort(betas.begin(), betas.end());
    auto pct = [&](double q) {
      return betas[std::min(betas.size() - 1, static_cast<std::size_t>(q * static_cast<double>(betas.size())))];
    };
    fit.ci_low = std::min(pct(0.025), fit.beta_hat);
    fit.ci_high = std::max(pct(0.975), fit.beta_hat);
  }
  fit.no_decay = std::abs(fit.beta_hat) < kNoDecayBeta;
  fit.unreliable = fit.nonmonotone_bins > 2 || fit.no_decay;
  return fit;
}

// ---------------------------------------------------------------------------

Window parse_window(const std::string& s) {
  if (s == "hann") return Window::hann;
  if (s == "none") return Window::none;
  throw InvalidSpec("unknown window '" + s + "' (hann | none)");
}

std::string to_string(Window w) { return w == Window::hann ? "hann" : "none"; }

Density spectral_density(const CorrelationSeries& series, Window window, int pad) {
  if (pad < 1) throw InvalidSpec("pad must be >= 1");
  const NonnegativePart part = nonnegative_part(series);
  const double dt = uniform_step(part.times);
  const std::size_t L = part.times.size();
  std::size_t M = 1;
  while (M < static_cast<std::size_t>(pad) * (2 * L - 1)) M <<= 1;

  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * M));
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_plan_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(M), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  auto* a = reinterpret_cast<std::complex<double>*>(buf);
  std::fill(a, a + M, std::complex<double>{});
  for (std::size_t n = 0; n < L; ++n) {
    const double w = window == Window::hann
                         ? 0.5 * (1.0 + std::cos(kPi * static_cast<double>(n) / static_cast<double>(L)))
                         : 1.0;
    a[n] = w * part.values[n];
    if (n > 0) a[M - n] = w * std::conj(part.values[n]);
  }
  a[0] = part.values[0].real();
  fftw_execute(plan);

  Density out;
  out.c0 = part.values[0].real();
  out.freq.resize(M);
  out.density.resize(M);
  const double df = 1.0 / (static_cast<double>(M) * dt);
  out.min_value = std::numeric_limits<double>::infinity();
  std::vector<double> contrib(M);
  for (std::size_t k = 0; k < M; ++k) {
    // ascending order: bins M/2 .. M-1 are the negative frequencies
    const std::size_t src = (k + M / 2) % M;
    const long signed_k = static_cast<long>(src) - (src >= M / 2 ? static_cast<long>(M) : 0);
    const double rho = dt * a[src].real();
    out.freq[k] = static_cast<double>(signed_k) * df;
    out.min_value = std::min(out.min_value, rho);
    out.density[k] = std::max(rho, 0.0);
    contrib[k] = out.density[k] * df;
  }
  {
    std::lock_guard lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);

  out.mass = pairwise_sum(contrib);
  out.mass_error = out.c0 != 0.0 ? std::abs(out.mass - out.c0) / std::abs(out.c0) : std::abs(out.mass);
  const double mean = pairwise_sum(out.density) / static_cast<double>(M);
  double dev = 0.0;
  for (double v : out.density) dev = std::max(dev, std::abs(v - mean));
  out.ripple = mean > 0.0 ? dev / mean : std::numeric_limits<double>::infinity();
  return out;
}

BochnerResult bochner_check(const CorrelationSeries& series, int m) {
  if (m < 1 || m > 512) throw InvalidSpec("Toeplitz size must be in [1, 512]");
  const NonnegativePart part = nonnegative_part(series);
  uniform_step(part.times);
  if (part.times.size() < static_cast<std::size_t>(m))
    throw TooFewPoints("series has " + std::to_string(part.times.size()) + " lags, need " + std::to_string(m));
  Eigen::MatrixXcd T(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) {
      const int lag = r - c;
      const std::complex<double> v = part.values[static_cast<std::size_t>(std::abs(lag))];
      T(r, c) = lag >= 0 ? v : std::conj(v);
    }
  for (int r = 0; r < m; ++r) T(r, r) = part.values[0].real();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(T, Eigen::EigenvaluesOnly);
  BochnerResult out;
  out.m = m;
  out.min_eigenvalue = solver.eigenvalues().minCoeff();
  const double c0 = part.values[0].real();
  out.bound = -1e-6 * std::abs(c0);
  if (series.estimator.method == "montecarlo") {
    double se_sum = part.se[0];
    for (int n = 1; n < m; ++n) se_sum += 2.0 * part.se[static_cast<std::size_t>(n)];
    out.bound = std::min(out.bound, -3.0 * se_sum);
  }
  out.pass = out.min_eigenvalue >= out.bound;
  return out;
}

SpectralEstimate spectral_estimate(const CorrelationSeries& series, Window window, int pad, int bochner_m,
                                   std::uint64_t seed) {
  SpectralEstimate out;
  out.density = spectral_density(series, window, pad);
  out.partial_norm = l2_partial_norm(series);
  try {
    out.decay = decay_exponent(series, 10, seed);
    out.decay_available = true;
  } catch (const TooFewPoints&) {
    out.decay_available = false;
  }
  out.bochner = bochner_check(series, std::min<int>(bochner_m, static_cast<int>(out.partial_norm.times.size())));
  double peak = 0.0;
  for (double v : out.density.density) peak = std::max(peak, v);
  out.density_nonneg = out.density.min_value >= -kMassTolerance * peak;
  return out;
}

}  // namespace paraspec
