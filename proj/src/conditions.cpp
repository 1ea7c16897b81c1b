#include "paraspec/conditions.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "paraspec/errors.hpp"
#include "paraspec/twisted.hpp"

namespace paraspec {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

std::string describe(const System& s) {
  char buf[160];
  if (const auto* f = std::get_if<TimeChangedFlow>(&s)) {
    std::snprintf(buf, sizeof buf, "time-changed horocycle flow alpha = c(1 + %.17g u), u = %s, c = %.17g",
                  f->alpha.epsilon, f->alpha.base.c_str(), f->alpha.c);
    return buf;
  }
  if (const auto* f = std::get_if<TwistedFlow>(&s)) {
    std::snprintf(buf, sizeof buf, "twisted horocycle flow mode n = %d, alpha = c(1 + %.17g u), u = %s, c = %.17g",
                  f->n, f->alpha.epsilon, f->alpha.base.c_str(), f->alpha.c);
    return buf;
  }
  return describe(to_map_system(s));
}

std::vector<double> log_time_grid(double lo, double hi, int per_decade, bool integer) {
  if (!(lo > 0.0 && hi > lo) || per_decade < 1) throw InvalidSpec("bad time grid bounds");
  const double decades = std::log10(hi / lo);
  const int steps = static_cast<int>(std::ceil(decades * per_decade - 1e-9));
  std::vector<double> out;
  for (int i = 0; i <= steps; ++i) {
    double t = i == steps ? hi : lo * std::pow(10.0, static_cast<double>(i) / per_decade);
    if (integer) t = std::round(t);
    if (out.empty() || t > out.back()) out.push_back(t);
  }
  return out;
}

double tail_max(const CommutatorProfile& p, double t_lo) {
  double m = 0.0;
  for (std::size_t i = 0; i < p.times.size(); ++i)
    if (p.times[i] >= t_lo) m = std::max(m, p.multiplier_sup[i]);
  return m;
}

double tail_max_half(const CommutatorProfile& p, double t_lo) {
  double m = 0.0;
  for (std::size_t i = 0; i < p.times.size(); ++i)
    if (p.times[i] >= t_lo) m = std::max(m, p.multiplier_sup_half[i]);
  return m;
}

namespace {

constexpr double kInconclusiveShare = 0.25;
constexpr double kStabilityLimit = 0.2;

double last_decade_start(const CommutatorProfile& p) { return p.times.back() / 10.0; }

Verdict decide(bool pass, double delta, double margin) {
  if (delta > kInconclusiveShare * margin) return Verdict::inconclusive;
  return pass ? Verdict::pass : Verdict::fail;
}

ConditionResult finish_i(CommutatorProfile p) {
  ConditionResult r;
  const double lo = last_decade_start(p);
  const double tail = tail_max(p, lo);
  r.estimate = kSafetyInflation * tail;
  r.refinement_delta = kSafetyInflation * std::abs(tail - tail_max_half(p, lo));
  r.verdict = decide(r.estimate < 1.0, r.refinement_delta, std::abs(1.0 - r.estimate));
  r.rule = "PASS iff 1.1 x (max over the last decade of the per-time sup) < 1";
  r.profile = std::move(p);
  return r;
}

double tail_variation(const std::vector<double>& values, const std::vector<double>& times, double lo) {
  double all = 0.0, pre = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    all = std::max(all, values[i]);
    if (times[i] < lo) pre = std::max(pre, values[i]);
  }
  return all > 0.0 ? (all - pre) / all : 0.0;
}

ConditionResult finish_ii(CommutatorProfile p, std::optional<double> bound) {
  ConditionResult r;
  const double lo = last_decade_start(p);
  bool finite = true;
  for (double v : p.multiplier_sup) {
    finite = finite && std::isfinite(v);
    r.estimate = std::max(r.estimate, v);
  }
  const double var = tail_variation(p.multiplier_sup, p.times, lo);
  const double var_half = tail_variation(p.multiplier_sup_half, p.times, lo);
  r.refinement_delta = std::abs(var - var_half);
  r.paper_bound = bound;
  if (!finite) {
    r.verdict = Verdict::fail;
  } else {
    r.verdict = decide(var < kStabilityLimit, r.refinement_delta, std::abs(kStabilityLimit - var));
  }
  r.rule = "PASS iff finite and the last decade raises the running sup by less than 20%";
  r.profile = std::move(p);
  return r;
}

ConditionResult finish_iii_flow(CommutatorProfile p, double sup_g, double sup_g_half) {
  ConditionResult r;
  double s = 0.0, s_half = 0.0;
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    s = std::max(s, p.multiplier_sup[i]);
    s_half = std::max(s_half, p.multiplier_sup_half[i]);
  }
  const double threshold = 2.0 * sup_g * kSafetyInflation;
  r.estimate = s;
  r.paper_bound = 2.0 * sup_g;
  r.refinement_delta = std::max(std::abs(s - s_half), 2.0 * kSafetyInflation * std::abs(sup_g - sup_g_half));
  r.verdict = decide(s <= threshold, r.refinement_delta, std::abs(threshold - s));
  r.rule = "PASS iff sup <= 1.1 x 2 sup|G(alpha)| over the same samples";
  r.profile = std::move(p);
  return r;
}

ConditionResult exact_zero_iii(const std::vector<double>& times, const SampleMeta& meta) {
  ConditionResult r;
  r.profile.times = times;
  r.profile.multiplier_sup.assign(times.size(), 0.0);
  r.profile.multiplier_sup_half.assign(times.size(), 0.0);
  r.profile.sample_meta = meta;
  r.estimate = 0.0;
  r.paper_bound = 0.0;
  r.verdict = Verdict::pass;
  r.rule = "[H(n), H] = 0 since H is a constant multiple of the identity";
  return r;
}

// Per-sample multiplier values for each of the three conditions at each time.
struct SampleTrace {
  std::vector<double> m1, m2, m3;
  double sup_g = 0.0;
  double c_second = 0.0;
};

struct Reduced {
  CommutatorProfile p1, p2, p3;
  double sup_g = 0.0, sup_g_half = 0.0, c_second = 0.0;
};

Reduced reduce_traces(const std::vector<SampleTrace>& traces, const std::vector<double>& times,
                      const SampleMeta& meta) {
  Reduced out;
  for (CommutatorProfile* p : {&out.p1, &out.p2, &out.p3}) {
    p->times = times;
    p->multiplier_sup.assign(times.size(), 0.0);
    p->multiplier_sup_half.assign(times.size(), 0.0);
    p->sample_meta = meta;
  }
  const std::size_t half = traces.size() / 2;
  for (std::size_t s = 0; s < traces.size(); ++s) {
    const SampleTrace& tr = traces[s];
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double v[3] = {tr.m1[i], tr.m2[i], tr.m3[i]};
      CommutatorProfile* ps[3] = {&out.p1, &out.p2, &out.p3};
      for (int c = 0; c < 3; ++c) {
        ps[c]->multiplier_sup[i] = std::max(ps[c]->multiplier_sup[i], v[c]);
        if (s < half) ps[c]->multiplier_sup_half[i] = std::max(ps[c]->multiplier_sup_half[i], v[c]);
      }
    }
    out.sup_g = std::max(out.sup_g, tr.sup_g);
    if (s < half) out.sup_g_half = std::max(out.sup_g_half, tr.sup_g);
    out.c_second = std::max(out.c_second, tr.c_second);
  }
  return out;
}

void check_field(const AlphaField& f) {
  if (f.error > kDerivativeErrorCap || f.error2 > kDerivativeErrorCap)
    throw DerivativeUnstable("Richardson error " + std::to_string(std::max(f.error, f.error2)));
}

OdeOptions ode_options(const Tolerances& tol) {
  OdeOptions o;
  o.rtol = tol.ode;
  o.atol = tol.ode;
  return o;
}

// Time-changed flow: L = X log alpha, L2 = X L along phi_t.
SampleTrace flow_trace(const TimeChange& alpha, const ModularPoint& x, const std::vector<double>& times,
                       const ConditionOptions& opt) {
  SampleTrace tr;
  const std::size_t nt = times.size();
  tr.m1.assign(nt, 0.0);
  tr.m2.assign(nt, 0.0);
  tr.m3.assign(nt, 0.0);
  if (alpha.is_constant()) {
    tr.sup_g = 1.0;  // X alpha / alpha - 1 = -1
    return tr;
  }
  const double h = opt.derivative_step;
  const HorocycleOrbit orbit(x.rep);
  const AlphaField f0 = alpha_field(alpha, x.rep, h, true);
  check_field(f0);
  tr.sup_g = std::abs(f0.x_log - 1.0);
  tr.c_second = std::abs(f0.x2_log);
  // state: sigma, G = int (L - 1), I1 = int (L - 1) L, I2 = int L2
  auto rhs = [&](double, const std::array<double, 4>& y) {
    const AlphaField f = alpha_field(alpha, orbit.at(y[0]), h, true);
    check_field(f);
    tr.c_second = std::max(tr.c_second, std::abs(f.x2_log));
    return std::array<double, 4>{1.0 / f.alpha, f.x_log - 1.0, (f.x_log - 1.0) * f.x_log, f.x2_log};
  };
  dopri5<4>(rhs, 0.0, {0.0, 0.0, 0.0, 0.0}, times, ode_options(opt.tol),
            [&](std::size_t i, double t, const std::array<double, 4>& y) {
              const AlphaField ft = alpha_field(alpha, orbit.at(y[0]), h, true);
              check_field(ft);
              tr.m1[i] = std::abs(y[1] / t + 1.0);
              tr.m2[i] = std::abs(y[1] / t * ft.x_log - y[2] / t + y[3] / t);
              tr.m3[i] = std::abs(ft.x_log - f0.x_log);
              tr.sup_g = std::max(tr.sup_g, std::abs(ft.x_log - 1.0));
            });
  return tr;
}

// Twisted flow: coefficient of d/dtheta, A = X alpha - alpha along the unit-speed horocycle.
SampleTrace twisted_trace(const TimeChange& alpha, const ModularPoint& x, const std::vector<double>& times,
                          const ConditionOptions& opt) {
  SampleTrace tr;
  const std::size_t nt = times.size();
  tr.m1.assign(nt, 0.0);
  tr.m2.assign(nt, 0.0);
  tr.m3.assign(nt, 0.0);
  const double h = opt.derivative_step;
  auto fields = [&](const GroupElement& g) {
    const AlphaField f = alpha_field(alpha, g, h, true);
    check_field(f);
    const double x_alpha = f.alpha * f.x_log;
    const double x2_alpha = f.alpha * (f.x2_log + f.x_log * f.x_log);
    return std::pair<double, double>{x_alpha - f.alpha, x2_alpha - x_alpha};  // A, X A
  };
  const auto [a0, xa0] = fields(x.rep);
  tr.sup_g = std::abs(a0);
  tr.c_second = std::abs(xa0);
  if (alpha.is_constant()) {
    // A = -c, X A = 0: closed forms.
    for (std::size_t i = 0; i < nt; ++i) {
      tr.m1[i] = std::abs(1.0 - alpha.c);
      tr.m2[i] = 0.0;
      tr.m3[i] = 0.0;
    }
    return tr;
  }
  const HorocycleOrbit orbit(x.rep);
  auto rhs = [&](double tau, const std::array<double, 2>&) {
    const auto [a, xa] = fields(orbit.at(tau));
    tr.c_second = std::max(tr.c_second, std::abs(xa));
    return std::array<double, 2>{a, xa};
  };
  dopri5<2>(rhs, 0.0, {0.0, 0.0}, times, ode_options(opt.tol),
            [&](std::size_t i, double t, const std::array<double, 2>& y) {
              const auto [at, xat] = fields(orbit.at(t));
              (void)xat;
              tr.m1[i] = std::abs(y[0] / t + 1.0);
              tr.m2[i] = std::abs(at - y[0] / t + y[1] / t);
              tr.m3[i] = std::abs(at - a0);
              tr.sup_g = std::max(tr.sup_g, std::abs(at));
            });
  return tr;
}

// Maps: backward Birkhoff averages of the phase-perturbation derivatives.
SampleTrace map_trace(const ActiveMap& map, const FourierObservable& g1, const FourierObservable& g2,
                      std::span<const double> x, const std::vector<double>& times) {
  SampleTrace tr;
  const std::size_t nt = times.size();
  tr.m1.assign(nt, 0.0);
  tr.m2.assign(nt, 0.0);
  tr.m3.assign(nt, 0.0);
  const double scale = 1.0 / std::abs(map.leading_coefficient());
  std::vector<double> cur(x.begin(), x.end());
  std::complex<double> s1 = 0.0, s2 = 0.0, c1 = 0.0, c2 = 0.0;  // Kahan compensation
  auto kahan = [](std::complex<double>& sum, std::complex<double>& comp, std::complex<double> v) {
    const std::complex<double> yv = v - comp;
    const std::complex<double> t = sum + yv;
    comp = (t - sum) - yv;
    sum = t;
  };
  long n = 0;
  for (std::size_t i = 0; i < nt; ++i) {
    const long target = static_cast<long>(times[i]);
    while (n < target) {
      map.backward(cur);
      if (!g1.empty()) kahan(s1, c1, g1(cur));
      if (!g2.empty()) kahan(s2, c2, g2(cur));
      ++n;
    }
    tr.m1[i] = std::abs(s1) / static_cast<double>(n) * scale;
    tr.m2[i] = std::abs(s2) / static_cast<double>(n) * scale;
  }
  return tr;
}

void check_times(const std::vector<double>& times, bool integer) {
  if (times.size() < 2) throw InvalidSpec("condition profiles need at least two times");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0) || (i > 0 && times[i] <= times[i - 1]))
      throw InvalidSpec("condition times must be positive and strictly increasing");
    if (integer && times[i] != std::round(times[i])) throw InvalidSpec("map condition times must be integers");
  }
  if (times.back() < 100.0 * times.front()) throw InvalidSpec("condition times must cover at least two decades");
}

}  // namespace

ProfileSet compute_profiles(const System& system, const ConditionOptions& opt) {
  if (std::holds_alternative<RotationControl>(system))
    throw InvalidSpec("conditions are undefined for the rotation control (H = 0)");
  if (opt.n_samples < 2) throw InsufficientSamples("condition profiles need at least 2 samples");
  const bool maps = is_map_system(system);
  check_times(opt.times, maps);
  const std::size_t ns = static_cast<std::size_t>(opt.n_samples);
  std::vector<SampleTrace> traces(ns);
  SampleMeta meta{opt.seed, opt.n_samples, maps ? "map_samples" : "conditions"};
  ProfileSet out;

  if (maps) {
    const ActiveMap map(to_map_system(system));
    const int axis = map.dim() - 1;
    const FourierObservable g1 = map.phase_perturbation().derivative(axis);
    const FourierObservable g2 = g1.derivative(axis);
    parallel_for(ns, opt.workers, [&](std::size_t s) {
      SampleRng rng(opt.seed, Stream::map_samples, s);
      std::vector<double> x(static_cast<std::size_t>(map.dim()));
      for (double& v : x) v = rng.uniform();
      traces[s] = map_trace(map, g1, g2, x, opt.times);
    });
    Reduced red = reduce_traces(traces, opt.times, meta);
    out.i = finish_i(std::move(red.p1));
    out.ii = finish_ii(std::move(red.p2), g2.sup_bound() / std::abs(map.leading_coefficient()));
    out.iii = exact_zero_iii(opt.times, meta);
    return out;
  }

  const bool twisted = std::holds_alternative<TwistedFlow>(system);
  const TimeChange& alpha =
      twisted ? std::get<TwistedFlow>(system).alpha : std::get<TimeChangedFlow>(system).alpha;
  parallel_for(ns, opt.workers, [&](std::size_t s) {
    SampleRng rng(opt.seed, Stream::conditions, s);
    const ModularPoint x = sample_modular_point(rng, alpha.y_cap);
    traces[s] = twisted ? twisted_trace(alpha, x, opt.times, opt) : flow_trace(alpha, x, opt.times, opt);
  });
  Reduced red = reduce_traces(traces, opt.times, meta);
  out.sup_g_alpha = red.sup_g;
  out.c_second = red.c_second;
  out.i = finish_i(std::move(red.p1));
  const double bound_ii = twisted ? 2.0 * red.sup_g + red.c_second : 4.0 + red.c_second;
  out.ii = finish_ii(std::move(red.p2), bound_ii);
  out.iii = finish_iii_flow(std::move(red.p3), red.sup_g, red.sup_g_half);
  return out;
}

ConditionResult cond_i_profile(const System& system, const ConditionOptions& opt) {
  return compute_profiles(system, opt).i;
}
ConditionResult cond_ii_profile(const System& system, const ConditionOptions& opt) {
  return compute_profiles(system, opt).ii;
}
ConditionResult cond_iii_profile(const System& system, const ConditionOptions& opt) {
  return compute_profiles(system, opt).iii;
}

ConditionReport assemble_report(const System& system, const ProfileSet& profiles, const ConditionOptions& opt) {
  ConditionReport r;
  r.condition_i = profiles.i;
  r.condition_ii = profiles.ii;
  r.condition_iii = profiles.iii;
  r.system_desc = describe(system);
  const bool flow = std::holds_alternative<TimeChangedFlow>(system);
  const bool twisted = std::holds_alternative<TwistedFlow>(system);
  if (flow) {
    r.b1_desc = "B1 = (1/alpha) I";
    r.b2_desc = "B2 = alpha I";
  } else {
    r.b1_desc = "B1 = I";
    r.b2_desc = "B2 = I";
  }
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "limsup estimated by the max over the final decade [%g, %g] of the time grid with 10%% inflation; "
                "the time horizon is a convention, not derived",
                opt.times.back() / 10.0, opt.times.back());
  r.caveats.push_back(buf);
  std::snprintf(buf, sizeof buf,
                "Monte Carlo confidence: sup estimates over %ld seeded samples (seed %llu); INCONCLUSIVE when the "
                "half-sample refinement delta exceeds 25%% of the margin",
                opt.n_samples, static_cast<unsigned long long>(opt.seed));
  r.caveats.push_back(buf);
  if (flow || twisted) {
    r.caveats.push_back(
        "finite-volume extrapolation: SL(2,Z) is not cocompact, so these verdicts are diagnostics, not theorem "
        "checks");
  }
  if (twisted) {
    r.caveats.push_back(
        "twisted flow: multipliers are the scalar coefficients of d/dtheta built from X alpha - alpha; the spectral "
        "projection onto the mode is not modeled");
  }
  if (!flow && !twisted) {
    r.caveats.push_back("maps: multipliers use P = -i d/dx, so xi_0 = 2 pi i k b and the rotation number cancels");
  }
  const Verdict vs[3] = {r.condition_i.verdict, r.condition_ii.verdict, r.condition_iii.verdict};
  r.consistent = vs[0] == Verdict::pass && vs[1] == Verdict::pass && vs[2] == Verdict::pass;
  bool any_fail = false;
  for (Verdict v : vs) any_fail = any_fail || v == Verdict::fail;
  r.overall = r.consistent ? "hypotheses numerically consistent"
              : any_fail   ? "hypotheses not supported at this resolution"
                           : "inconclusive at this resolution";
  return r;
}

ConditionReport evaluate_conditions(const System& system, const ConditionOptions& opt) {
  const ProfileSet profiles = compute_profiles(system, opt);
  ConditionReport r = assemble_report(system, profiles, opt);
  if (const auto* f = std::get_if<TimeChangedFlow>(&system))
    r.kushnirenko = kushnirenko_verdict(f->alpha, std::max<long>(opt.n_samples * 16, 1024), opt.seed, opt.workers);
  return r;
}

}  // namespace paraspec
