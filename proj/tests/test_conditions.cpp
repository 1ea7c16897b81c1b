#include <cmath>

#include "doctest.h"
#include "paraspec/conditions.hpp"
#include "paraspec/errors.hpp"

using namespace paraspec;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

FurstenbergSpec plain_furstenberg() {
  FurstenbergSpec f;
  f.d = 2;
  f.y = kGolden;
  f.b = {{0, 0}, {1, 0}};
  f.h = {FourierObservable(1)};
  return f;
}

ConditionOptions map_options(long n_samples = 16) {
  ConditionOptions o;
  o.times = log_time_grid(1, 1000, 5, true);
  o.n_samples = n_samples;
  o.seed = 17;
  return o;
}

const TimeChange& shared_alpha() {
  static const TimeChange tc = normalize_alpha("discriminant", 0.1, 100000, 23, 50.0, 4);
  return tc;
}

}  // namespace

TEST_CASE("log time grid spacing") {
  const std::vector<double> g = log_time_grid(1, 1000, 5, false);
  REQUIRE(g.size() == 16);
  CHECK(g.front() == 1.0);
  CHECK(g.back() == 1000.0);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] / g[i - 1] == doctest::Approx(std::pow(10.0, 0.2)));
  const std::vector<double> gi = log_time_grid(1, 1000, 10, true);
  for (std::size_t i = 1; i < gi.size(); ++i) {
    CHECK(gi[i] > gi[i - 1]);
    CHECK(gi[i] == std::round(gi[i]));
  }
  CHECK_THROWS_AS(log_time_grid(0, 10, 5, false), InvalidSpec);
}

TEST_CASE("unperturbed Furstenberg map gives zero multipliers and a consistent report") {
  const ConditionReport r = evaluate_conditions(plain_furstenberg(), map_options());
  for (const ConditionResult* c : {&r.condition_i, &r.condition_ii, &r.condition_iii}) {
    CHECK(c->verdict == Verdict::pass);
    CHECK(c->estimate == 0.0);
    for (double v : c->profile.multiplier_sup) CHECK(v == 0.0);
  }
  CHECK(r.consistent);
  CHECK(r.overall == "hypotheses numerically consistent");
  CHECK(r.b1_desc == "B1 = I");
  CHECK_FALSE(r.kushnirenko.has_value());
}

TEST_CASE("rotation control has no conditions") {
  CHECK_THROWS_AS(compute_profiles(RotationControl{kGolden}, map_options()), InvalidSpec);
}

TEST_CASE("bad time grids are rejected") {
  ConditionOptions o = map_options();
  o.times = {1, 2, 50};
  CHECK_THROWS_AS(compute_profiles(plain_furstenberg(), o), InvalidSpec);
  o.times = {1, 10.5, 1000};
  CHECK_THROWS_AS(compute_profiles(plain_furstenberg(), o), InvalidSpec);
  o = map_options(1);
  CHECK_THROWS_AS(compute_profiles(plain_furstenberg(), o), InsufficientSamples);
}

TEST_CASE("skew product multipliers match backward Birkhoff averages") {
  const SkewProductSpec s{kGolden, 2, parse_trig_poly("0.1*cos(1); 0.05*sin(3)", 1), 1};
  const ConditionOptions o = map_options(8);
  const ProfileSet p = compute_profiles(s, o);
  // eta' and eta'' written out by hand
  auto d1 = [](double x) { return -0.2 * kPi * std::sin(kTwoPi * x) + 0.3 * kPi * std::cos(3 * kTwoPi * x); };
  auto d2 = [](double x) {
    return -0.4 * kPi * kPi * std::cos(kTwoPi * x) - 1.8 * kPi * kPi * std::sin(3 * kTwoPi * x);
  };
  std::vector<double> sup1(o.times.size(), 0.0), sup2(o.times.size(), 0.0);
  for (long smp = 0; smp < o.n_samples; ++smp) {
    SampleRng rng(o.seed, Stream::map_samples, smp);
    const double x0 = rng.uniform();
    for (std::size_t i = 0; i < o.times.size(); ++i) {
      const long n = static_cast<long>(o.times[i]);
      long double a1 = 0, a2 = 0;
      for (long l = 1; l <= n; ++l) {
        const double x = frac(x0 - l * kGolden);
        a1 += d1(x);
        a2 += d2(x);
      }
      sup1[i] = std::max(sup1[i], double(std::abs(a1) / n / 2.0));
      sup2[i] = std::max(sup2[i], double(std::abs(a2) / n / 2.0));
    }
  }
  for (std::size_t i = 0; i < o.times.size(); ++i) {
    CHECK(std::abs(p.i.profile.multiplier_sup[i] - sup1[i]) < 1e-9);
    CHECK(std::abs(p.ii.profile.multiplier_sup[i] - sup2[i]) < 1e-8);
  }
  CHECK(p.i.estimate == doctest::Approx(kSafetyInflation * tail_max(p.i.profile, 100.0)));
  CHECK(p.i.verdict == Verdict::pass);
  CHECK(p.iii.estimate == 0.0);
}

TEST_CASE("constant alpha flows give closed-form multipliers") {
  ConditionOptions o;
  o.times = log_time_grid(1, 100, 4, false);
  o.n_samples = 4;
  const ProfileSet p = compute_profiles(TimeChangedFlow{TimeChange::constant()}, o);
  for (double v : p.i.profile.multiplier_sup) CHECK(v == 0.0);
  CHECK(p.iii.verdict == Verdict::pass);
  CHECK(p.sup_g_alpha == 1.0);

  const ProfileSet q = compute_profiles(TwistedFlow{TimeChange::constant(0.8), 1}, o);
  for (double v : q.i.profile.multiplier_sup) CHECK(v == doctest::Approx(0.2));
  CHECK(q.i.estimate == doctest::Approx(0.22));
  CHECK(q.i.verdict == Verdict::pass);
}

TEST_CASE("flow condition (i) profile equals |G(t)/t + 1| from the flow module") {
  ConditionOptions o;
  o.times = {1.0, 5.0, 20.0, 100.0};
  o.n_samples = 4;
  o.seed = 5;
  const TimeChange& tc = shared_alpha();
  const ProfileSet p = compute_profiles(TimeChangedFlow{tc}, o);
  std::vector<double> want(o.times.size(), 0.0);
  for (long s = 0; s < o.n_samples; ++s) {
    SampleRng rng(o.seed, Stream::conditions, s);
    const ModularPoint x = sample_modular_point(rng, tc.y_cap);
    const std::vector<double> g = G_profile(x, o.times, tc);
    for (std::size_t i = 0; i < o.times.size(); ++i)
      want[i] = std::max(want[i], std::abs(g[i] / o.times[i] + 1.0));
  }
  for (std::size_t i = 0; i < o.times.size(); ++i) CHECK(std::abs(p.i.profile.multiplier_sup[i] - want[i]) < 1e-6);
  CHECK(p.iii.estimate <= 2.0 * kSafetyInflation * p.sup_g_alpha);
}

TEST_CASE("flow profiles are stable under halved tolerances and worker count") {
  ConditionOptions o;
  o.times = log_time_grid(1, 100, 3, false);
  o.n_samples = 6;
  o.seed = 8;
  o.workers = 1;
  const System sys = TimeChangedFlow{shared_alpha()};
  const ProfileSet a = compute_profiles(sys, o);
  o.workers = 4;
  const ProfileSet b = compute_profiles(sys, o);
  CHECK(a.i.profile.multiplier_sup == b.i.profile.multiplier_sup);
  CHECK(a.ii.profile.multiplier_sup == b.ii.profile.multiplier_sup);
  o.tol = o.tol.scaled(0.5);
  const ProfileSet c = compute_profiles(sys, o);
  for (std::size_t i = 0; i < o.times.size(); ++i) {
    CHECK(std::abs(a.i.profile.multiplier_sup[i] - c.i.profile.multiplier_sup[i]) < 1e-5);
    CHECK(std::abs(a.ii.profile.multiplier_sup[i] - c.ii.profile.multiplier_sup[i]) < 1e-5);
    CHECK(std::abs(a.iii.profile.multiplier_sup[i] - c.iii.profile.multiplier_sup[i]) < 1e-5);
  }
}

TEST_CASE("half-sample profile is a nested subset") {
  const SkewProductSpec s{kGolden, 1, parse_trig_poly("0.1*cos(1)", 1), 1};
  const ProfileSet p = compute_profiles(s, map_options(10));
  for (std::size_t i = 0; i < p.i.profile.times.size(); ++i)
    CHECK(p.i.profile.multiplier_sup_half[i] <= p.i.profile.multiplier_sup[i]);
}
