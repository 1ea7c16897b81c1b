#include <cmath>

#include "doctest.h"
#include "paraspec/errors.hpp"
#include "paraspec/numerics.hpp"
#include "paraspec/torus.hpp"

using namespace paraspec;
using cd = std::complex<double>;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

cd cis(double turns) { return std::polar(1.0, kTwoPi * turns); }

SkewProductSpec skew(const std::string& eta, int b = 1, int k = 1) {
  return SkewProductSpec{kGolden, b, parse_trig_poly(eta, 1), k};
}

FurstenbergSpec furstenberg3(const std::string& h1, const std::string& h2) {
  FurstenbergSpec f;
  f.d = 3;
  f.y = kGolden;
  f.b = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  f.h = {parse_trig_poly(h1, 1), parse_trig_poly(h2, 2)};
  f.j = 3;
  f.k = 1;
  return f;
}

// Midpoint-rule correlation of the skew product written from its definition.
std::vector<cd> skew_oracle(const SkewProductSpec& s, const FourierObservable& psi, int n_max, int points) {
  std::vector<cd> c(n_max + 1, 0.0);
  for (int p = 0; p < points; ++p) {
    const double x0 = (p + 0.5) / points;
    double x = x0, phase = 0.0;
    for (int n = 0; n <= n_max; ++n) {
      c[n] += cis(s.k * phase) * psi(x) * std::conj(psi(x0));
      phase += s.b * x + s.eta_lift(x).real();
      x = frac(x + s.y);
    }
  }
  for (cd& v : c) v /= points;
  return c;
}

// Same for the d = 3 Furstenberg map acting on the first two coordinates.
std::vector<cd> furstenberg3_oracle(const FurstenbergSpec& s, const FourierObservable& psi, int n_max, int points) {
  std::vector<cd> c(n_max + 1, 0.0);
  for (int p = 0; p < points; ++p)
    for (int q = 0; q < points; ++q) {
      const double a0 = (p + 0.5) / points, a1 = (q + 0.5) / points;
      double x[2] = {a0, a1};
      const cd psi0 = psi(std::span<const double>(x, 2));
      double phase = 0.0;
      for (int n = 0; n <= n_max; ++n) {
        c[n] += cis(phase) * psi(std::span<const double>(x, 2)) * std::conj(psi0);
        phase += s.b[2][0] * x[0] + s.b[2][1] * x[1] + s.h[1](std::span<const double>(x, 2)).real();
        const double nx1 = x[1] + s.b[1][0] * x[0] + s.h[0](x[0]).real();
        x[0] = frac(x[0] + s.y);
        x[1] = frac(nx1);
      }
    }
  for (cd& v : c) v /= double(points) * points;
  return c;
}

}  // namespace

TEST_CASE("trig polynomials parse into the expected coefficients") {
  const FourierObservable f = parse_trig_poly("0.5*cos(1); 0.2*sin(3); (1,2)*exp(-2); 0.25", 1);
  for (double x : {0.0, 0.1, 0.77}) {
    const cd want = 0.5 * std::cos(kTwoPi * x) + 0.2 * std::sin(3 * kTwoPi * x) + cd(1, 2) * cis(-2 * x) + 0.25;
    CHECK(std::abs(f(x) - want) < 1e-14);
  }
  CHECK(f.mean() == cd(0.25));
  CHECK(f.bandwidth(0) == 3);
  CHECK(parse_trig_poly("0", 1).empty());
  CHECK(parse_trig_poly("0.3*cos(1,2)", 2).bandwidth(1) == 2);
}

TEST_CASE("canonical text round-trips exactly") {
  const FourierObservable f = parse_trig_poly("0.1*cos(1); 0.05*sin(3); (0.3,-0.7)*exp(5)", 1);
  const std::string text = format_trig_poly(f);
  const FourierObservable g = parse_trig_poly(text, 1);
  CHECK(format_trig_poly(g) == text);
  REQUIRE(g.terms().size() == f.terms().size());
  for (std::size_t i = 0; i < f.terms().size(); ++i) CHECK(g.terms()[i] == f.terms()[i]);
  CHECK(text.find("-0,") == std::string::npos);
}

TEST_CASE("malformed trig polynomials are rejected") {
  CHECK_THROWS_AS(parse_trig_poly("0.1*tan(1)", 1), InvalidSpec);
  CHECK_THROWS_AS(parse_trig_poly("0.1*cos(1,2)", 1), InvalidSpec);
  CHECK_THROWS_AS(parse_trig_poly("abc*cos(1)", 1), InvalidSpec);
  CHECK_THROWS_AS(parse_trig_poly("0.1 cos(1)", 1), InvalidSpec);
  CHECK_THROWS_AS(parse_trig_poly("0.1*cos(x)", 1), InvalidSpec);
}

TEST_CASE("derivative and P agree with finite differences") {
  const FourierObservable f = parse_trig_poly("0.3*cos(2,1); 0.2*sin(1,-3)", 2);
  const double x[2] = {0.31, 0.58};
  const double h = 1e-5;
  for (int axis = 0; axis < 2; ++axis) {
    double xp[2] = {x[0], x[1]}, xm[2] = {x[0], x[1]};
    xp[axis] += h;
    xm[axis] -= h;
    const cd fd = (f(std::span<const double>(xp, 2)) - f(std::span<const double>(xm, 2))) / (2 * h);
    CHECK(std::abs(f.derivative(axis)(std::span<const double>(x, 2)) - fd) < 1e-7);
    CHECK(std::abs(f.apply_p(axis)(std::span<const double>(x, 2)) - cd(0, -1) * fd) < 1e-7);
  }
}

TEST_CASE("norm bounds are consistent with grid samples") {
  const FourierObservable f = parse_trig_poly("0.3*cos(2); 0.2*sin(5); 0.1", 1);
  const TorusGrid g = TorusGrid::sample(f, 6);
  double sup = 0.0;
  for (const cd& v : g.values) sup = std::max(sup, std::abs(v));
  CHECK(sup <= f.sup_bound() + 1e-15);
  CHECK(std::abs(g.l2_norm() * g.l2_norm() - f.l2_norm_sq()) < 1e-14);
  CHECK(f.is_real_valued());
  CHECK_FALSE(parse_trig_poly("1*exp(1)", 1).is_real_valued());
}

TEST_CASE("Furstenberg map and ActiveMap invert exactly") {
  const FurstenbergSpec f = furstenberg3("0.1*cos(1)", "0.05*sin(1,1)");
  const TorusPoint x{{0.12, 0.5, 0.93}};
  const TorusPoint y = furstenberg_inverse(f, furstenberg_apply(f, x));
  for (int i = 0; i < 3; ++i) CHECK(std::abs(y.coords[i] - x.coords[i]) < 1e-14);
  CHECK_THROWS_AS(furstenberg_apply(f, TorusPoint{{0.1, 0.2}}), DimensionMismatch);

  const ActiveMap map(f);
  CHECK(map.dim() == 2);
  double z[2] = {0.7, 0.2};
  map.forward(z);
  // first two coordinates of the full map
  const TorusPoint full = furstenberg_apply(f, TorusPoint{{0.7, 0.2, 0.0}});
  CHECK(std::abs(z[0] - full.coords[0]) < 1e-15);
  CHECK(std::abs(z[1] - full.coords[1]) < 1e-15);
  map.backward(z);
  CHECK(std::abs(z[0] - 0.7) < 1e-14);
  CHECK(std::abs(z[1] - 0.2) < 1e-14);
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(ActiveMap(SkewProductSpec{1.5, 1, FourierObservable(1), 1}), InvalidSpec);
  CHECK_THROWS_AS(ActiveMap(SkewProductSpec{0.3, 0, FourierObservable(1), 1}), InvalidSpec);
  FurstenbergSpec f = furstenberg3("0", "0");
  f.b[2][1] = 0;
  CHECK_THROWS_AS(ActiveMap{f}, InvalidSpec);
  f = furstenberg3("0", "0");
  f.j = 4;
  CHECK_THROWS_AS(ActiveMap{f}, InvalidSpec);
}

TEST_CASE("unperturbed Furstenberg correlations vanish off zero") {
  FurstenbergSpec f;
  f.d = 2;
  f.y = kGolden;
  f.b = {{0, 0}, {1, 0}};
  f.h = {FourierObservable(1)};
  const CorrelationSeries c = correlation_map(f, parse_trig_poly("1*exp(0)", 1), 200, 10);
  CHECK(std::abs(c.values[0] - 1.0) < 1e-15);
  double worst = 0.0;
  for (std::size_t n = 1; n < c.size(); ++n) worst = std::max(worst, std::abs(c.values[n]));
  CHECK(worst < 1e-12);
}

TEST_CASE("rotation correlations are pure phases") {
  const CorrelationSeries c = correlation_map(RotationControl{kGolden}, parse_trig_poly("1*exp(1)", 1), 300, 6);
  for (std::size_t n = 0; n < c.size(); ++n) CHECK(std::abs(c.values[n] - cis(n * kGolden)) < 1e-11);
}

TEST_CASE("skew product correlations match a midpoint oracle") {
  const SkewProductSpec s = skew("0.1*cos(1); 0.05*sin(3)");
  const FourierObservable psi = parse_trig_poly("1*cos(1)", 1);
  const CorrelationSeries c = correlation_map(s, psi, 20, 14);
  const std::vector<cd> want = skew_oracle(s, psi, 20, 1 << 15);
  for (int n = 0; n <= 20; ++n) {
    CHECK(std::abs(c.values[n] - want[n]) < 1e-11);
    CHECK(c.std_error[n] < 1e-9);
  }
}

TEST_CASE("Furstenberg d = 3 correlations match a midpoint oracle") {
  const FurstenbergSpec f = furstenberg3("0.05*cos(1)", "0.03*sin(1,1)");
  const FourierObservable psi = parse_trig_poly("1*exp(0,0)", 2);
  const CorrelationSeries c = correlation_map(f, psi, 6, 8, {false, 4});
  const std::vector<cd> want = furstenberg3_oracle(f, psi, 6, 1 << 8);
  for (int n = 0; n <= 6; ++n) CHECK(std::abs(c.values[n] - want[n]) < 1e-10);
}

TEST_CASE("negative lags are conjugates of positive ones") {
  const SkewProductSpec s = skew("0.1*cos(1)");
  const CorrelationSeries c = correlation_map(s, parse_trig_poly("1*cos(1)", 1), 10, 12, {true, 2});
  REQUIRE(c.size() == 21);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.times[i] >= 0) continue;
    for (std::size_t j = 0; j < c.size(); ++j)
      if (c.times[j] == -c.times[i]) CHECK(std::abs(c.values[i] - std::conj(c.values[j])) < 1e-12);
  }
}

TEST_CASE("correlation_map is independent of the worker count") {
  const SkewProductSpec s = skew("0.1*cos(1)");
  const FourierObservable psi = parse_trig_poly("1*cos(1)", 1);
  const CorrelationSeries a = correlation_map(s, psi, 40, 12, {false, 1});
  const CorrelationSeries b = correlation_map(s, psi, 40, 12, {false, 7});
  CHECK(a.values == b.values);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("U is unitary and agrees with the pointwise formula") {
  const SkewProductSpec s = skew("0.1*cos(1)");
  const FourierObservable psi = parse_trig_poly("0.7*cos(2); (0.2,0.1)*exp(-3)", 1);
  const TorusGrid g = TorusGrid::sample(psi, 6);
  const TorusGrid u = u_chi_apply(s, g);
  CHECK(std::abs(u.l2_norm() - g.l2_norm()) < 1e-13);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    const double x = double(i) / g.values.size();
    const cd want = cis(s.k * (s.b * x + s.eta_lift(x).real())) * psi(frac(x + s.y));
    CHECK(std::abs(u.values[i] - want) < 1e-12);
  }
}

TEST_CASE("one step of U reproduces c_1") {
  const SkewProductSpec s = skew("0");
  const FourierObservable psi = parse_trig_poly("1*cos(2)", 1);
  const TorusGrid g = TorusGrid::sample(psi, 5);
  const TorusGrid u = u_chi_apply(s, g);
  cd inner = 0.0;
  for (std::size_t i = 0; i < g.values.size(); ++i) inner += u.values[i] * std::conj(g.values[i]);
  inner /= double(g.values.size());
  const CorrelationSeries c = correlation_map(s, psi, 1, 5);
  CHECK(std::abs(inner - c.values[1]) < 1e-13);
}

TEST_CASE("coarse grids are rejected") {
  const TorusGrid g = TorusGrid::sample(parse_trig_poly("1*cos(12)", 1), 5);
  CHECK(alias_fraction(g) > 0.1);
  CHECK_THROWS_AS(u_chi_apply(skew("0"), g), GridTooCoarse);
  CHECK(alias_fraction(TorusGrid::sample(parse_trig_poly("1*cos(3)", 1), 5)) < 1e-25);

  const SkewProductSpec s = skew("0.1*cos(1)");
  const FourierObservable psi = parse_trig_poly("1*cos(1)", 1);
  try {
    correlation_map(s, psi, 100, 6);
    FAIL("expected GridTooCoarse");
  } catch (const GridTooCoarse& e) {
    REQUIRE(e.lag() > 0);
    CHECK(2 * lag_frequency_bound(s, psi, e.lag())[0] >= 64);
    CHECK(2 * lag_frequency_bound(s, psi, e.lag() - 1)[0] < 64);
  }
}

TEST_CASE("Birkhoff averages of a rotation follow the geometric sum") {
  const FourierObservable f = parse_trig_poly("1*exp(1)", 1);
  const double x = 0.3;
  const long n = 50;
  cd want = 0.0;
  for (long l = 1; l <= n; ++l) want += cis(x + l * kGolden);
  want /= double(n);
  CHECK(std::abs(birkhoff_sum_map(f, RotationControl{kGolden}, std::span<const double>(&x, 1), n, Direction::forward) -
                 want) < 1e-12);
  cd back = 0.0;
  for (long l = 1; l <= n; ++l) back += cis(x - l * kGolden);
  back /= double(n);
  CHECK(std::abs(birkhoff_sum_map(f, RotationControl{kGolden}, std::span<const double>(&x, 1), n, Direction::backward) -
                 back) < 1e-12);
}
