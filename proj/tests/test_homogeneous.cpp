#include <cmath>

#include "doctest.h"
#include "paraspec/errors.hpp"
#include "paraspec/homogeneous.hpp"
#include "paraspec/numerics.hpp"

using namespace paraspec;
using cd = std::complex<double>;

namespace {

struct M2 {
  double a, b, c, d;
};
M2 mul(M2 x, M2 y) { return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d}; }

GroupElement inverse(const GroupElement& g) { return {g.d, -g.b, -g.c, g.a}; }

GroupElement random_element(SampleRng& rng) {
  GroupElement g{};
  for (int i = 0; i < 2; ++i) {
    g = horocycle(g, rng.uniform(-2.0, 2.0));
    g = geodesic(g, rng.uniform(-2.0, 2.0));
    g = opposite_horocycle(g, rng.uniform(-1.0, 1.0));
  }
  return g;
}

}  // namespace

TEST_CASE("renormalization sign from an explicit matrix product") {
  for (double s : {-2.0, 0.3, 1.7}) {
    const double t = 0.8;
    const M2 am{std::exp(-s / 2), 0, 0, std::exp(s / 2)};
    const M2 ap{std::exp(s / 2), 0, 0, std::exp(-s / 2)};
    const M2 prod = mul(mul(am, {1, t, 0, 1}), ap);
    // prod = n(t e^{k s}); solve for k
    const double k = std::log(prod.b / t) / s;
    CHECK(std::abs(k - kRenormalizationSign) < 1e-12);
    CHECK(renormalization_residual(s, t) < 1e-12);
  }
  CHECK_THROWS_AS(renormalization_residual(11.0, 1.0), DomainError);
}

TEST_CASE("flows multiply on the right by the one-parameter subgroups") {
  const GroupElement g{2.0, 1.0, 3.0, 2.0};
  const GroupElement h = horocycle(g, 0.5);
  CHECK(h.distance({2.0, 2.0, 3.0, 3.5}) < 1e-15);
  const GroupElement a = geodesic(g, std::log(4.0));
  CHECK(a.distance({4.0, 0.5, 6.0, 1.0}) < 1e-14);
  const GroupElement o = opposite_horocycle(g, -1.0);
  CHECK(o.distance({1.0, 1.0, 1.0, 2.0}) < 1e-15);
  CHECK_THROWS_AS(geodesic(g, 51.0), DomainError);
}

TEST_CASE("flow compositions are group actions and keep det = 1") {
  SampleRng rng(11, Stream::test, 1);
  GroupElement g = random_element(rng);
  CHECK(horocycle(horocycle(g, 0.4), 1.1).distance(horocycle(g, 1.5)) < 1e-12 * (1 + std::abs(g.a) + std::abs(g.c)));
  for (int i = 0; i < 10000; ++i) {
    g = horocycle(geodesic(g, 0.001), -0.002);
    const double norm2 = g.a * g.a + g.b * g.b + g.c * g.c + g.d * g.d;
    REQUIRE(std::abs(g.det() - 1.0) <= kDetDriftThreshold + 4e-16 * norm2);
  }
}

TEST_CASE("reduction lands in the fundamental domain through an integer matrix") {
  SampleRng rng(12, Stream::test, 2);
  for (int trial = 0; trial < 500; ++trial) {
    const GroupElement g = random_element(rng);
    const ModularPoint p = reduce(g);
    REQUIRE(in_fundamental_domain(p.z));
    CHECK(std::abs(p.rep.act({0.0, 1.0}) - p.z) < 1e-12);
    const GroupElement gamma = p.rep * inverse(g);
    const double scale = g.distance({0, 0, 0, 0}) * p.rep.distance({0, 0, 0, 0});
    for (double e : {gamma.a, gamma.b, gamma.c, gamma.d}) CHECK(std::abs(e - std::round(e)) < 1e-12 * scale * scale);
    CHECK(std::abs(std::round(gamma.a) * std::round(gamma.d) - std::round(gamma.b) * std::round(gamma.c) - 1.0) ==
          0.0);
    // idempotent
    const ModularPoint q = reduce(p.rep);
    CHECK(q.rep.distance(p.rep) == 0.0);
    CHECK(modular_distance(reduce_z(g.act({0.0, 1.0})), p.z) < 1e-9);
  }
}

TEST_CASE("modular_distance identifies the boundary sides") {
  CHECK(modular_distance({0.5, 1.3}, {-0.5, 1.3}) < 1e-15);
  const double th = 1.2;
  CHECK(modular_distance(std::polar(1.0, th), std::polar(1.0, kPi - th)) < 1e-15);
  CHECK(std::abs(modular_distance({0.0, 2.0}, {0.0, 3.0}) - 1.0) < 1e-15);
}

TEST_CASE("frame angle of n(x) a(y) k(theta) is theta mod pi") {
  for (double th : {0.0, 0.4, 2.9, 3.5, -1.0}) {
    const GroupElement k{std::cos(th), -std::sin(th), std::sin(th), std::cos(th)};
    const GroupElement g = geodesic(horocycle(GroupElement::identity(), 0.3), 0.7) * k;
    double want = std::fmod(th, kPi);
    if (want < 0) want += kPi;
    CHECK(std::abs(frame_angle_of(g) - want) < 1e-12);
  }
}

TEST_CASE("sampling follows hyperbolic area on the truncated domain") {
  // area of {Im z > Y} in the domain is 1/Y, total pi/3; {Im z < 1} has pi/3 - 1
  const double y_cap = 50.0;
  const double total = kPi / 3.0 - 1.0 / y_cap;
  const double p_above2 = (0.5 - 1.0 / y_cap) / total;
  const double p_below1 = (kPi / 3.0 - 1.0) / total;
  SampleRng rng(13, Stream::test, 3);
  const int n = 200000;
  int above2 = 0, below1 = 0, right = 0;
  double frame_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const ModularPoint p = sample_modular_point(rng, y_cap);
    REQUIRE(in_fundamental_domain(p.z));
    REQUIRE(p.z.imag() <= y_cap);
    above2 += p.z.imag() > 2.0;
    below1 += p.z.imag() < 1.0;
    right += p.z.real() > 0.0;
    frame_sum += p.frame_angle;
  }
  auto within = [&](int count, double p) { return std::abs(count / double(n) - p) < 5.0 * std::sqrt(p * (1 - p) / n); };
  CHECK(within(above2, p_above2));
  CHECK(within(below1, p_below1));
  CHECK(within(right, 0.5));
  CHECK(std::abs(frame_sum / n - kPi / 2) < 5.0 * kPi / std::sqrt(12.0 * n));
  CHECK(std::abs(cusp_mass_above(y_cap) - 3.0 / (kPi * y_cap)) < 1e-15);
}

TEST_CASE("HorocycleOrbit agrees with direct reduction of the flowed point") {
  SampleRng rng(14, Stream::test, 4);
  const ModularPoint start = sample_modular_point(rng, 50.0);
  const HorocycleOrbit orbit(start.rep);
  for (double s : {0.0, 0.25, 1.0, 7.5, 33.3, 250.0, -12.0}) {
    const cd direct = reduce(horocycle(start.rep, s)).z;
    const cd via = reduce(orbit.at(s)).z;
    CHECK(modular_distance(direct, via) < 1e-8);
  }
}

TEST_CASE("reduce rejects degenerate matrices") {
  CHECK_THROWS_AS(reduce(GroupElement{1.0, 0.0, 0.0, -1.0}), DomainError);
}
