#include <cmath>

#include "doctest.h"
#include "paraspec/time_change.hpp"
#include "paraspec/twisted.hpp"

using namespace paraspec;

namespace {

ModularPoint test_point(std::uint64_t index) {
  SampleRng rng(51, Stream::test, index);
  return sample_modular_point(rng, 3.0);
}

const TimeChange& shared_alpha() {
  static const TimeChange tc = normalize_alpha("discriminant", 0.4, 50000, 9, 50.0, 4);
  return tc;
}

}  // namespace

TEST_CASE("unit alpha advances the circle by the elapsed time") {
  const ModularPoint x = test_point(0);
  const TimeChange one = TimeChange::constant();
  CHECK(twisted_phase(x, 7.25, one) == 7.25);
  CHECK(cocycle_a(x, 7.25, one) == 0.0);
  const TwistedPoint p{x, 0.5};
  const TwistedPoint q = twisted_flow(p, 7.25, one);
  CHECK(std::abs(q.theta - 0.75) < 1e-14);
  CHECK(modular_distance(q.base.z, reduce(horocycle(x.rep, 7.25)).z) < 1e-12);
}

TEST_CASE("phase is additive along the orbit and a = tau - t") {
  const TimeChange& tc = shared_alpha();
  const ModularPoint x = test_point(1);
  const double t1 = 2.3, t2 = 5.1;
  const double whole = twisted_phase(x, t1 + t2, tc);
  const ModularPoint mid = reduce(horocycle(x.rep, t1));
  const double split = twisted_phase(x, t1, tc) + twisted_phase(mid, t2, tc);
  CHECK(std::abs(whole - split) < 1e-8);
  CHECK(std::abs(cocycle_a(x, t1 + t2, tc) - (whole - (t1 + t2))) < 1e-8);
  CHECK(std::abs(twisted_phase(x, -t1, tc) + twisted_phase(reduce(horocycle(x.rep, -t1)), t1, tc)) < 1e-8);
}

TEST_CASE("phase agrees with a trapezoid oracle") {
  const TimeChange& tc = shared_alpha();
  const ModularPoint x = test_point(2);
  const double t = 3.0;
  const int n = 20000;
  double s = 0.5 * (tc.alpha(x.rep) + tc.alpha(horocycle(x.rep, t)));
  for (int i = 1; i < n; ++i) s += tc.alpha(horocycle(x.rep, t * i / n));
  CHECK(std::abs(twisted_phase(x, t, tc) - s * t / n) < 1e-7);
}

TEST_CASE("twisted flow keeps theta in [0, 1) and composes") {
  const TimeChange& tc = shared_alpha();
  const TwistedPoint p{test_point(3), 0.9};
  const TwistedPoint a = twisted_flow(twisted_flow(p, 1.5, tc), 2.0, tc);
  const TwistedPoint b = twisted_flow(p, 3.5, tc);
  CHECK(a.theta >= 0.0);
  CHECK(a.theta < 1.0);
  const double dtheta = std::abs(a.theta - b.theta);
  CHECK(std::min(dtheta, 1.0 - dtheta) < 1e-8);
  CHECK(modular_distance(a.base.z, b.base.z) < 1e-9);
}
