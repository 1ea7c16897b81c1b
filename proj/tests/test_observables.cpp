#include <cmath>

#include "doctest.h"
#include "paraspec/errors.hpp"
#include "paraspec/homogeneous.hpp"
#include "paraspec/numerics.hpp"

using namespace paraspec;
using cd = std::complex<double>;

namespace {

double sigma(int k, int n) {
  double s = 0.0;
  for (int d = 1; d <= n; ++d)
    if (n % d == 0) s += std::pow(d, k);
  return s;
}

// Delta = (E4^3 - E6^2) / 1728 from the Eisenstein q-series.
cd delta_eisenstein(cd z) {
  const cd q = std::exp(cd(0.0, kTwoPi) * z);
  cd e4 = 1.0, e6 = 1.0, qn = 1.0;
  for (int n = 1; n <= 80; ++n) {
    qn *= q;
    e4 += 240.0 * sigma(3, n) * qn;
    e6 -= 504.0 * sigma(5, n) * qn;
  }
  return (e4 * e4 * e4 - e6 * e6) / 1728.0;
}

double weight12_oracle(cd z) { return std::pow(4.0 * kPi * z.imag(), 6) * std::abs(delta_eisenstein(z)); }

}  // namespace

TEST_CASE("weight-12 discriminant matches the Eisenstein series oracle") {
  for (cd z : {cd(0.0, 1.0), cd(0.5, std::sqrt(3.0) / 2), cd(-0.3, 1.1), cd(0.2, 2.5), cd(0.45, 0.95)}) {
    const double want = weight12_oracle(z);
    CHECK(std::abs(discriminant_weight12(z) - want) < 1e-9 * want);
  }
}

TEST_CASE("observable is invariant under the modular group") {
  const cd z(0.13, 1.4);
  const double u = discriminant_observable(z);
  CHECK(std::abs(discriminant_observable(z + 1.0) - u) < 1e-12);
  CHECK(std::abs(discriminant_observable(-1.0 / z) - u) < 1e-10);
  // [[2,1],[1,1]]
  const cd w = (2.0 * z + 1.0) / (z + 1.0);
  CHECK(std::abs(discriminant_observable(reduce_z(w)) - u) < 1e-10);
}

TEST_CASE("normalized observable is bounded by 1 and attains it") {
  SampleRng rng(21, Stream::test, 0);
  double best = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const ModularPoint p = sample_modular_point(rng, 20.0);
    const double u = eval_invariant_observable("discriminant", p);
    REQUIRE(u >= 0.0);
    REQUIRE(u <= 1.0 + 1e-12);
    best = std::max(best, u);
  }
  CHECK(best > 0.95);
  // u_max lies at or above the value at a grid oracle's best point
  double grid = 0.0;
  for (int i = 0; i <= 100; ++i)
    for (int j = 0; j <= 200; ++j) {
      const cd z(-0.5 + i / 100.0, 0.8 + j * 0.01);
      if (in_fundamental_domain(z)) grid = std::max(grid, weight12_oracle(z));
    }
  CHECK(discriminant_u_max() >= grid * (1 - 1e-12));
  CHECK(discriminant_u_max() <= grid * 1.01);
}

TEST_CASE("discriminant_squared is the square of the observable") {
  const cd z(0.2, 1.3);
  const double u = eval_invariant_observable("discriminant", z);
  CHECK(eval_invariant_observable("discriminant_squared", z) == doctest::Approx(u * u).epsilon(1e-14));
}

TEST_CASE("truncation error is within the reported tail bound") {
  for (cd z : {cd(0.0, 0.9), cd(0.4, 1.0)}) {
    const double a = discriminant_weight12(z, 30);
    const double b = discriminant_weight12(z, 80);
    CHECK(std::abs(a - b) / b <= discriminant_tail_bound(z, 30) + 1e-15);
  }
}

TEST_CASE("invalid orders and names are rejected") {
  CHECK_THROWS_AS(discriminant_observable({0.0, 1.0}, 29), DomainError);
  CHECK_THROWS_AS(eval_invariant_observable("nope", cd(0.0, 1.0)), UnknownObservable);
  CHECK(registered_observables().size() == 2);
}
