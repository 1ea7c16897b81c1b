#include <atomic>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "paraspec/numerics.hpp"
#include "paraspec/rng.hpp"

using namespace paraspec;

TEST_CASE("pairwise_sum agrees with a long double accumulation") {
  SampleRng rng(3, Stream::test, 0);
  std::vector<double> v(100001);
  for (double& x : v) x = rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.uniform(-3.0, 3.0));
  long double ref = 0.0L;
  for (double x : v) ref += x;
  CHECK(std::abs(pairwise_sum(v) - static_cast<double>(ref)) < 1e-9);
}

TEST_CASE("pairwise_sum of an empty range is zero") {
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("parallel_for visits every index once for any worker count") {
  for (int workers : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
}

TEST_CASE("parallel_for rethrows the lowest failing index") {
  for (int workers : {1, 4}) {
    try {
      parallel_for(100, workers, [](std::size_t i) {
        if (i == 17 || i == 60) throw DomainError("index " + std::to_string(i));
      });
      FAIL("no exception");
    } catch (const DomainError& e) {
      CHECK(std::string(e.what()).find("index 17") != std::string::npos);
    }
  }
}

TEST_CASE("Gauss-Kronrod integrates sin over [0, pi] to 2") {
  const QuadResult q = integrate_gk([](double x) { return std::sin(x); }, 0.0, kPi, 1e-12);
  CHECK(std::abs(q.value - 2.0) < 1e-12);
}

TEST_CASE("Gauss-Kronrod on a peaked integrand matches the antiderivative") {
  // integral of 1 / (1 + 100 x^2) over [-1, 2] = (atan(20) + atan(10)) / 10
  const double want = (std::atan(20.0) + std::atan(10.0)) / 10.0;
  const QuadResult q = integrate_gk([](double x) { return 1.0 / (1.0 + 100.0 * x * x); }, -1.0, 2.0, 1e-11);
  CHECK(std::abs(q.value - want) < 1e-10);
}

TEST_CASE("integrate_segmented handles long oscillatory ranges") {
  // integral of cos(x) over [0, 300] = sin(300)
  const QuadResult q = integrate_segmented([](double x) { return std::cos(x); }, 0.0, 300.0, 1e-10);
  CHECK(std::abs(q.value - std::sin(300.0)) < 1e-9);
  CHECK(integrate_segmented([](double) { return 1.0; }, 2.0, 2.0, 1e-9).value == 0.0);
}

TEST_CASE("quadrature reports failure on a non-integrable singularity") {
  CHECK_THROWS_AS(integrate_gk([](double x) { return 1.0 / x; }, 0.0, 1.0, 1e-12, 6), QuadratureFailure);
}

TEST_CASE("Richardson derivatives of sin match cos and -sin") {
  for (double x0 : {-1.3, 0.0, 0.4, 2.0}) {
    const FirstSecond d = richardson_derivatives([&](double h) { return std::sin(x0 + h); }, 1e-2, true);
    CHECK(std::abs(d.first.value - std::cos(x0)) < 1e-11);
    CHECK(std::abs(d.second.value + std::sin(x0)) < 1e-8);
    CHECK(d.first.error < 1e-9);
  }
}

TEST_CASE("dopri5 reproduces exponential decay at every checkpoint") {
  const std::vector<double> times = {0.5, 1.0, 2.5, 7.0};
  OdeOptions opt;
  opt.rtol = opt.atol = 1e-10;
  std::vector<double> got(times.size());
  dopri5<1>([](double, const std::array<double, 1>& y) { return std::array<double, 1>{-y[0]}; }, 0.0, {1.0}, times,
            opt, [&](std::size_t i, double t, const std::array<double, 1>& y) {
              CHECK(t == times[i]);
              got[i] = y[0];
            });
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(std::abs(got[i] - std::exp(-times[i])) < 1e-9);
}

TEST_CASE("dopri5 integrates backwards in time") {
  const std::vector<double> times = {-1.0, -3.0};
  const auto y = dopri5<2>(
      [](double, const std::array<double, 2>& s) { return std::array<double, 2>{s[1], -s[0]}; }, 0.0, {0.0, 1.0},
      times, OdeOptions{}, [](std::size_t, double, const auto&) {});
  CHECK(std::abs(y[0] - std::sin(-3.0)) < 1e-6);
  CHECK(std::abs(y[1] - std::cos(-3.0)) < 1e-6);
}

TEST_CASE("dopri5 turns a blow-up into OdeStepFailure") {
  const std::vector<double> times = {2.0};
  CHECK_THROWS_AS(dopri5<1>([](double, const std::array<double, 1>& y) { return std::array<double, 1>{y[0] * y[0]}; },
                            0.0, {1.0}, times, OdeOptions{}, [](std::size_t, double, const auto&) {}),
                  OdeStepFailure);
}

TEST_CASE("Tolerances::scaled halves every tolerance") {
  const Tolerances t{};
  const Tolerances h = t.scaled(0.5);
  CHECK(h.ode == t.ode / 2);
  CHECK(h.quad_rel == t.quad_rel / 2);
  CHECK(h.quad_abs == t.quad_abs / 2);
}

TEST_CASE("frac maps into [0, 1)") {
  CHECK(frac(2.25) == 0.25);
  CHECK(frac(-0.25) == 0.75);
  CHECK(frac(-1e-18) < 1.0);
}
