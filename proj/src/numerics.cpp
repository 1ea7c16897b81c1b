#include "paraspec/numerics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cstdlib>
#include <string>

namespace paraspec {

namespace {

template <class T>
T pairwise_impl(std::span<const T> v) {
  if (v.size() <= 16) {
    T acc{};
    for (const T& x : v) acc += x;
    return acc;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_impl(v.first(half)) + pairwise_impl(v.subspan(half));
}

}  // namespace

double pairwise_sum(std::span<const double> v) { return pairwise_impl(v); }

std::complex<double> pairwise_sum(std::span<const std::complex<double>> v) { return pairwise_impl(v); }

int default_workers() {
  if (const char* env = std::getenv("PARASPEC_WORKERS")) {
    try {
      int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (...) {
    }
  }
  return 1;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& f) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr failure;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  const int count = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n));
  std::vector<std::jthread> pool;
  pool.reserve(count);
  for (int w = 0; w < count; ++w) pool.emplace_back(body);
  pool.clear();  // joins
  if (failure) std::rethrow_exception(failure);
}

QuadResult integrate_gk(const ScalarFn& f, double a, double b, double abs_tol, unsigned max_depth) {
  QuadResult out;
  if (a == b) return out;
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  // Boost terminates on error <= tol * L1; the L1 norm of a single 15-point pass
  // turns the absolute tolerance into that relative one.
  double l1 = 0.0;
  GK::integrate(f, a, b, 0, 0.0, nullptr, &l1);
  const double rel = l1 > 0.0 ? abs_tol / l1 : abs_tol;
  double error = 0.0;
  out.value = GK::integrate(f, a, b, max_depth, rel, &error);
  out.error = error;
  if (!std::isfinite(out.value)) throw QuadratureFailure("non-finite integrand");
  if (error > abs_tol && error > 1e-15 * std::abs(out.value))
    throw QuadratureFailure("depth limit reached on [" + std::to_string(a) + ", " + std::to_string(b) +
                            "], error estimate " + std::to_string(error));
  return out;
}

QuadResult integrate_segmented(const ScalarFn& f, double a, double b, double abs_tol, double segment) {
  QuadResult out;
  if (a == b) return out;
  const double length = std::abs(b - a);
  const auto pieces = static_cast<long>(std::ceil(length / segment - 1e-12));
  const double step = (b - a) / static_cast<double>(std::max<long>(pieces, 1));
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(pieces));
  for (long i = 0; i < std::max<long>(pieces, 1); ++i) {
    const double lo = a + step * static_cast<double>(i);
    const double hi = (i + 1 == pieces) ? b : a + step * static_cast<double>(i + 1);
    QuadResult part = integrate_gk(f, lo, hi, abs_tol * std::abs(hi - lo) / length);
    values.push_back(part.value);
    out.error += part.error;
  }
  out.value = pairwise_sum(values);
  return out;
}

FirstSecond richardson_derivatives(const ScalarFn& f, double h, bool want_second) {
  const double f0 = want_second ? f(0.0) : 0.0;
  std::array<double, 3> d1{}, d2{};
  double step = h;
  for (int level = 0; level < 3; ++level) {
    const double fp = f(step);
    const double fm = f(-step);
    d1[level] = (fp - fm) / (2.0 * step);
    if (want_second) d2[level] = (fp - 2.0 * f0 + fm) / (step * step);
    step *= 0.5;
  }
  auto extrapolate = [](const std::array<double, 3>& d) {
    const double r1 = (4.0 * d[1] - d[0]) / 3.0;
    const double r2 = (4.0 * d[2] - d[1]) / 3.0;
    return DerivativeEstimate{(16.0 * r2 - r1) / 15.0, std::abs(r2 - r1)};
  };
  FirstSecond out;
  out.first = extrapolate(d1);
  if (want_second) out.second = extrapolate(d2);
  return out;
}

}  // namespace paraspec
