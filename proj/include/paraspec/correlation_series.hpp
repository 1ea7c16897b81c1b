#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace paraspec {

struct EstimatorInfo {
  std::string method = "quadrature";  // quadrature | montecarlo | synthetic
  long samples = 0;                   // grid points or Monte Carlo samples
  std::uint64_t seed = 0;
  int grid_log2 = 0;
};

/// Sampled correlation function c(t) = <e^{tU} f, f> with one error bar per point.
struct CorrelationSeries {
  std::vector<double> times;
  std::vector<std::complex<double>> values;
  std::vector<double> std_error;
  EstimatorInfo estimator;
  std::string system_desc;

  std::size_t size() const { return times.size(); }
  // Index of time 0, or -1.
  long zero_index() const {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (times[i] == 0.0) return static_cast<long>(i);
    return -1;
  }
};

}  // namespace paraspec
