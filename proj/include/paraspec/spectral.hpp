#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "paraspec/correlation_series.hpp"
#include "paraspec/numerics.hpp"
#include "paraspec/systems.hpp"

namespace paraspec {

struct FlowCorrelationOptions {
  std::string observable = "discriminant";
  double T = 50.0;
  double dt = 0.5;
  long n_samples = 512;
  std::uint64_t seed = 0;
  int workers = 1;
  Tolerances tol{};
};

inline constexpr int kBatchCount = 16;

// Monte Carlo c(t) = <f o phi_t, f> on the grid 0, dt, ..., T for a time-changed
// or twisted flow. Samples carry the weight alpha (the invariant volume of the
// time change); f is centered by its weighted sample mean. Twisted systems use
// f = phi(x) e^{2 pi i n theta}, whose theta dependence contributes the phase
// e^{2 pi i n tau(x, t)}. Error bars from 16 batch means. Throws
// InsufficientSamples, InvalidSpec for map systems.
CorrelationSeries correlation_flow(const System& system, const FlowCorrelationOptions& opt);

// ---------------------------------------------------------------------------

enum class L2Verdict { bounded, growing, undetermined };
std::string to_string(L2Verdict v);  // "BOUNDED" | "GROWING" | "UNDETERMINED"

inline constexpr double kBoundedShare = 0.05;

struct PartialNorm {
  std::vector<double> times;       // nonnegative times of the series
  std::vector<double> cumulative;  // running sum of |c|^2 (unit-step lags) or trapezoid integral;
                                   // Monte Carlo series use max(|c|^2 - se^2, 0)
  std::vector<double> decade_ends;       // t_max / 10^k, increasing
  std::vector<double> decade_increments; // cumulative growth over each decade, oldest first
  double total = 0.0;
  L2Verdict verdict = L2Verdict::undetermined;
};

PartialNorm l2_partial_norm(const CorrelationSeries& series);

struct DecayFit {
  double beta_hat = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // 95% bin bootstrap
  int n_points = 0;                    // series points in the fit window
  int n_bins = 0;
  int nonmonotone_bins = 0;
  bool unreliable = false;
  bool no_decay = false;               // |beta_hat| below kNoDecayBeta
  std::vector<double> env_times, env_values;
};

inline constexpr int kMinFitPoints = 30;
inline constexpr double kNoDecayBeta = 0.05;

// Bin-max envelope over the last two decades, log-log least squares.
// Throws TooFewPoints.
DecayFit decay_exponent(const CorrelationSeries& series, int bins_per_decade = 10, std::uint64_t seed = 0,
                        int bootstrap_rounds = 1000);

enum class Window { hann, none };
Window parse_window(const std::string& s);
std::string to_string(Window w);

struct Density {
  std::vector<double> freq;     // cycles per unit time, ascending
  std::vector<double> density;  // clipped at 0
  double min_value = 0.0;       // before clipping
  double mass = 0.0;            // sum density * d freq (clipped)
  double c0 = 0.0;
  double mass_error = 0.0;      // |mass - c0| / c0
  double ripple = 0.0;          // max |density - mean| / mean
};

inline constexpr double kMassTolerance = 0.05;

// Windowed transform of the Hermitian-completed series. Requires times
// 0, dt, 2 dt, ... Throws NonuniformGrid.
Density spectral_density(const CorrelationSeries& series, Window window = Window::hann, int pad = 4);

struct BochnerResult {
  double min_eigenvalue = 0.0;
  double bound = 0.0;  // pass iff min_eigenvalue >= bound
  bool pass = false;
  int m = 0;
};

// Smallest eigenvalue of the m x m Hermitian Toeplitz matrix of lags 0..m-1.
// Bound: -1e-6 c(0), widened for Monte Carlo series by 3 (se_0 + 2 sum se_n).
// Throws TooFewPoints, InvalidSpec (m > 512).
BochnerResult bochner_check(const CorrelationSeries& series, int m = 128);

struct SpectralEstimate {
  Density density;
  PartialNorm partial_norm;
  DecayFit decay;
  bool decay_available = false;
  BochnerResult bochner;
  bool density_nonneg = false;
};

SpectralEstimate spectral_estimate(const CorrelationSeries& series, Window window, int pad, int bochner_m,
                                   std::uint64_t seed);

}  // namespace paraspec
