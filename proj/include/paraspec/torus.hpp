#pragma once

#include <complex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "paraspec/correlation_series.hpp"

namespace paraspec {

using Frequency = std::vector<int>;

/// Finite trigonometric polynomial sum_m c_m e^{2 pi i m.x} on T^dim.
/// Terms are kept sorted by frequency with no duplicates and no zero coefficients.
class FourierObservable {
 public:
  explicit FourierObservable(int dim = 1) : dim_(dim) {}

  static FourierObservable constant(int dim, std::complex<double> c);
  static FourierObservable character(const Frequency& m, std::complex<double> c = 1.0);

  FourierObservable& add(const Frequency& m, std::complex<double> c);

  int dim() const { return dim_; }
  const std::vector<std::pair<Frequency, std::complex<double>>>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  std::complex<double> operator()(std::span<const double> x) const;
  std::complex<double> operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }

  // d/dx_axis: coefficients times 2 pi i m_axis.
  FourierObservable derivative(int axis) const;
  // P = -i d/dx_axis: coefficients times 2 pi m_axis.
  FourierObservable apply_p(int axis = 0) const;
  FourierObservable scaled(std::complex<double> s) const;

  double sup_bound() const;              // sum of |c_m|, an upper bound for the sup norm
  double l2_norm_sq() const;             // sum of |c_m|^2
  int bandwidth(int axis) const;         // max |m_axis|
  std::complex<double> mean() const;     // coefficient at m = 0
  bool is_real_valued(double tol = 1e-14) const;

 private:
  int dim_;
  std::vector<std::pair<Frequency, std::complex<double>>> terms_;
};

// Text form: terms separated by ';', each `coef*cos(m)`, `coef*sin(m)`,
// `coef*exp(m)` or `(re,im)*exp(m)`, with m a comma-separated integer vector of
// length dim. cos and sin denote cos(2 pi m.x) and sin(2 pi m.x). "0" is empty.
FourierObservable parse_trig_poly(std::string_view text, int dim);
// Lossless canonical text (exp form with %.17g coefficients).
std::string format_trig_poly(const FourierObservable& f);

// ---------------------------------------------------------------------------
// Systems.

/// Skew product over the rotation by y with fiber cocycle e^{2 pi i (b x + eta_lift(x))};
/// the operator acts on the character-k subspace.
struct SkewProductSpec {
  double y = 0.0;
  int b = 1;
  FourierObservable eta_lift{1};
  int k = 1;
  void validate() const;  // throws InvalidSpec
};

/// Furstenberg transformation on T^d. b is a d x d integer matrix whose strictly
/// lower part is used (b[l][i], i < l, zero-based); h[i] has dim i + 1 and
/// perturbs coordinate i + 1. (j, k) selects the operator U_{j,k} acting on
/// functions of the first j - 1 coordinates, 2 <= j <= d.
struct FurstenbergSpec {
  int d = 2;
  double y = 0.0;
  std::vector<std::vector<int>> b;
  std::vector<FourierObservable> h;
  int j = 2;
  int k = 1;
  void validate() const;  // throws InvalidSpec
};

/// Negative control: plain rotation by y on T^1 (no cocycle).
struct RotationControl {
  double y = 0.0;
};

using MapSystem = std::variant<SkewProductSpec, FurstenbergSpec, RotationControl>;

std::string describe(const MapSystem& s);

struct TorusPoint {
  std::vector<double> coords;
};

// Full map on T^d and its inverse. Throw DimensionMismatch.
TorusPoint furstenberg_apply(const FurstenbergSpec& spec, const TorusPoint& x);
TorusPoint furstenberg_inverse(const FurstenbergSpec& spec, const TorusPoint& x);

/// Base map F on T^m and phase phi (in turns) defining U psi = e^{2 pi i k phi} psi o F.
/// Coordinate a moves by shift[a] + sum_{r<a} lin[a][r] x_r + pert[a](x_0..x_{a-1}).
class ActiveMap {
 public:
  explicit ActiveMap(const MapSystem& system);

  int dim() const { return m_; }
  int k() const { return k_; }
  void forward(std::span<double> x) const;
  void backward(std::span<double> x) const;
  double phase(std::span<const double> x) const;  // unreduced phi(x)

  // Entrywise bound on |DF| (m x m, lower triangular with unit diagonal).
  std::vector<std::vector<double>> jacobian_bound() const;
  // Bound on |d phi / dx_a| for each axis.
  std::vector<double> phase_gradient_bound() const;

  // Smooth part of phi, and the integer coefficient of x_{m-1} in phi
  // (b for the skew product, b_{j,j-1} for Furstenberg).
  const FourierObservable& phase_perturbation() const { return phase_pert_; }
  double leading_coefficient() const { return lead_; }

  // Translation of coordinate `axis`, given the coordinates below it.
  double shift(int axis, std::span<const double> x) const;

 private:
  int m_ = 1;
  int k_ = 0;
  double y_ = 0.0;
  std::vector<std::vector<double>> lin_;     // lin_[a][r], r < a
  std::vector<FourierObservable> pert_;      // pert_[a] of dim a (a >= 1)
  std::vector<double> phase_lin_;            // coefficient of x_r in phi
  FourierObservable phase_pert_{1};
  double lead_ = 0.0;
};

// (1/n) sum_{l=1..n} f(F^{l} x) (forward) or f(F^{-l} x) (backward).
enum class Direction { forward, backward };
std::complex<double> birkhoff_sum_map(const FourierObservable& f, const MapSystem& system, std::span<const double> x,
                                      long n, Direction direction);

// 2 pi k eta_lift.
FourierObservable eta_tilde(const SkewProductSpec& spec);

// ---------------------------------------------------------------------------
// Grids.

/// Samples on the uniform grid of T^dim with 2^log2 points per axis, row-major
/// with axis 0 slowest; point index i has coordinate i_a / 2^log2.
struct TorusGrid {
  int dim = 1;
  int log2 = 0;
  std::vector<std::complex<double>> values;

  std::size_t n_axis() const { return std::size_t{1} << log2; }
  static TorusGrid sample(const FourierObservable& f, int log2);
  double l2_norm() const;  // sqrt of the mean of |v|^2
};

// Relative spectral energy allowed above |m| > N/4 before a grid is rejected.
inline constexpr double kAliasTolerance = 1e-20;

// Spectral energy fraction above |m| > N/4, worst axis.
double alias_fraction(const TorusGrid& g);

// (U psi)(x) = e^{2 pi i k phi(x)} psi(F x) on the grid; psi(F x) through
// per-line spectral shifts. Throws GridTooCoarse.
TorusGrid u_chi_apply(const MapSystem& system, const TorusGrid& psi);

struct CorrelationMapOptions {
  bool include_negative = false;
  int workers = 1;
};

// c_n = <U^n psi, psi> for 0 <= n <= N by grid quadrature of the pointwise
// cocycle e^{2 pi i k Phi_n(x)} psi(F^n x) conj psi(x). Error bars are the gap to
// the half-resolution grid. Throws GridTooCoarse with the first unresolved n.
CorrelationSeries correlation_map(const MapSystem& system, const FourierObservable& psi, long N, int grid_log2,
                                  const CorrelationMapOptions& opt = {});

// Frequency content of the lag-n integrand per axis (the bound the grid is validated against).
std::vector<double> lag_frequency_bound(const MapSystem& system, const FourierObservable& psi, long n);

}  // namespace paraspec
