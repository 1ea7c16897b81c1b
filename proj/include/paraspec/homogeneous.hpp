#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "paraspec/rng.hpp"

namespace paraspec {

/// Unit-determinant 2x2 real matrix [[a, b], [c, d]], a point of SL(2,R).
///
/// Flows act on the right: the geodesic, horocycle and opposite horocycle
/// flows multiply by diag(e^{s/2}, e^{-s/2}), [[1,t],[0,1]] and [[1,0],[r,1]].
/// Every operation renormalizes by sqrt(det) once the drift exceeds 1e-12.
struct GroupElement {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  static constexpr GroupElement identity() { return {}; }
  double det() const { return a * d - b * c; }
  GroupElement operator*(const GroupElement& o) const;
  // Moebius action on the upper half plane.
  std::complex<double> act(std::complex<double> z) const { return (a * z + b) / (c * z + d); }
  GroupElement renormalized() const;
  // Frobenius norm of the difference.
  double distance(const GroupElement& o) const;
};

inline constexpr double kDetDriftThreshold = 1e-12;

// Throws DomainError for |s| > 50.
GroupElement geodesic(const GroupElement& g, double s);
GroupElement horocycle(const GroupElement& g, double t);
GroupElement opposite_horocycle(const GroupElement& g, double r);

// Sign k in a(-s) n(t) a(s) = n(t e^{k s}) for a(s) = diag(e^{s/2}, e^{-s/2}).
// Fixed against a direct 2x2 multiplication check (see test_homogeneous).
inline constexpr int kRenormalizationSign = -1;

// Frobenius norm of geodesic(I,-s) horocycle(I,t) geodesic(I,s) - horocycle(I, t e^{k s}).
// Requires |s| <= 10 and |t| <= 1e3.
double renormalization_residual(double s, double t);

/// Point of the unit tangent bundle of the modular surface, stored through its
/// fundamental-domain representative.
struct ModularPoint {
  GroupElement rep;
  std::complex<double> z{0.0, 1.0};  // rep . i, inside the standard fundamental domain
  double frame_angle = 0.0;          // K-fiber coordinate in [0, pi)
};

inline constexpr double kDomainTol = 1e-9;
inline constexpr int kReduceStepCap = 10'000;

bool in_fundamental_domain(std::complex<double> z, double tol = kDomainTol);

// Fundamental-domain reduction of g by integer translations and inversion,
// applied on the left. Throws IterationCapExceeded past kReduceStepCap steps.
ModularPoint reduce(const GroupElement& g);

// The same reduction applied to a point of the upper half plane only.
std::complex<double> reduce_z(std::complex<double> z);

// Distance between two reduced points, identifying the boundary sides of the
// fundamental domain (z ~ z +- 1 and z ~ -1/z).
double modular_distance(std::complex<double> z1, std::complex<double> z2);

// Frame angle of a matrix: g = n(x) a(y) k(theta), theta mod pi.
double frame_angle_of(const GroupElement& g);

// Draws a point from normalized hyperbolic measure dx dy / y^2 on the
// fundamental domain cut at Im z <= y_cap, with uniform frame angle.
ModularPoint sample_modular_point(SampleRng& rng, double y_cap);

// Share of the hyperbolic area of the fundamental domain above Im z = y_cap.
double cusp_mass_above(double y_cap);

// ---------------------------------------------------------------------------
// Gamma-invariant observables.

inline constexpr int kDefaultSeriesOrder = 30;

// Registered names: "discriminant", "discriminant_squared".
std::vector<std::string> registered_observables();

// Value of a registered observable at a reduced point. Throws UnknownObservable.
double eval_invariant_observable(std::string_view name, const ModularPoint& p, int order = kDefaultSeriesOrder);
double eval_invariant_observable(std::string_view name, std::complex<double> z_reduced,
                                 int order = kDefaultSeriesOrder);

// (4 pi Im z)^6 |Delta(z)| / u_max, Delta from the truncated eta-product.
double discriminant_observable(std::complex<double> z, int order = kDefaultSeriesOrder);

// Unnormalized (4 pi Im z)^6 |Delta(z)|.
double discriminant_weight12(std::complex<double> z, int order = kDefaultSeriesOrder);

// Maximum of discriminant_weight12 over the fundamental domain with Im z <= 20,
// by grid search with local refinement. Computed once per process.
double discriminant_u_max();

// Bound on the relative error of |Delta(z)| from truncating the product at `order`.
double discriminant_tail_bound(std::complex<double> z, int order);

// ---------------------------------------------------------------------------

/// Unit-speed horocycle orbit of a fixed start point. Positions are computed
/// from reduced anchors at integer times, each obtained directly from the
/// start, so rounding does not accumulate along long orbits.
class HorocycleOrbit {
 public:
  explicit HorocycleOrbit(const GroupElement& start) : start_(start) {}

  // A representative of h_s(start), close to the fundamental domain.
  GroupElement at(double s) const;
  const GroupElement& start() const { return start_; }

 private:
  const GroupElement& anchor(long k) const;

  GroupElement start_;
  mutable std::unordered_map<long, GroupElement> anchors_;
};

}  // namespace paraspec
