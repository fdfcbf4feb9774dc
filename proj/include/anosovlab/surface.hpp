#pragma once

// Genus-2 surface: regular hyperbolic octagon with angles pi/4 in the
// Poincare disk, side pairings aba^-1b^-1cdc^-1d^-1, and conformal radial
// bumps g = e^{2u} g_hyp that create small positively curved bubbles.

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "anosovlab/hyperbolic.hpp"
#include "anosovlab/ode.hpp"
#include "anosovlab/riccati.hpp"

namespace anosovlab::surface {

using hyperbolic::Complex;
using hyperbolic::Mobius;
using riccati::Interval;

class FuchsianDomain {
 public:
  static constexpr int kSides = 8;

  FuchsianDomain();

  double circumradius() const { return circumradius_; }  // hyperbolic
  double inradius() const { return inradius_; }          // hyperbolic
  double vertex_radius() const { return vertex_radius_; }  // Euclidean
  Complex vertex(int i) const;                           // between sides i-1 and i
  double side_angle(int i) const;                        // direction of the side midpoint
  Complex side_center(int i) const { return centers_[i]; }
  double side_radius() const { return side_radius_; }
  int partner(int i) const;
  /// Maps side i onto side partner(i), sending the outside of side i into
  /// the domain. pairing(partner(i)) is its inverse.
  const Mobius& pairing(int i) const { return pairings_[i]; }

  /// |z - c_i|^2 - rho^2: positive on the domain side of side i.
  double side_value(int i, Complex z) const;
  bool contains(Complex z) const;
  double distance_to_boundary(Complex z) const;
  double distance_to_side(int i, Complex z) const;
  /// Hyperbolic distance from the centre to the boundary along direction theta.
  double boundary_radius(double theta) const;

  /// Max hyperbolic-distance error of the pairings on sample points per side.
  double pairing_isometry_residual(int samples = 16) const;
  /// Sum of interior angles over the vertex cycle.
  double vertex_angle_sum() const;
  /// Number of vertex classes after gluing (1 for the genus-2 surface).
  int vertex_classes() const;
  /// Applies pairings until z lies in the closed domain.
  Complex reduce(Complex z, std::vector<int>* word = nullptr) const;

 private:
  double circumradius_, inradius_, vertex_radius_, side_radius_, center_distance_;
  std::array<Complex, kSides> centers_;
  std::array<Mobius, kSides> pairings_;
};

/// u = A psi(d(x, p) / delta) with psi(s) = (1 - s^2)^3 on [0, 1].
struct Bump {
  Complex center;
  double delta = 0.05;  // hyperbolic support radius
  double amplitude = 0;
};

double psi(double s);
double psi_prime(double s);
double psi_second(double s);

struct GaussBonnetResult {
  double integral = 0;  // integral of K dA
  double volume = 0;
  double rel_error = 0;  // |integral + 4 pi| / 4 pi
  int n_radial = 0;
  int n_angular = 0;
};

class BubbledSurface {
 public:
  /// Throws LayoutError when supports overlap or enter the boundary collar.
  explicit BubbledSurface(std::vector<Bump> bumps = {});

  const FuchsianDomain& domain() const { return domain_; }
  const std::vector<Bump>& bumps() const { return bumps_; }
  static constexpr int euler_characteristic() { return -2; }

  double u(Complex z) const;
  Complex grad_u(Complex z) const;       // Euclidean gradient in disk coordinates
  double laplacian_u(Complex z) const;   // hyperbolic Laplace-Beltrami
  double curvature(Complex z) const;     // e^{-2u}(-1 - Delta u)
  int bump_containing(Complex z) const;  // -1 outside all supports

  /// Radial curvature of bump i at hyperbolic distance r from its centre.
  double radial_curvature(int i, double r) const;
  /// Dense-sampled maximum of K over all bump supports (-1 without bumps).
  double max_curvature(int samples = 4001) const;
  double max_curvature_of(int i, int samples = 4001) const;
  /// Length in g of a radius of bump i: an upper bound for its g-radius.
  double bubble_radius(int i) const;
  double max_bubble_radius() const;

  /// Polar quadrature from the domain centre (midpoint rule), with polar
  /// patches centred on each bump for the localized part of the integrand.
  GaussBonnetResult gauss_bonnet(int n_radial = 512, int n_angular = 1024) const;

  BubbledSurface with_amplitudes(const std::vector<double>& amplitudes) const;

 private:
  FuchsianDomain domain_;
  std::vector<Bump> bumps_;
};

/// Largest amplitude before the centre curvature starts decreasing again.
double peak_amplitude(double delta);

/// Sets each amplitude so that the bump's max curvature lands in
/// [0.95, 1] * target (bisection aiming at 0.975). Throws Unreachable when the
/// profile cannot reach the band, and DomainError when a bubble is larger
/// than the focal-free radius pi / (4 sqrt(target)).
BubbledSurface calibrate_amplitudes(const BubbledSurface& surface, double target_kplus);

/// Smooth scalar field on the domain (the deformation potential).
class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual double value(Complex z) const = 0;
  virtual Complex gradient(Complex z) const = 0;
};

/// g_rho = e^{2 rho w} e^{2u} g_hyp. Curvature uses
/// K_rho = e^{-2 rho w}((1 - rho) K + rho kappa), kappa = 2 pi chi / vol plus the
/// re-centering shift of h.
class Metric {
 public:
  explicit Metric(const BubbledSurface& surface, double rho = 0,
                  std::shared_ptr<const ScalarField> w = nullptr, double kappa = 0);

  const BubbledSurface& surface() const { return *surface_; }
  double rho() const { return rho_; }
  double w(Complex z) const { return w_ ? w_->value(z) : 0.0; }
  double phi(Complex z) const;
  Complex grad_phi(Complex z) const;
  double curvature(Complex z) const;
  double speed(Complex z, Complex v) const { return std::exp(phi(z)) * std::abs(v); }

 private:
  const BubbledSurface* surface_;
  double rho_;
  std::shared_ptr<const ScalarField> w_;
  double kappa_;
};

struct GeodesicState {
  Complex z;
  Complex v;  // coordinate velocity, unit length in the metric
  std::vector<int> word;
};

using FlowVec = ode::State<double, 4>;

struct FlowOptions {
  ode::Tolerance tol{};
  double corner_tol = 1e-8;
  bool extended_precision = false;  // carry the state in long double
};

struct TrajectoryPiece {
  ode::DenseSolution<double, 4> solution;
  std::vector<int> word;  // deck transformations applied before this piece
};

/// Geodesic parameterized by arc length on [t_min, t_max], stored as dense
/// pieces between wraps through the side pairings.
class Trajectory;
Trajectory geodesic_flow(const Metric& metric, const GeodesicState& init, double t_lo, double t_hi,
                         const FlowOptions& opts);

class Trajectory {
 public:
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  Complex position(double t) const;
  Complex velocity(double t) const;
  const std::vector<int>& word_at(double t) const;
  /// Times at which the trajectory was wrapped, ascending.
  std::vector<double> wrap_times() const;
  GeodesicState state_at(double t) const;
  const GeodesicState& end_state() const { return end_; }
  const GeodesicState& start_state() const { return start_end_; }

 private:
  friend Trajectory geodesic_flow(const Metric&, const GeodesicState&, double, double, const FlowOptions&);
  const TrajectoryPiece& piece_at(double t) const;
  std::vector<TrajectoryPiece> forward_;   // t >= t0, ascending
  std::vector<TrajectoryPiece> backward_;  // t <= t0, descending
  double t0_ = 0, t_min_ = 0, t_max_ = 0;
  GeodesicState end_, start_end_;  // states at t_max and t_min
};

/// Integrates the geodesic through init (at t = 0) over [t_lo, t_hi]; either
/// end may be 0. Throws CornerHit near a polygon vertex.
inline Trajectory geodesic_flow(const Metric& metric, const GeodesicState& init, double t_end,
                                const FlowOptions& opts = {}) {
  return t_end >= 0 ? geodesic_flow(metric, init, 0, t_end, opts) : geodesic_flow(metric, init, t_end, 0, opts);
}

/// Unit-speed state at z with direction angle theta.
GeodesicState unit_state(const Metric& metric, Complex z, double theta);

struct BubbleVisit {
  int bump = -1;
  Interval interval;
  std::vector<int> word;
  double k_max = 0;
};

struct CurvatureAlong {
  riccati::CurvatureFunction K;
  std::vector<BubbleVisit> visits;
};

/// K(t) = curvature at the trajectory position, with tagged bump visits.
CurvatureAlong curvature_along(const Metric& metric, const Trajectory& traj);

struct SeparationStats {
  int geodesics = 0;
  int visits = 0;
  double min_gap_any = 0;        // between consecutive visits of any bubble
  double min_gap_same_lift = 0;  // between visits of the same lift (inf if none)
  double required_gap = 0;       // Lambda(epsilon)
  double required_same_lift = 0;  // 2 delta e^mu
  std::uint64_t worst_seed = 0;
  int corner_hits = 0;
};

/// Random geodesics (uniform start in the domain, uniform direction) over
/// [0, horizon_T]. Throws SeparationViolated when a gap is shorter than
/// Lambda(epsilon) or a lift is revisited within 2 delta e^mu.
SeparationStats bubble_separation_stats(const Metric& metric, int n_geodesics, double horizon_T,
                                        std::uint64_t seed, double epsilon, double mu = 0);

/// Pairwise d(p_i, p_j) - delta_i - delta_j.
std::vector<std::vector<double>> bump_clearances(const BubbledSurface& surface);

}  // namespace anosovlab::surface
