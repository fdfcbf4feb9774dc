#pragma once

// Poincare disk model of the hyperbolic plane.

#include <cmath>
#include <complex>

namespace anosovlab::hyperbolic {

using Complex = std::complex<double>;

/// z -> (a z + b) / (c z + d).
struct Mobius {
  Complex a{1}, b{0}, c{0}, d{1};

  Complex operator()(Complex z) const { return (a * z + b) / (c * z + d); }
  Complex derivative(Complex z) const {
    const Complex den = c * z + d;
    return (a * d - b * c) / (den * den);
  }
  Mobius inverse() const { return {d, -b, -c, a}; }
  Mobius operator*(const Mobius& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }

  static Mobius rotation(double angle) { return {std::polar(1.0, angle), 0, 0, 1}; }
  /// Hyperbolic translation along the real diameter by distance s.
  static Mobius translation(double s) {
    const double t = std::tanh(0.5 * s);
    return {1, t, t, 1};
  }
  /// Disk automorphism sending p to the origin.
  static Mobius to_origin(Complex p) { return {1, -p, -std::conj(p), 1}; }
};

/// Hyperbolic distance between two points of the unit disk.
inline double distance(Complex z, Complex w) {
  const double q = std::abs(z - w) / std::abs(1.0 - std::conj(w) * z);
  return 2 * std::atanh(std::min(q, 1.0));
}

/// Hyperbolic distance from the origin to a point at Euclidean radius s.
inline double radius_to_distance(double s) { return 2 * std::atanh(s); }
inline double distance_to_radius(double r) { return std::tanh(0.5 * r); }

/// Logarithm of the conformal factor 2 / (1 - |z|^2) of the disk metric.
inline double log_disk_factor(Complex z) { return std::log(2.0 / (1.0 - std::norm(z))); }

/// Distance from z to the geodesic carried by the circle |w - c| = rho
/// orthogonal to the unit circle.
inline double distance_to_geodesic(Complex z, Complex c, double rho) {
  const double num = std::abs(std::norm(z) - 2 * (z * std::conj(c)).real() + 1.0);
  return std::asinh(num / (rho * (1.0 - std::norm(z))));
}

}  // namespace anosovlab::hyperbolic
