#include <cmath>
#include <numbers>

#include "anosovlab/bubble_profiles.hpp"
#include "anosovlab/errors.hpp"
#include "anosovlab/rng.hpp"
#include "anosovlab/surface.hpp"
#include "doctest.h"

using namespace anosovlab;
using namespace anosovlab::surface;

namespace {

constexpr double kPi = std::numbers::pi;

// Distance from the origin-centred formula acosh(1 + 2|z-w|^2 / ((1-|z|^2)(1-|w|^2))).
double acosh_distance(Complex z, Complex w) {
  return std::acosh(1 + 2 * std::norm(z - w) / ((1 - std::norm(z)) * (1 - std::norm(w))));
}

// Minimum hyperbolic distance from z to the arc of circle (c, r) inside the disk,
// by dense sampling followed by golden-section refinement.
double distance_to_circle_oracle(Complex z, Complex c, double r) {
  const double span = std::asin(1 / std::abs(c));  // half-angle of the arc inside the disk
  const double base = std::arg(-c);
  auto f = [&](double a) {
    const Complex p = c + std::polar(r, base + a);
    if (std::norm(p) >= 1) return 1e9;
    return acosh_distance(z, p);
  };
  double best_a = 0, best = f(0);
  const int n = 20000;
  for (int k = -n; k <= n; ++k) {
    const double a = span * k / n * 0.999999;
    if (f(a) < best) best = f(a), best_a = a;
  }
  double lo = best_a - span / n, hi = best_a + span / n;
  const double g = 0.5 * (std::sqrt(5.0) - 1);
  for (int it = 0; it < 200; ++it) {
    const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    (f(m1) < f(m2) ? hi : lo) = (f(m1) < f(m2) ? m2 : m1);
  }
  return f(0.5 * (lo + hi));
}

// Hyperbolic Laplacian by a fourth-order central stencil in disk coordinates.
double fd_laplacian(const BubbledSurface& s, Complex z, double h) {
  auto u = [&](double dx, double dy) { return s.u(z + Complex(dx, dy)); };
  const double c = u(0, 0);
  auto second = [&](double ex, double ey) {
    return (-u(2 * h * ex, 2 * h * ey) + 16 * u(h * ex, h * ey) - 30 * c + 16 * u(-h * ex, -h * ey) -
            u(-2 * h * ex, -2 * h * ey)) /
           (12 * h * h);
  };
  const double lam = (1 - std::norm(z)) * (1 - std::norm(z)) / 4;
  return lam * (second(1, 0) + second(0, 1));
}

BubbledSurface calibrated_origin(double delta = 0.1, double eps = 0.5) {
  return calibrate_amplitudes(BubbledSurface({{0, delta, 0}}),
                              0.5 * bubbles::kplus_bound_theorem1(eps, delta));
}

}  // namespace

TEST_CASE("octagon geometry") {
  FuchsianDomain D;
  CHECK(std::cosh(D.circumradius()) == doctest::Approx(3 + 2 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(D.circumradius() == doctest::Approx(2.448452447678076).epsilon(1e-13));
  CHECK(std::cosh(D.inradius()) == doctest::Approx(1 + std::sqrt(2.0)).epsilon(1e-14));
  CHECK(D.vertex_radius() == doctest::Approx(std::pow(2.0, -0.25)).epsilon(1e-14));
  for (int i = 0; i < 8; ++i) {
    CHECK(D.distance_to_side(i, 0) == doctest::Approx(D.inradius()).epsilon(1e-13));
    CHECK(D.boundary_radius(D.side_angle(i)) == doctest::Approx(D.inradius()).epsilon(1e-12));
    CHECK(D.boundary_radius(kPi / 4 * i) == doctest::Approx(D.circumradius()).epsilon(1e-7));
    // Vertices lie on both adjacent sides.
    CHECK(std::abs(D.side_value(i, D.vertex(i))) < 1e-13);
    CHECK(std::abs(D.side_value(i, D.vertex(i + 1))) < 1e-13);
    CHECK(D.partner(D.partner(i)) == i);
  }
}

TEST_CASE("side pairings glue a genus-2 surface") {
  FuchsianDomain D;
  CHECK(D.pairing_isometry_residual(16) <= 1e-10);
  CHECK(std::abs(D.vertex_angle_sum() - 2 * kPi) <= 1e-10);
  CHECK(D.vertex_classes() == 1);
  // Euler characteristic from the cell structure: V - E + F = 1 - 4 + 1.
  CHECK(1 - 4 + 1 == BubbledSurface::euler_characteristic());

  Rng rng(3);
  for (int i = 0; i < 8; ++i) {
    const Mobius& A = D.pairing(i);
    const Mobius& B = D.pairing(D.partner(i));
    for (int k = 0; k < 5; ++k) {
      const Complex z = std::polar(rng.uniform(0, 0.6), rng.uniform(0, 2 * kPi));
      CHECK(std::abs(B(A(z)) - z) < 1e-12);
      // Outside of side i is sent into the domain side of partner(i).
      const Complex out = std::polar(0.5 * (hyperbolic::distance_to_radius(D.inradius()) + 1.0),
                                     D.side_angle(i) + rng.uniform(-0.05, 0.05));
      CHECK(D.side_value(i, out) < 0);
      CHECK(D.side_value(D.partner(i), A(out)) > 0);
    }
  }
}

TEST_CASE("distance to a side against a minimization oracle") {
  FuchsianDomain D;
  Rng rng(11);
  for (int k = 0; k < 12; ++k) {
    Complex z;
    do z = std::polar(rng.uniform(0, 0.84), rng.uniform(0, 2 * kPi));
    while (!D.contains(z));
    const int i = int(rng.bits() % 8);
    const double oracle = distance_to_circle_oracle(z, D.side_center(i), D.side_radius());
    CHECK(std::abs(D.distance_to_side(i, z) - oracle) < 1e-9);
  }
}

TEST_CASE("reduce maps points into the domain and records the word") {
  FuchsianDomain D;
  const Complex z(0.1, 0.2);
  const Complex outside = D.pairing(D.partner(3))(z);  // image across side 3
  CHECK_FALSE(D.contains(outside));
  std::vector<int> word;
  const Complex back = D.reduce(outside, &word);
  CHECK(std::abs(back - z) < 1e-12);
  CHECK(word == std::vector<int>{3});
}

TEST_CASE("curvature of the base metric and outside bumps") {
  BubbledSurface flat;
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    const Complex z = std::polar(rng.uniform(0, 0.8), rng.uniform(0, 2 * kPi));
    CHECK(flat.curvature(z) == -1.0);
    CHECK(flat.u(z) == 0.0);
  }
  const BubbledSurface s = calibrated_origin();
  for (int k = 0; k < 200; ++k) {
    const Complex z = std::polar(rng.uniform(0.06, 0.8), rng.uniform(0, 2 * kPi));
    if (hyperbolic::distance(z, 0) >= 0.1) CHECK(s.curvature(z) == -1.0);
  }
}

TEST_CASE("curvature at a bump centre: analytic formula and finite differences") {
  const BubbledSurface s = calibrated_origin();
  const double A = s.bumps()[0].amplitude, d = 0.1;
  const double closed = std::exp(-2 * A) * (-1 + 12 * A / (d * d));
  CHECK(s.curvature(0) == doctest::Approx(closed).epsilon(1e-14));
  CHECK(s.curvature(0) > 0);

  const double fd_center = std::exp(-2 * A) * (-1 - fd_laplacian(s, 0, 1e-3));
  CHECK(std::abs(s.curvature(0) - fd_center) <= 1e-5);

  // Off-centre points and a shifted bump exercise the Mobius-transported distance.
  const BubbledSurface shifted = calibrate_amplitudes(BubbledSurface({{Complex(0.3, -0.2), 0.1, 0}}), 0.3);
  for (Complex z : {Complex(0.3, -0.2), Complex(0.31, -0.19), Complex(0.28, -0.21)}) {
    const double fd = std::exp(-2 * shifted.u(z)) * (-1 - fd_laplacian(shifted, z, 1e-3));
    CHECK(std::abs(shifted.curvature(z) - fd) <= 1e-5);
  }
  for (Complex z : {Complex(0.27, -0.17), Complex(0.33, -0.2)}) {
    const double h = 1e-6;
    const Complex fd((shifted.u(z + h) - shifted.u(z - h)) / (2 * h),
                     (shifted.u(z + Complex(0, h)) - shifted.u(z - Complex(0, h))) / (2 * h));
    CHECK(std::abs(shifted.grad_u(z) - fd) < 1e-7);
  }
}

TEST_CASE("calibration band, symmetry and reachability") {
  const double target = 0.5 * bubbles::kplus_bound_theorem1(0.5, 0.1);
  const BubbledSurface s = calibrated_origin();
  const double kmax = s.max_curvature();
  CHECK(kmax >= 0.95 * target);
  CHECK(kmax <= target);
  CHECK(kmax > 0);

  const BubbledSurface two = calibrate_amplitudes(
      BubbledSurface({{Complex(0.4, 0), 0.1, 0}, {Complex(-0.4, 0), 0.1, 0}}), target);
  CHECK(two.bumps()[0].amplitude == two.bumps()[1].amplitude);

  // Small targets drive the apex curvature to the sign change e^{-2A}(-1 + 12A/d^2) = 0.
  const BubbledSurface tiny = calibrate_amplitudes(BubbledSurface({{0, 0.1, 0}}), 1e-6);
  CHECK(tiny.bumps()[0].amplitude == doctest::Approx(0.01 / 12).epsilon(1e-4));
  CHECK(tiny.max_curvature() > 0);

  try {
    calibrate_amplitudes(BubbledSurface({{0, 0.7, 0}}), 10.0);
    FAIL("expected Unreachable");
  } catch (const Unreachable& e) {
    CHECK(e.max_achievable < 9.5);
    CHECK(e.max_achievable > 0);
  }
  CHECK_THROWS_AS(calibrate_amplitudes(s, -1), DomainError);
}

TEST_CASE("layout errors") {
  CHECK_THROWS_AS(BubbledSurface({{0, 0.1, 0}, {Complex(0.05, 0), 0.1, 0}}), LayoutError);
  CHECK_THROWS_AS(BubbledSurface({{Complex(0.6, 0), 0.3, 0}}), LayoutError);
  CHECK_THROWS_AS(BubbledSurface({{Complex(0.95, 0), 0.01, 0}}), LayoutError);
  CHECK_NOTHROW(BubbledSurface({{0, 0.76, 0}}));
  CHECK_THROWS_AS(BubbledSurface({{0, 0.77, 0}}), LayoutError);
}

TEST_CASE("Gauss-Bonnet and volume") {
  BubbledSurface flat;
  const auto base = flat.gauss_bonnet();
  CHECK(base.volume == doctest::Approx(4 * kPi).epsilon(1e-3));
  CHECK(base.rel_error <= 1e-3);
  const auto base_fine = flat.gauss_bonnet(724, 1448);
  CHECK(std::abs(base_fine.volume - 4 * kPi) < 0.6 * std::abs(base.volume - 4 * kPi));

  const BubbledSurface s = calibrated_origin();
  const auto gb = s.gauss_bonnet();
  CHECK(gb.rel_error <= 1e-3);
  CHECK(gb.volume > base.volume);
  const auto fine = s.gauss_bonnet(724, 1448);
  CHECK(fine.rel_error < gb.rel_error);
  // Second-order quadrature: doubling the node count roughly halves the error.
  CHECK(fine.rel_error < 0.6 * gb.rel_error);
  CHECK_THROWS_AS(s.gauss_bonnet(512, 1004), DomainError);
}

TEST_CASE("geodesic through the origin follows the diameter") {
  BubbledSurface flat;
  Metric g(flat);
  for (double theta : {0.1, 1.0, 2.5}) {
    const auto traj = geodesic_flow(g, unit_state(g, 0, theta), 1.4);
    for (double t : {0.0, 0.3, 0.7, 1.1, 1.4}) {
      const Complex expected = std::polar(std::tanh(t / 2), theta);
      CHECK(std::abs(traj.position(t) - expected) < 1e-8);
    }
    CHECK(traj.wrap_times().empty());
  }
}

TEST_CASE("flow semigroup across wraps") {
  const BubbledSurface s = calibrated_origin();
  Metric g(s);
  const GeodesicState init = unit_state(g, Complex(0.2, 0.1), 0.7);
  const auto full = geodesic_flow(g, init, 3.0);
  const auto half = geodesic_flow(g, init, 1.5);
  const auto rest = geodesic_flow(g, half.end_state(), 1.5);
  CHECK(!full.wrap_times().empty());
  CHECK(std::abs(full.end_state().z - rest.end_state().z) < 1e-7);
  CHECK(full.end_state().word == rest.end_state().word);
}

TEST_CASE("metric speed stays one") {
  const BubbledSurface s = calibrated_origin();
  Metric g(s);
  const auto traj = geodesic_flow(g, unit_state(g, Complex(-0.1, 0.3), 2.0), 50.0);
  CHECK(traj.wrap_times().size() > 10);
  double worst = 0;
  for (int k = 0; k <= 5000; ++k) {
    const double t = 50.0 * k / 5000;
    worst = std::max(worst, std::abs(g.speed(traj.position(t), traj.velocity(t)) - 1));
    CHECK(g.surface().domain().side_value(0, traj.position(t)) > -1e-9);
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("flow reversibility over T = 20") {
  const BubbledSurface s = calibrated_origin();
  Metric g(s);
  // Errors grow like e^T along the unstable direction, so the state is carried
  // in extended precision with a tolerance near its rounding level.
  FlowOptions tight;
  tight.tol = {1e-15, 1e-17};
  tight.extended_precision = true;
  Rng rng(41);
  double worst = 0;
  for (int k = 0; k < 10; ++k) {
    const GeodesicState init =
        unit_state(g, std::polar(rng.uniform(0, 0.5), rng.uniform(0, 2 * kPi)), rng.uniform(0, 2 * kPi));
    const auto fwd = geodesic_flow(g, init, 20.0, tight);
    GeodesicState back = fwd.end_state();
    back.v = -back.v;
    const auto bwd = geodesic_flow(g, back, 20.0, tight);
    CHECK(bwd.end_state().word.empty());
    worst = std::max(worst, hyperbolic::distance(bwd.end_state().z, init.z));
  }
  MESSAGE("reversibility error ", worst);
  CHECK(worst < 1e-6);
}

TEST_CASE("backward flow matches forward flow reversed") {
  const BubbledSurface s = calibrated_origin();
  Metric g(s);
  const GeodesicState init = unit_state(g, Complex(0.1, 0.1), 2.2);
  const auto two_sided = geodesic_flow(g, init, -4.0, 4.0, {});
  GeodesicState rev = init;
  rev.v = -rev.v;
  const auto reversed = geodesic_flow(g, rev, 4.0);
  for (double t : {0.5, 1.7, 3.2, 4.0}) CHECK(std::abs(two_sided.position(-t) - reversed.position(t)) < 1e-8);
  CHECK(two_sided.t_min() == -4.0);
}

TEST_CASE("curvature along geodesics") {
  const BubbledSurface s = calibrated_origin();
  Metric g(s);

  SUBCASE("avoiding all bumps") {
    const Complex z0(0, 0.5);
    const auto traj = geodesic_flow(g, unit_state(g, z0, 0.0), -1.0, 1.0, {});
    const auto along = curvature_along(g, traj);
    CHECK(along.visits.empty());
    for (int k = 0; k <= 200; ++k) CHECK(along.K(-1 + k / 100.0) == -1.0);
  }

  SUBCASE("through a bump centre") {
    const auto traj = geodesic_flow(g, unit_state(g, 0, 0.3), -1.0, 1.0, {});
    const auto along = curvature_along(g, traj);
    REQUIRE(along.visits.size() == 1);
    const auto& v = along.visits[0];
    // The g-length of a diameter: twice the integral of e^u along a radius.
    CHECK(v.interval.length() == doctest::Approx(2 * s.bubble_radius(0)).epsilon(1e-8));
    CHECK(v.interval.lo == doctest::Approx(-s.bubble_radius(0)).epsilon(1e-8));
    CHECK(v.k_max == doctest::Approx(s.max_curvature()).epsilon(1e-6));
    CHECK(along.K(0) == doctest::Approx(s.curvature(0)).epsilon(1e-10));
  }

  SUBCASE("grazing the support edge") {
    double previous = 1e9;
    for (double frac : {0.5, 0.9, 0.99, 0.999}) {
      const double b = frac * 0.1;
      const Complex z0(0, hyperbolic::distance_to_radius(b));
      const auto traj = geodesic_flow(g, unit_state(g, z0, 0.0), -0.5, 0.5, {});
      const auto along = curvature_along(g, traj);
      REQUIRE(along.visits.size() == 1);
      const double len = along.visits[0].interval.length();
      const double chord = 2 * std::acosh(std::cosh(0.1) / std::cosh(b));
      CHECK(len < previous);
      CHECK(len == doctest::Approx(chord).epsilon(2e-3));
      previous = len;
      if (frac == 0.999) CHECK(along.visits[0].k_max < -0.99);
    }
  }
}

TEST_CASE("bubble separation statistics") {
  SUBCASE("one bump at the origin") {
    const BubbledSurface s = calibrated_origin();
    Metric g(s);
    const auto st = bubble_separation_stats(g, 500, 20.0, 2024, 0.5);
    MESSAGE("min gap ", st.min_gap_any, " visits ", st.visits, " corners ", st.corner_hits);
    CHECK(st.min_gap_any >= bubbles::lambda_of_epsilon(0.5));
    // Santalo: a segment of length T meets a convex disc of perimeter L on average
    // T L / (pi area) times.
    const double expected = 500 * 20.0 * 2 * kPi * std::sinh(0.1) / (kPi * 4 * kPi);
    CHECK(std::abs(st.visits - expected) < 5 * std::sqrt(expected));
    CHECK(st.required_same_lift == doctest::Approx(0.2));
    // Visits of distinct lifts are at least twice the inradius apart, less the diameters.
    CHECK(st.min_gap_any >= 2 * s.domain().inradius() - 2 * 2 * s.bubble_radius(0));
  }
  SUBCASE("zero bumps") {
    BubbledSurface flat;
    Metric g(flat);
    const auto st = bubble_separation_stats(g, 20, 10.0, 1, 0.5);
    CHECK(st.visits == 0);
    CHECK(std::isinf(st.min_gap_any));
  }
  SUBCASE("two antipodal bumps") {
    const Complex p(0.4, 0), q(-0.4, 0);
    const BubbledSurface s({{p, 0.1, 0}, {q, 0.1, 0}});
    const auto c = bump_clearances(s);
    CHECK(c[0][1] == doctest::Approx(acosh_distance(p, q) - 0.2).epsilon(1e-12));
    CHECK(c[0][1] == doctest::Approx(4 * std::atanh(0.4) - 0.2).epsilon(1e-12));
    CHECK(c[0][1] == c[1][0]);
  }
  SUBCASE("violations are reported") {
    const BubbledSurface s = calibrated_origin();
    Metric g(s);
    CHECK_THROWS_AS(bubble_separation_stats(g, 50, 20.0, 7, 0.02), SeparationViolated);
  }
}
