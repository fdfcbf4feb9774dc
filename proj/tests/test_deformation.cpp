#include <cmath>
#include <memory>
#include <numbers>

#include "anosovlab/bubble_profiles.hpp"
#include "anosovlab/deformation.hpp"
#include "anosovlab/errors.hpp"
#include "doctest.h"

using namespace anosovlab;
using namespace anosovlab::deformation;
using surface::Bump;

namespace {

constexpr double kPi = std::numbers::pi;

// One bump at the centre calibrated to 0.9 of the deformed-family bound with mu = 0.
const BubbledSurface& flagship() {
  static const BubbledSurface s = surface::calibrate_amplitudes(
      BubbledSurface({Bump{0, 0.05, 0}}), 0.9 * bubbles::kplus_bound_theorem3(0.5, 0.05, 0));
  return s;
}

const DeformationPath& flagship_path() {
  static const DeformationPath p = build_path(flagship(), {}, 0.5);
  return p;
}

}  // namespace

TEST_CASE("mesh is a closed genus-2 surface with consistent operators") {
  const SurfaceMesh& m = *flagship_path().mesh;
  CHECK(m.euler_characteristic() == -2);
  CHECK(m.connected());
  CHECK(m.max_abs_row_sum() <= 1e-12);
  const double sym = (Eigen::SparseMatrix<double>(m.laplacian.transpose()) - m.laplacian).norm();
  CHECK(sym == 0.0);
  CHECK(m.mass.minCoeff() > 0);
  const double vol = flagship().gauss_bonnet().volume;
  CHECK(std::abs(m.volume() - vol) / vol <= 1e-3);

  const SurfaceMesh flat = build_mesh(BubbledSurface{});
  CHECK(flat.euler_characteristic() == -2);
  CHECK(std::abs(flat.volume() - 4 * kPi) / (4 * kPi) <= 1e-3);
}

TEST_CASE("identified outer vertices are images under the side pairings") {
  const SurfaceMesh& m = *flagship_path().mesh;
  const auto& D = flagship().domain();
  const double rv = D.vertex_radius();
  int checked = 0;
  for (std::size_t p = 0; p < m.points.size(); ++p) {
    const Complex z = m.points[p];
    if (std::abs(std::abs(z) - rv) < 1e-12) continue;  // polygon corners
    for (int i = 0; i < 8; ++i) {
      if (std::abs(D.side_value(i, z)) > 1e-12) continue;
      const Complex image = D.pairing(i)(z);
      const Complex rep = m.position[m.vertex_of[p]];
      const bool same = std::abs(rep - z) < 1e-9 || std::abs(rep - image) < 1e-9;
      CHECK(same);
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("h vanishes on the constant-curvature surface") {
  const BubbledSurface flat;
  const SurfaceMesh m = build_mesh(flat);
  const HField h = compute_h(flat, m, 0.5);
  CHECK(h.h.cwiseAbs().maxCoeff() <= 1e-14);
  const PoissonResult w = solve_poisson(m, Eigen::VectorXd::Zero(m.n_vertices));
  CHECK(w.w.cwiseAbs().maxCoeff() == 0.0);
  CHECK(w.mu == 0.0);
  for (double rho : {0.0, 0.5, 1.0}) {
    const DeformedCurvature k = curvature_of_deformed(m, h, w, rho);
    CHECK(k.algebraic.maxCoeff() <= -1 + 1e-14);
    CHECK(k.algebraic.minCoeff() >= -1 - 1e-14);
  }
}

TEST_CASE("h on a one-bump surface changes sign and has zero mean") {
  const DeformationPath& p = flagship_path();
  CHECK(p.h.h[0] < 0);  // vertex 0 is the bump centre
  CHECK(p.h.h.maxCoeff() > 0);
  for (int v = 0; v < p.mesh->n_vertices; ++v)
    if (p.h.K[v] >= 0) CHECK(p.h.h[v] < 0);
  CHECK(std::abs(p.h.mean_after) <= 1e-14);
  CHECK(std::abs(p.mesh->mass.dot(p.h.h)) <= 1e-8);
  CHECK(p.h.kappa == doctest::Approx(-4 * kPi / p.mesh->volume()).epsilon(1e-15));
}

TEST_CASE("epsilon above the Gauss-Bonnet mean is rejected") {
  const SurfaceMesh& m = *flagship_path().mesh;
  CHECK_THROWS_AS(compute_h(flagship(), m, 1.1), HypothesisViolated);
  try {
    compute_h(flagship(), m, 1.1);
  } catch (const HypothesisViolated& e) {
    CHECK(e.gap == doctest::Approx(1.1 - 4 * kPi / m.volume()));
  }
}

TEST_CASE("manufactured solution is recovered") {
  const SurfaceMesh& m = *flagship_path().mesh;
  // Smooth bump of hyperbolic radius 1 around an off-centre point.
  const Complex c(0.2, -0.1);
  Eigen::VectorXd w0(m.n_vertices);
  for (int v = 0; v < m.n_vertices; ++v) {
    const double s = std::min(1.0, hyperbolic::distance(m.position[v], c));
    w0[v] = std::pow(1 - s * s, 4);
  }
  const Eigen::VectorXd h = (-(m.laplacian * w0)).cwiseQuotient(m.mass);
  const PoissonResult r = solve_poisson(m, h);
  CHECK(r.residual <= 1e-10);
  CHECK(r.w.minCoeff() == 0.0);
  const Eigen::VectorXd expect = w0.array() - w0.minCoeff();
  CHECK((r.w - expect).cwiseAbs().maxCoeff() / expect.cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(r.mu == doctest::Approx(expect.maxCoeff()).epsilon(1e-6));
}

TEST_CASE("non-zero mean right-hand side stalls the solver") {
  const DeformationPath& p = flagship_path();
  const Eigen::VectorXd h = p.h.h.array() + 0.01;
  try {
    solve_poisson(*p.mesh, h);
    FAIL("expected NoConvergence");
  } catch (const NoConvergence& e) {
    CHECK(e.residual > 1e-3);
    CHECK(e.iterations == PoissonOptions{}.max_iterations);
  }
}

TEST_CASE("mu is stable under mesh refinement") {
  const DeformationPath& coarse = flagship_path();
  MeshOptions fine;
  fine.resolution = 2;
  const SurfaceMesh m = build_mesh(flagship(), fine);
  const PoissonResult w = solve_poisson(m, compute_h(flagship(), m, 0.5).h);
  MESSAGE("mu coarse ", coarse.mu(), " fine ", w.mu);
  CHECK(coarse.mu() > 0);
  CHECK(std::abs(w.mu - coarse.mu()) / w.mu <= 0.02);
  // w is minimal at the bump centre, where u is maximal.
  CHECK(coarse.poisson.w[0] <= 1e-3 * coarse.mu());
}

TEST_CASE("deformed curvature: identity at rho = 0 and dual-route agreement") {
  const DeformationPath& p = flagship_path();
  CHECK(p.per_rho.front().rho == 0.0);
  CHECK((p.per_rho.front().K - p.h.K).cwiseAbs().maxCoeff() == 0.0);
  for (const auto& d : p.per_rho) CHECK(d.disagreement <= 10 * p.poisson.residual);
  CHECK(p.per_rho.back().rho == 1.0);
  CHECK(p.per_rho.back().k_max < 0);

  PoissonResult bad = p.poisson;
  bad.w[0] += 1e-3;
  CHECK_THROWS_AS(curvature_of_deformed(*p.mesh, p.h, bad, 0.5), FormulaMismatch);
  CHECK_NOTHROW(curvature_of_deformed(*p.mesh, p.h, bad, 0.0));
}

TEST_CASE("path properties P1-P5 hold on the one-bump fixture") {
  const DeformationPath& p = flagship_path();
  const PathReport rep = verify_path_properties(flagship(), p);
  CHECK(rep.pass);
  CHECK(rep.checks.size() == 11);
  CHECK(rep.zeta == doctest::Approx(std::exp(-2 * p.mu()) * 0.5).epsilon(1e-15));
  for (const auto& c : rep.checks) {
    CHECK(c.p1_margin > 0);
    CHECK(c.p5_rel_error <= 1e-3);
  }
  // Apex probe.
  const DeformationPath probe = build_path(flagship(), {}, 0.5, {0.0, 0.25, 0.5});
  const double k0 = probe.per_rho[0].K[0], k1 = probe.per_rho[1].K[0], k2 = probe.per_rho[2].K[0];
  CHECK(k0 > 0);
  CHECK(k1 < k0);
  CHECK(k2 < k1);
}

TEST_CASE("path properties without bumps, on a partial grid, and a P1 negative control") {
  const BubbledSurface flat;
  const DeformationPath p = build_path(flat, {}, 0.5);
  CHECK(verify_path_properties(flat, p).pass);

  // Stopping the grid at rho = 0.3 keeps positive curvature; every listed property still holds.
  const DeformationPath partial = build_path(flagship(), {}, 0.5, {0.0, 0.1, 0.2, 0.3});
  CHECK(partial.per_rho.back().k_max > 0);
  CHECK(verify_path_properties(flagship(), partial).pass);

  // zeta above 1 cannot hold where K = -1.
  DeformationPath strict = flagship_path();
  strict.epsilon = 1.2;
  try {
    verify_path_properties(flagship(), strict);
    FAIL("expected PropertyFailed");
  } catch (const PropertyFailed& e) {
    CHECK(e.tag == "P1");
  }
}

TEST_CASE("rho grid validation") {
  CHECK_THROWS_AS(build_path(flagship(), {}, 0.5, {}), DomainError);
  CHECK_THROWS_AS(build_path(flagship(), {}, 0.5, {0.0, 0.5, 0.5}), DomainError);
  CHECK_THROWS_AS(build_path(flagship(), {}, 0.5, {0.0, 1.5}), DomainError);
}

TEST_CASE("mesh field reproduces nodal values and is smooth") {
  const DeformationPath& p = flagship_path();
  const MeshField f(flagship(), p.mesh, p.poisson.w);
  for (int v = 0; v < p.mesh->n_vertices; v += 997) {
    CHECK(std::abs(f.value(p.mesh->position[v]) - p.poisson.w[v]) <= 1e-14);
    CHECK(std::abs(f.nodal_value(p.mesh->position[v], p.poisson.w) - p.poisson.w[v]) <= 1e-15);
  }
  // Recovered gradient against a central difference of the field itself.
  for (Complex z : {Complex(0.3, 0.1), Complex(-0.02, 0.01), Complex(0.0, -0.5)}) {
    const double e = 1e-4;
    const Complex fd((f.value(z + e) - f.value(z - e)) / (2 * e),
                     (f.value(z + Complex(0, e)) - f.value(z - Complex(0, e))) / (2 * e));
    CHECK(std::abs(f.gradient(z) - fd) <= 0.02 * std::abs(fd) + 1e-5);
  }
}

TEST_CASE("geodesics of the deformed metric stay unit speed") {
  const DeformationPath& p = flagship_path();
  auto field = std::make_shared<const MeshField>(flagship(), p.mesh, p.poisson.w);
  const surface::Metric g1 = deformed_metric(flagship(), p, field, 1.0);
  const auto init = surface::unit_state(g1, Complex(0.1, 0.05), 2.0);
  const auto traj = surface::geodesic_flow(g1, init, 20.0);
  for (double t = 0; t <= 20; t += 0.5)
    CHECK(std::abs(g1.speed(traj.position(t), traj.velocity(t)) - 1) <= 1e-6);
  // Metric curvature follows the deformed formula.
  const Complex z(0.01, 0.0);
  const double K = flagship().curvature(z);
  CHECK(g1.curvature(z) == doctest::Approx(std::exp(-2 * field->value(z)) * p.kappa_eff()));
  const surface::Metric g0 = deformed_metric(flagship(), p, field, 0.0);
  CHECK(g0.curvature(z) == K);
}

TEST_CASE("lengths do not decrease along the path") {
  const DeformationPath& p = flagship_path();
  const MeshField f(flagship(), p.mesh, p.poisson.w);
  const LengthReport rep = verify_length_monotonicity(flagship(), p, f, 40, 7);
  CHECK(rep.curves == 40);
  CHECK(rep.segments == 40 * 200);
  CHECK(rep.min_ratio >= 1.0);
  CHECK(rep.max_radius_ratio <= 1.0);
  CHECK(rep.max_radius_ratio > 0.9);

  // Constant w: every length scales by exactly e^{0.1 c} between grid points.
  DeformationPath constant = p;
  constant.poisson.w.setConstant(0.3);
  constant.poisson.mu = 0.3;
  const LengthReport c = verify_length_monotonicity(flagship(), constant, f, 4, 1);
  CHECK(c.min_ratio == doctest::Approx(std::exp(0.1 * 0.3)).epsilon(1e-14));

  // w = 0: equal lengths for all rho.
  DeformationPath zero = p;
  zero.poisson.w.setZero();
  zero.poisson.mu = 0;
  CHECK(verify_length_monotonicity(flagship(), zero, f, 4, 1).min_ratio == 1.0);

  // A sign error in w shows up as a decrease.
  DeformationPath flipped = p;
  flipped.poisson.w = -p.poisson.w;
  CHECK_THROWS_AS(verify_length_monotonicity(flagship(), flipped, f, 4, 1), MonotonicityViolated);
}

TEST_CASE("shot g_1 geodesics reach the support boundary within delta_g e^mu") {
  const DeformationPath& p = flagship_path();
  auto field = std::make_shared<const MeshField>(flagship(), p.mesh, p.poisson.w);
  const surface::Metric g1 = deformed_metric(flagship(), p, field, 1.0);
  const double bound = flagship().bubble_radius(0) * std::exp(p.mu());
  for (int a = 0; a < 8; ++a) {
    const auto traj = surface::geodesic_flow(g1, surface::unit_state(g1, 0, 2 * kPi * a / 8 + 0.1), 0.2);
    // Arc length at which the hyperbolic distance from the centre reaches delta.
    double lo = 0, hi = 0.2;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (hyperbolic::distance(traj.position(mid), 0) < 0.05 ? lo : hi) = mid;
    }
    CHECK(lo <= bound);
  }
}
