#include <cmath>
#include <memory>
#include <numbers>

#include "anosovlab/bubble_profiles.hpp"
#include "anosovlab/certifier.hpp"
#include "anosovlab/errors.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace anosovlab;
using namespace anosovlab::certifier;
using surface::BubbledSurface;
using surface::Bump;

namespace {

constexpr double kPi = std::numbers::pi;

struct Fixture {
  BubbledSurface surface;
  deformation::DeformationPath path;
};

// One bump of radius 0.05 at the centre with K+ at 0.9 of bound3 using this run's mu.
const Fixture& flagship() {
  static const Fixture f = [] {
    auto cal = calibrate_for_deformed_family(BubbledSurface({Bump{0, 0.05, 0}}), 0.5, 0.9);
    auto path = deformation::build_path(cal.surface, {}, 0.5);
    return Fixture{std::move(cal.surface), std::move(path)};
  }();
  return f;
}

std::shared_ptr<const deformation::MeshField> field_of(const Fixture& f) {
  return std::make_shared<const deformation::MeshField>(f.surface, f.path.mesh, f.path.poisson.w);
}

}  // namespace

TEST_CASE("flagship fixture satisfies the deformed-family bound with its own mu") {
  const Fixture& f = flagship();
  CHECK(calibrate_for_deformed_family(f.surface, 0.5, 0.9).rounds == 2);
  const double bound = bubbles::kplus_bound_theorem3(0.5, f.surface.max_bubble_radius(), f.path.mu());
  CHECK(f.surface.max_curvature() <= 0.9 * bound);
  CHECK(f.path.mu() > 0);
}

TEST_CASE("constant curvature -1: U^u = 1, U^s = -1") {
  const BubbledSurface flat;
  const surface::Metric g(flat);
  const auto c = certify_geodesic(g, {0.1, 0.2}, 0.7, 0.5, 0);
  CHECK(c.pass);
  CHECK(c.min_Uu == doctest::Approx(1).epsilon(1e-6));
  CHECK(c.max_Us == doctest::Approx(-1).epsilon(1e-6));
  CHECK(c.separation == doctest::Approx(2).epsilon(1e-6));
  CHECK(c.visits.empty());
  CHECK(c.cauchy_gap <= 1e-6);
}

TEST_CASE("bubble-crossing geodesic on a first-family surface stays above floor_thm1") {
  const BubbledSurface s = surface::calibrate_amplitudes(BubbledSurface({Bump{0, 0.1, 0}}),
                                                         0.9 * bubbles::kplus_bound_theorem1(0.5, 0.1));
  REQUIRE(s.max_curvature() < bubbles::kplus_bound_theorem1(0.5, s.max_bubble_radius()));
  const surface::Metric g(s);
  for (double theta : {0.2, 1.0, 2.5}) {
    const auto c = certify_geodesic(g, 0, theta, 0.5, 0, {}, true);
    REQUIRE(!c.visits.empty());
    CHECK(c.k_max > 0.5);  // the window sees the positive curvature
    CHECK(c.pass);
    CHECK(c.min_Uu >= bubbles::floor_theorem1(0.5) - 1e-3);
    CHECK(c.max_Us <= -bubbles::floor_theorem1(0.5) + 1e-3);
  }
}

TEST_CASE("rho = 1: separation above the constant-curvature envelope") {
  const Fixture& f = flagship();
  const auto g1 = deformation::deformed_metric(f.surface, f.path, field_of(f), 1.0);
  for (double theta : {0.3, 2.0}) {
    const auto c = certify_geodesic(g1, 0, theta, 0.5, f.path.mu());
    CHECK(c.k_max < 0);
    CHECK(c.separation >= 2 * std::sqrt(-c.k_max) * (1 - 1e-6));
    CHECK(c.pass);
  }
}

TEST_CASE("growth on a constant -1 segment at the epsilon = 1 boundary") {
  const auto K = riccati::CurvatureFunction::constant(-1);
  const double lambda = bubbles::lambda_of_epsilon(1);
  const auto s = growth_on_segment(K, 0, lambda, 1, 0);
  CHECK(s.U_lambda == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(std::abs(s.margin_half) <= 1e-8);  // the ln3 / 2 floor is attained here
  CHECK(s.margin_third > 0.1);
  const auto longer = growth_on_segment(K, 0, 2 * lambda, 1, 0);
  CHECK(longer.U_end > longer.U_lambda);
  CHECK(longer.U_end == doctest::Approx(std::tanh(2 * lambda)).epsilon(1e-9));
  CHECK_THROWS_AS(growth_on_segment(K, 0, 0.5 * lambda, 1, 0), DomainError);
}

TEST_CASE("growth lemma on the deformed flagship metric") {
  const Fixture& f = flagship();
  const auto g = deformation::deformed_metric(f.surface, f.path, field_of(f), 0.5);
  const auto rep = growth_lemma_check(g, 0.5, f.path.mu(), 12, 5);
  CHECK(rep.segments.size() >= 12);
  CHECK(rep.min_margin_third > 0);
  CHECK(rep.min_margin_half > 0);
  CHECK(rep.floor_third < rep.floor_half);
}

TEST_CASE("flat strip: signs hold, separation fails") {
  const riccati::CurvatureFunction K([](double t) { return std::abs(t) <= 20 ? 0.0 : -1.0; },
                                     riccati::CurvatureFunction::unbounded(), riccati::Smoothness::C0,
                                     {-20.0, 20.0});
  const auto v = certify_curvature(K, bubbles::floor_theorem3(0.5, 0), {});
  CHECK(v.converged);
  CHECK(v.signs_ok);
  CHECK_FALSE(v.separation_ok);
  // Closed form in the strip: U^u(t) = 1 / (t + 21), U^s(t) = -1 / (21 - t).
  CHECK(v.min_Uu == doctest::Approx(1.0 / 26).epsilon(1e-4));
  CHECK(v.max_Us == doctest::Approx(-1.0 / 26).epsilon(1e-4));
  CHECK(v.separation == doctest::Approx(2.0 / 21).epsilon(1e-4));
}

TEST_CASE("floor_thm3 <= floor_thm1 on the parameter grid in use") {
  for (double eps : {0.1, 0.25, 0.5, 0.75, 0.9})
    for (double mu : {0.0, flagship().path.mu(), 0.01, 0.1, 1.0})
      CHECK(bubbles::floor_theorem3(eps, mu) <= bubbles::floor_theorem1(eps));
}

TEST_CASE("stratified starts") {
  Theorem3Params p;
  p.n_geodesics = 40;
  const auto& s = flagship().surface;
  const auto starts = stratified_starts(s, p);
  REQUIRE(starts.size() == 40);
  int aimed = 0, grazing = 0;
  const surface::Metric g(s);
  for (const auto& st : starts) {
    CHECK(s.domain().contains(st.z));
    if (st.stratum == Stratum::Aimed) {
      ++aimed;
      CHECK(st.z == s.bumps()[0].center);
    }
    if (st.stratum == Stratum::Grazing) {
      ++grazing;
      const double d = hyperbolic::distance(st.z, s.bumps()[0].center);
      CHECK(d >= 0.9 * 0.05 - 1e-12);
      CHECK(d <= 1.1 * 0.05 + 1e-12);
      // Tangent to the circle: the distance to the centre is stationary.
      const auto tr = surface::geodesic_flow(g, surface::unit_state(g, st.z, st.theta), -1e-3, 1e-3, {});
      const double dp = hyperbolic::distance(tr.position(1e-3), 0), dm = hyperbolic::distance(tr.position(-1e-3), 0);
      CHECK(std::abs(dp - dm) <= 1e-8);
    }
  }
  CHECK(aimed == 10);
  CHECK(grazing == 10);
  const auto none = stratified_starts(BubbledSurface{}, p);
  for (const auto& st : none) CHECK(st.stratum == Stratum::Uniform);
}

TEST_CASE("theorem-3 certificate on a reduced flagship sample is deterministic") {
  const Fixture& f = flagship();
  Theorem3Params p;
  p.n_geodesics = 8;
  p.seed = 11;
  const auto a = certify_theorem3(f.surface, f.path, p);
  const auto b = certify_theorem3(f.surface, f.path, p);
  CHECK(a.pass);
  CHECK(a.hypothesis_holds);
  REQUIRE(a.per_rho.size() == 11);
  for (std::size_t r = 0; r < a.per_rho.size(); ++r) {
    CHECK(a.per_rho[r].min_margin == b.per_rho[r].min_margin);
    for (std::size_t i = 0; i < a.per_rho[r].certificates.size(); ++i) {
      CHECK(a.per_rho[r].certificates[i].separation == b.per_rho[r].certificates[i].separation);
      CHECK(a.per_rho[r].certificates[i].min_Uu == b.per_rho[r].certificates[i].min_Uu);
    }
  }
  CHECK(a.floor_thm3 == bubbles::floor_theorem3(0.5, f.path.mu()));
  CHECK(a.separation_required == doctest::Approx(2 * a.floor_thm3 - 1e-3).epsilon(1e-15));
}

TEST_CASE("rho grid {0} matches per-geodesic first-family certification") {
  const Fixture& f = flagship();
  const auto path0 = deformation::build_path(f.surface, {}, 0.5, {0.0});
  Theorem3Params p;
  p.n_geodesics = 6;
  const auto cert = certify_theorem3(f.surface, path0, p);
  REQUIRE(cert.per_rho.size() == 1);
  const surface::Metric g(f.surface);
  for (const auto& c3 : cert.per_rho[0].certificates) {
    const auto c1 = certify_geodesic(g, c3.z0, c3.theta0, 0.5, cert.mu, {}, true);
    CHECK(c1.separation == c3.separation);
    CHECK(c1.min_Uu == c3.min_Uu);
    CHECK(c1.pass == c3.pass);
  }
}

TEST_CASE("gate and failure bundle") {
  const BubbledSurface hot = surface::calibrate_amplitudes(BubbledSurface({Bump{0, 0.05, 0}}), 0.95);
  const auto path = deformation::build_path(hot, {}, 0.5, {0.0, 1.0});
  Theorem3Params p;
  p.n_geodesics = 2;
  try {
    certify_theorem3(hot, path, p);
    FAIL("expected HypothesisViolated");
  } catch (const HypothesisViolated& e) {
    CHECK(e.gap > 0);
  }

  // Impossible separation requirement: every geodesic fails and the re-run confirms.
  const Fixture& f = flagship();
  const auto small = deformation::build_path(f.surface, {}, 0.5, {0.0});
  p.cert.slack = -10;
  const auto cert = certify_theorem3(f.surface, small, p);
  CHECK_FALSE(cert.pass);
  CHECK(cert.per_rho[0].failures == 2);
  CHECK(cert.per_rho[0].oracle_confirmed == 2);
  p.throw_on_failure = true;
  try {
    certify_theorem3(f.surface, small, p);
    FAIL("expected CertificateFailed");
  } catch (const CertificateFailed& e) {
    const auto j = nlohmann::json::parse(e.replay);
    CHECK(j["rho"] == 0.0);
    CHECK(j["surface"]["bumps"].size() == 1);
    CHECK(j["seed"].get<std::uint64_t>() == cert.per_rho[0].certificates[cert.per_rho[0].worst].seed);
  }
}

TEST_CASE("stress run outside the family: outcome recorded") {
  const double bound = bubbles::kplus_bound_theorem3(0.5, 0.4, 0);
  REQUIRE(bound > 0);
  const BubbledSurface s = surface::calibrate_amplitudes(BubbledSurface({Bump{0, 0.4, 0}}), 5 * bound);
  const auto path = deformation::build_path(s, {}, 0.5, {0.0, 0.5, 1.0});
  Theorem3Params p;
  p.n_geodesics = 8;
  p.enforce_hypothesis = false;
  const auto cert = certify_theorem3(s, path, p);
  CHECK_FALSE(cert.hypothesis_holds);
  for (const auto& r : cert.per_rho)
    MESSAGE("rho ", r.rho, ": failures ", r.failures, ", min separation ", r.min_separation, ", required ",
            cert.separation_required);
}
