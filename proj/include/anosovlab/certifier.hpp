#pragma once

// Riccati certificates along geodesics of g_rho: no focal points (U^u >= 0,
// U^s <= 0) and Anosov separation U^u - U^s bounded below by explicit floors.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "anosovlab/deformation.hpp"
#include "anosovlab/riccati.hpp"
#include "anosovlab/surface.hpp"

namespace anosovlab::certifier {

using riccati::CurvatureFunction;
using riccati::Interval;
using surface::Complex;

enum class Stratum { Aimed, Grazing, Uniform, Given };
const char* stratum_name(Stratum s);

struct CertifyOptions {
  double horizon_T = 40;
  Interval window{-5, 5};
  double sign_tol = 1e-8;
  double slack = 1e-3;
  riccati::StableUnstableOptions su{};
  surface::FlowOptions flow{};
  bool oracle_rerun = true;  // re-check failures at tol / 32 and 2 T
};

/// Sign and separation verdict for one curvature function.
struct CurveVerdict {
  double min_Uu = 0;
  double max_Us = 0;
  double separation = 0;
  double cauchy_gap = 0;
  double k_min = 0, k_max = 0;  // sampled on the window
  bool converged = false;
  bool signs_ok = false;
  bool separation_ok = false;
  bool pass() const { return converged && signs_ok && separation_ok; }
};

/// Stable/unstable pair on `window` with horizon T; the separation threshold
/// is 2 floor - slack. K must be defined on [window.lo - T, window.hi + T].
CurveVerdict certify_curvature(const CurvatureFunction& K, double floor, const CertifyOptions& opts);

struct GeodesicCertificate {
  std::uint64_t seed = 0;
  Stratum stratum = Stratum::Given;
  double rho = 0;
  Complex z0;
  double theta0 = 0;
  Interval window;
  double min_Uu = 0, max_Us = 0, separation = 0, cauchy_gap = 0;
  double floor_thm1 = 0, floor_thm3 = 0;
  double k_min = 0, k_max = 0;  // K_rho along the window
  std::vector<surface::BubbleVisit> visits;  // over the whole integration range
  bool pass = false;
  bool oracle_confirmed = false;  // failure reproduced by the refined re-run
  std::string failure;  // empty on pass
};

/// Integrates the g_rho geodesic through (z0, theta0) over
/// [window.lo - T, window.hi + T], extracts K_rho(t) and certifies it against
/// floor_thm3 (floor_thm1 when use_theorem1_floor is set).
/// Propagates CornerHit; non-convergence is recorded as a failure.
GeodesicCertificate certify_geodesic(const surface::Metric& metric, Complex z0, double theta0,
                                     double epsilon, double mu, const CertifyOptions& opts = {},
                                     bool use_theorem1_floor = false);

/// Window samples of U^u, U^s and K_rho along one geodesic (for plots).
struct GeodesicRiccati {
  std::vector<double> t, Uu, Us, K;
};
GeodesicRiccati riccati_along(const surface::Metric& metric, Complex z0, double theta0,
                              const CertifyOptions& opts = {});

struct GrowthSegment {
  double start = 0, length = 0;
  double U_lambda = 0;  // U(start + Lambda) from U(start) = 0
  double U_end = 0;     // U(start + length)
  double margin_half = 0;   // U_lambda - e^{-mu} sqrt(eps) tanh(e^{-mu} ln3 / 2)
  double margin_third = 0;  // U_lambda - e^{-mu} sqrt(eps) tanh(e^{-mu} ln3 / 3)
};

/// U from 0 at `start` across a bubble-free segment: values at start + Lambda(eps)
/// and at start + length, with both growth margins.
GrowthSegment growth_on_segment(const CurvatureFunction& K, double start, double length,
                                double epsilon, double mu, ode::Tolerance tol = {});

struct GrowthReport {
  double epsilon = 0, mu = 0, rho = 0, lambda = 0;
  double floor_half = 0, floor_third = 0;
  std::vector<GrowthSegment> segments;
  double min_margin_half = 0, min_margin_third = 0;
  int geodesics = 0;
};

/// Bubble-free segments of length >= Lambda(eps) on seeded random geodesics.
/// Throws GrowthViolated when U(start + Lambda) does not exceed the weaker
/// (ln3 / 3) floor; the ln3 / 2 margin is reported only.
GrowthReport growth_lemma_check(const surface::Metric& metric, double epsilon, double mu,
                                int n_geodesics, std::uint64_t seed, double length = 30,
                                const surface::FlowOptions& flow = {});

struct RhoVerdict {
  double rho = 0;
  bool pass = true;
  int geodesics = 0;
  int failures = 0;
  int oracle_confirmed = 0;
  int corner_resamples = 0;
  double min_Uu = 0, max_Us = 0;
  double min_separation = 0;
  double max_cauchy_gap = 0;
  double min_margin = 0;  // min separation - (2 floor - slack)
  double k_max_along = 0;  // max K_rho over all windows
  std::size_t worst = 0;   // index into certificates
  std::vector<GeodesicCertificate> certificates;
};

struct Theorem3Params {
  int n_geodesics = 200;
  std::uint64_t seed = 1;
  double aimed_fraction = 0.25;
  double grazing_fraction = 0.25;
  CertifyOptions cert{};
  bool throw_on_failure = false;
  bool enforce_hypothesis = true;  // off only for stress runs outside the family
};

struct AnosovCertificate {
  // parameter echo
  double epsilon = 0, delta = 0, delta_g = 0, lambda = 0, kplus = 0, mu = 0;
  int k = 0;
  double kplus_bound = 0;  // bound3(eps, delta_g, mu)
  double floor_thm1 = 0, floor_thm3 = 0;
  double separation_required = 0;
  double sign_tol = 0, slack = 0, convergence_tol = 0, horizon_T = 0;
  Interval window;
  std::uint64_t seed = 0;
  std::vector<RhoVerdict> per_rho;
  bool hypothesis_holds = true;  // kplus < kplus_bound
  bool pass = true;
};

/// Initial conditions of the stratified sample (identical for every rho).
struct Start {
  std::uint64_t seed;
  Stratum stratum;
  Complex z;
  double theta;
};
std::vector<Start> stratified_starts(const surface::BubbledSurface& surface, const Theorem3Params& p);

/// Certifies every rho of the path. Throws HypothesisViolated unless the
/// measured K+ lies strictly below bound3(eps, delta_g, mu), and
/// CertificateFailed (with a replay bundle) on failure when asked to.
AnosovCertificate certify_theorem3(const surface::BubbledSurface& surface,
                                   const deformation::DeformationPath& path, const Theorem3Params& p);

struct FamilyCalibration {
  surface::BubbledSurface surface;
  double mu_used = 0;  // mu of the previous round, entering the target
  double target = 0;   // fraction * bound3(eps, delta_g, mu_used)
  int rounds = 0;
};

/// Calibrates the amplitudes to fraction * bound3(eps, delta_g, mu), with mu
/// taken from the deformation of the previous round (starting at 0). Since
/// bound3 decreases in mu, the result satisfies K+ <= fraction * bound3 for
/// the mu of its own deformation once mu stops growing.
FamilyCalibration calibrate_for_deformed_family(const surface::BubbledSurface& base, double epsilon,
                                                double fraction, const deformation::MeshOptions& mesh = {},
                                                int max_rounds = 4);

/// Replay bundle: surface, seeds and rho of one failing geodesic as JSON text.
std::string replay_bundle(const surface::BubbledSurface& surface, const GeodesicCertificate& c,
                          double epsilon, double mu);

}  // namespace anosovlab::certifier
