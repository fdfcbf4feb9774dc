#pragma once

// Synthetic curvature profiles along a geodesic with small positive-curvature
// bubbles separated by long negatively curved gaps, and the explicit
// constants that control Riccati solutions on them.

#include <cstdint>
#include <string>
#include <vector>

#include "anosovlab/riccati.hpp"

namespace anosovlab::bubbles {

using riccati::CurvatureFunction;
using riccati::Interval;

struct FamilyParams {
  double epsilon = 0.5;     // K <= -epsilon outside bubbles
  double delta = 0.1;       // bubble radius
  int k = 1;                // bubble count
  double lambda_gap = 1.5;  // minimum gap between bubbles
  double kplus = 0.5;       // maximum curvature
  double mu = 0;            // conformal exponent bound

  /// Throws DomainError when the parameters leave the family.
  void validate() const;
};

/// (1/sqrt(eps)) artanh(1 - eps/2), the gap length after which a positive
/// solution exceeds sqrt(eps)(1 - eps/2). Accepts 0 < eps <= 1.
double lambda_of_epsilon(double epsilon);

double kplus_bound_theorem1(double epsilon, double delta);
double kplus_bound_theorem3(double epsilon, double delta, double mu);
/// Largest delta for which the corresponding bound is positive.
double theorem1_delta_threshold(double epsilon);
double theorem3_delta_threshold(double epsilon, double mu);

/// sqrt(eps)(1 - eps/2): guaranteed value of a positive solution on entry.
double exit_threshold(double epsilon);
/// eps(1 - eps/2)^2: lower bound of the unstable solution.
double floor_theorem1(double epsilon);
/// e^{-2mu} eps tanh^2(e^{-mu} ln3 / 3).
double floor_theorem3(double epsilon, double mu);
/// e^{-mu} sqrt(eps) tanh(e^{-mu} ln3 / 2) and its ln3/3 variant.
double growth_floor_half(double epsilon, double mu);
double growth_floor_third(double epsilon, double mu);

struct JitterTerm {
  double weight, omega, phase;
};

/// Shape knobs of generated profiles.
struct ProfileShape {
  double jitter_amplitude = 0.5;  // in [0, 0.5]
  double edge_fraction = 0.25;    // taper length per side, relative to the interval
};

struct BubbleProfile {
  FamilyParams params;
  std::vector<Interval> intervals;
  std::uint64_t seed = 0;
  ProfileShape shape;
  std::vector<JitterTerm> jitter;
  CurvatureFunction curvature = CurvatureFunction::constant(0);

  double K(double t) const { return curvature(t); }
  /// Negative curvature magnitude factor outside bubbles, in [0, amplitude].
  double jitter_at(double t) const;
  /// Checks the invariants of the family; returns an empty string when valid.
  std::string admissibility_error() const;
  /// Plain structured text (params, intervals, seed) for replay.
  std::string serialize() const;
};

/// Intervals (s, s + 2 delta) for each start s. Outside them
/// K = -eps (1 + jitter) with jitter in [0, jitter_amplitude]; inside, a C^2
/// taper rises to a plateau at exactly kplus around the centre.
BubbleProfile make_profile(const FamilyParams& params, const std::vector<double>& layout,
                           std::uint64_t seed, ProfileShape shape = {});

/// Random admissible layout: k bubbles with gaps drawn in
/// [lambda_gap, lambda_gap + spread], first interval starting at 0.
std::vector<double> random_layout(const FamilyParams& params, std::uint64_t seed, double spread = 1.5);

struct SegmentResult {
  double U_end = 0;
  double U_min = 0;
  double t_min = 0;
  bool blowup = false;
};

/// Riccati solution with U(span.lo) = U0 carried to span.hi.
SegmentResult riccati_across(const CurvatureFunction& K, Interval span, double U0,
                             double sample_spacing = 1e-3, ode::Tolerance tol = {});

struct ExitCase {
  std::size_t m;  // gap after bubble m
  double U_exit;
  double U_entry;  // value at the next bubble
  double U_min;
  double margin;  // U_entry - exit_threshold
};

struct ExitBoundReport {
  std::vector<ExitCase> cases;
  double min_margin = 0;
  double threshold = 0;
};

inline const std::vector<double> kDefaultExitValues{1e-4, 1e-2, 1.0, 10.0};

ExitBoundReport verify_exit_bound(const BubbleProfile& profile,
                                  const std::vector<double>& exit_values = kDefaultExitValues);

struct CrossingCase {
  std::size_t m;
  double U_entry;
  double U_min;         // over [a_m, b_m]
  double t_min;
  double floor_margin;  // U_min - floor
  double analytic_margin;  // min over the bubble of U - analytic floor
};

struct CrossingReport {
  std::vector<CrossingCase> cases;
  double floor = 0;
  double min_floor_margin = 0;
  double min_analytic_margin = 0;
  bool violated = false;
};

/// Default entries: the worst case sqrt(eps)(1 - eps/2) and larger values.
std::vector<double> default_entry_values(double epsilon);

/// Non-throwing crossing analysis for arbitrary entry values.
CrossingReport crossing_report(const BubbleProfile& profile, const std::vector<double>& entries);

/// Throws FloorViolated when U dips to the floor inside a bubble.
CrossingReport verify_bubble_crossing(const BubbleProfile& profile,
                                      const std::vector<double>& entries = {});

struct ProfileCertificate {
  std::uint64_t seed = 0;
  Interval window;
  double min_Uu = 0;
  double max_Us = 0;
  double separation = 0;
  double cauchy_gap = 0;
  bool pass = false;
};

struct AnosovProfileReport {
  FamilyParams params;
  double floor = 0;                 // eps (1 - eps/2)^2
  double separation_required = 0;   // 2 floor - slack
  double sign_tol = 1e-8;
  double slack = 1e-3;
  double convergence_tol = 1e-6;
  double horizon_T = 40;
  std::vector<ProfileCertificate> profiles;
  bool pass = true;
  double min_margin = 0;  // min separation - required
  std::size_t worst = 0;
};

struct CertifyOptions {
  double horizon_T = 40;
  double window_pad = 2.0;
  double sign_tol = 1e-8;
  double slack = 1e-3;
  ProfileShape shape{};
  riccati::StableUnstableOptions su{};
  bool throw_on_failure = true;
};

/// Stable/unstable solutions on random admissible profiles, checking the
/// no-focal-point signs and the separation floor 2 eps (1 - eps/2)^2.
AnosovProfileReport certify_theorem1(const FamilyParams& params, int n_profiles, std::uint64_t seed,
                                     const CertifyOptions& opts = {});

BubbleProfile profile_for_seed(const FamilyParams& params, std::uint64_t base_seed, int index,
                               ProfileShape shape = {});

}  // namespace anosovlab::bubbles
