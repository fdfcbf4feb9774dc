#pragma once

// Scalar Jacobi equation f'' + K f = 0 along a unit-speed geodesic and the
// associated Riccati equation U' + U^2 + K = 0 for U = f'/f.

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "anosovlab/ode.hpp"

namespace anosovlab::riccati {

struct Interval {
  double lo = 0;
  double hi = 0;
  double length() const { return hi - lo; }
  bool contains(double t) const { return lo <= t && t <= hi; }
};

enum class Smoothness { C0, C2, Analytic };

/// Curvature along a geodesic, K(t), on a closed (possibly unbounded) domain.
class CurvatureFunction {
 public:
  using Evaluator = std::function<double(double)>;

  CurvatureFunction(Evaluator eval, Interval domain = unbounded(),
                    Smoothness smoothness = Smoothness::C2, std::vector<double> breakpoints = {});

  static CurvatureFunction constant(double k);
  static Interval unbounded() {
    const double inf = std::numeric_limits<double>::infinity();
    return {-inf, inf};
  }

  /// Throws DomainExceeded outside the declared domain.
  double operator()(double t) const;

  const Interval& domain() const { return domain_; }
  Smoothness smoothness() const { return smoothness_; }
  /// Times where K is not smooth; integrators restart there.
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  /// Sampled min and max of K on `window` using n uniform points.
  std::pair<double, double> sampled_bounds(Interval window, int n = 2001) const;

 private:
  Evaluator eval_;
  Interval domain_;
  Smoothness smoothness_;
  std::vector<double> breakpoints_;
};

struct JacobiState {
  double t = 0;
  double f = 0;
  double fp = 0;
};

using JacobiVec = ode::State<double, 2>;

/// Output of integrate_jacobi: accepted step endpoints plus the dense
/// interpolant and enough context to re-step from any step start.
struct JacobiSolution {
  std::vector<JacobiState> states;
  ode::DenseSolution<double, 2> dense;
  CurvatureFunction curvature;
  ode::Tolerance tol;

  JacobiState at(double t) const;
  /// Error-controlled value at t inside step k obtained by one fresh
  /// Dormand-Prince step from the start of step k.
  JacobiState restep(std::size_t k, double t) const;
};

std::shared_ptr<const JacobiSolution> integrate_jacobi(const CurvatureFunction& K,
                                                       const JacobiState& init, double t_end,
                                                       ode::Tolerance tol = {});

struct BlowUp {
  double t = 0;
  /// Sign of U as t approaches the blow-up along the direction of
  /// integration (0 for a zero at the initial time).
  int sign = 0;
};

struct RiccatiSample {
  double t;
  double U;
};

/// Riccati solution U = f'/f. Samples are in increasing time order; the
/// underlying Jacobi solution is retained for evaluation between samples.
struct RiccatiTrajectory {
  std::vector<RiccatiSample> samples;
  std::vector<BlowUp> blowups;  // increasing time
  ode::Tolerance tol;
  std::shared_ptr<const JacobiSolution> source;

  bool complete() const { return blowups.empty(); }
  double U(double t) const;
  double t_min() const { return samples.front().t; }
  double t_max() const { return samples.back().t; }
};

/// Blow-ups are localized by bisection to `locate_tol`.
RiccatiTrajectory riccati_from_jacobi(std::shared_ptr<const JacobiSolution> solution,
                                      double locate_tol = 1e-10);

/// Exact solution of V' + V^2 - epsilon = 0 with V(0) = U0. Throws PoleAt
/// when a pole lies between 0 and t.
double constant_curvature_riccati(double epsilon, double U0, double t);

struct ComparisonReport {
  double max_violation = 0;  // max over samples of (U2 - U1), clipped at 0
  double violation_t = 0;
  double min_gap = 0;        // min over samples of (U1 - U2)
  double checked_until = 0;  // first blow-up of either solution, or window end
  std::optional<double> first_blowup;
  std::size_t samples = 0;
};

/// Sturm-type comparison: with K1 <= K2, U1 >= U2 from a common initial value.
ComparisonReport comparison_check(const CurvatureFunction& K1, const CurvatureFunction& K2,
                                  double U0, Interval window, double tol = 1e-7,
                                  ode::Tolerance ode_tol = {});

struct StableUnstableOptions {
  double convergence_tol = 1e-6;
  double grid_spacing = 0.01;
  ode::Tolerance tol{};
};

struct StableUnstablePair {
  RiccatiTrajectory u_stable;
  RiccatiTrajectory u_unstable;
  double horizon_T = 0;
  double cauchy_gap = 0;
  Interval window;
  std::vector<double> grid;
  std::vector<double> Us;  // on grid
  std::vector<double> Uu;
  bool blowup_in_window = false;

  double min_Uu() const;
  double max_Us() const;
  double separation() const;  // min over grid of Uu - Us
};

/// Computes the pair without raising on non-convergence; callers inspect
/// cauchy_gap and blowup_in_window.
StableUnstablePair compute_stable_unstable(const CurvatureFunction& K, Interval window,
                                           double horizon_T, const StableUnstableOptions& opts = {});

/// As compute_stable_unstable, throwing NotConverged when the limit is not
/// resolved on the window.
StableUnstablePair stable_unstable_pair(const CurvatureFunction& K, Interval window,
                                        double horizon_T = 40, const StableUnstableOptions& opts = {});

/// Radius pi / (4 sqrt(K+)) of focal-point-free balls; +inf for K+ <= 0.
double focal_free_radius(double kplus);

}  // namespace anosovlab::riccati
