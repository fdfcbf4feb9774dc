#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>

namespace anosovlab {

/// Root of every failure raised by the library. Subclasses carry the
/// numbers needed to diagnose or replay the failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
template <typename... Args>
std::string concat(const Args&... args) {
  std::ostringstream os;
  os.precision(17);
  (os << ... << args);
  return os.str();
}
}  // namespace detail

class StepUnderflow : public Error {
 public:
  StepUnderflow(double t, double h)
      : Error(detail::concat("step size underflow at t=", t, " (h=", h, ")")), t(t), h(h) {}
  double t, h;
};

class DomainExceeded : public Error {
 public:
  DomainExceeded(double t, double lo, double hi)
      : Error(detail::concat("curvature queried at t=", t, " outside [", lo, ", ", hi, "]")),
        t(t) {}
  double t;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class PoleAt : public Error {
 public:
  explicit PoleAt(double t) : Error(detail::concat("closed-form solution has a pole at t=", t)), t(t) {}
  double t;
};

class ComparisonViolated : public Error {
 public:
  ComparisonViolated(double t, double gap)
      : Error(detail::concat("comparison violated at t=", t, " (gap ", gap, ")")), t(t), gap(gap) {}
  double t, gap;
};

class NotConverged : public Error {
 public:
  NotConverged(double gap, double tol, const std::string& why)
      : Error(detail::concat("stable/unstable limit not converged: ", why, " (gap ", gap,
                             ", tol ", tol, ")")),
        gap(gap), tol(tol) {}
  double gap, tol;
};

class LayoutError : public Error {
 public:
  using Error::Error;
};

class BoundViolated : public Error {
 public:
  BoundViolated(std::size_t m, double u_exit, double value, double threshold)
      : Error(detail::concat("exit bound violated after bubble ", m, " with U(b_m)=", u_exit,
                             ": U(a_{m+1})=", value, " <= ", threshold)),
        m(m), u_exit(u_exit), value(value), threshold(threshold) {}
  std::size_t m;
  double u_exit, value, threshold;
};

class FloorViolated : public Error {
 public:
  FloorViolated(double t, double value, double floor, double analytic_floor)
      : Error(detail::concat("crossing floor violated at t=", t, ": U=", value, ", floor=", floor,
                             ", analytic floor=", analytic_floor)),
        t(t), value(value), floor(floor), analytic_floor(analytic_floor) {}
  double t, value, floor, analytic_floor;
};

/// Carries a serialized replay bundle (structured text) of the failing case.
class CertificateFailed : public Error {
 public:
  CertificateFailed(const std::string& what, std::string replay)
      : Error(what), replay(std::move(replay)) {}
  std::string replay;
};

class CornerHit : public Error {
 public:
  CornerHit(double t, double x, double y)
      : Error(detail::concat("geodesic passed within tolerance of a polygon vertex at t=", t,
                             " (", x, ", ", y, ")")),
        t(t) {}
  double t;
};

class Unreachable : public Error {
 public:
  Unreachable(double target, double max_achievable)
      : Error(detail::concat("target curvature ", target, " unreachable; max achievable ",
                             max_achievable)),
        max_achievable(max_achievable) {}
  double max_achievable;
};

class SeparationViolated : public Error {
 public:
  SeparationViolated(unsigned long long seed, double gap, double required)
      : Error(detail::concat("bubble separation violated on geodesic ", seed, ": gap ", gap,
                             " < ", required)),
        seed(seed), gap(gap) {}
  unsigned long long seed;
  double gap;
};

class HypothesisViolated : public Error {
 public:
  HypothesisViolated(const std::string& what, double gap) : Error(what), gap(gap) {}
  double gap;
};

class NoConvergence : public Error {
 public:
  NoConvergence(long iterations, double residual)
      : Error(detail::concat("conjugate gradient did not converge after ", iterations,
                             " iterations (relative residual ", residual, ")")),
        iterations(iterations), residual(residual) {}
  long iterations;
  double residual;
};

class FormulaMismatch : public Error {
 public:
  FormulaMismatch(double disagreement, double tol)
      : Error(detail::concat("deformed-curvature routes disagree: ", disagreement, " > ", tol)),
        disagreement(disagreement) {}
  double disagreement;
};

class PropertyFailed : public Error {
 public:
  PropertyFailed(const std::string& tag, long vertex, double rho, double value)
      : Error(detail::concat("property ", tag, " failed at vertex ", vertex, ", rho=", rho,
                             " (value ", value, ")")),
        tag(tag), vertex(vertex), rho(rho) {}
  std::string tag;
  long vertex;
  double rho;
};

class MonotonicityViolated : public Error {
 public:
  using Error::Error;
};

class GrowthViolated : public Error {
 public:
  GrowthViolated(double start, double value, double floor)
      : Error(detail::concat("growth lemma violated on segment starting at t=", start, ": U=",
                             value, " <= ", floor)),
        start(start) {}
  double start;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace anosovlab
