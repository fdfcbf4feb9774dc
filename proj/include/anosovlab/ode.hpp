#pragma once

// Embedded Dormand-Prince 5(4) pair with the 4th-order continuous extension
// (Hairer, Norsett & Wanner, "Solving ODEs I", II.5 / DOPRI5). The stepper is
// generic over the scalar type and the (fixed) state dimension.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "anosovlab/errors.hpp"

namespace anosovlab::ode {

struct Tolerance {
  double rel = 1e-10;
  double abs = 1e-12;
};

template <typename Scalar, int N>
using State = Eigen::Matrix<Scalar, N, 1>;

/// One accepted step together with its dense-output coefficients.
template <typename Scalar, int N>
struct DenseStep {
  Scalar t0{};
  Scalar h{};
  std::array<State<Scalar, N>, 5> rcont;

  Scalar t1() const { return t0 + h; }

  State<Scalar, N> eval(Scalar t) const {
    const Scalar theta = (t - t0) / h;
    const Scalar theta1 = Scalar(1) - theta;
    return rcont[0] +
           theta * (rcont[1] +
                    theta1 * (rcont[2] + theta * (rcont[3] + theta1 * rcont[4])));
  }
};

/// Piecewise dense solution; steps are ordered in the direction of
/// integration (time may decrease).
template <typename Scalar, int N>
class DenseSolution {
 public:
  void push(DenseStep<Scalar, N> step) { steps_.push_back(std::move(step)); }

  bool empty() const { return steps_.empty(); }
  const std::vector<DenseStep<Scalar, N>>& steps() const { return steps_; }
  Scalar t_begin() const { return steps_.front().t0; }
  Scalar t_end() const { return steps_.back().t1(); }
  bool forward() const { return steps_.empty() || steps_.front().h > 0; }

  /// Index of the step whose closed span contains t (clamped).
  std::size_t locate(Scalar t) const {
    const bool fwd = forward();
    auto it = std::lower_bound(
        steps_.begin(), steps_.end(), t, [fwd](const DenseStep<Scalar, N>& s, Scalar x) {
          return fwd ? s.t1() < x : s.t1() > x;
        });
    if (it == steps_.end()) return steps_.size() - 1;
    return static_cast<std::size_t>(it - steps_.begin());
  }

  State<Scalar, N> eval(Scalar t) const { return steps_[locate(t)].eval(t); }

 private:
  std::vector<DenseStep<Scalar, N>> steps_;
};

template <typename Scalar, int N>
struct StepAttempt {
  State<Scalar, N> y1;
  State<Scalar, N> k7;  // f(t+h, y1), reused as k1 of the next step
  double error = 0;     // scaled error norm, accepted when <= 1
  DenseStep<Scalar, N> dense;
};

/// Stateless Dormand-Prince 5(4) stepper.
template <typename Scalar, int N>
struct DormandPrince45 {
  using Vec = State<Scalar, N>;

  template <typename Rhs>
  static StepAttempt<Scalar, N> attempt(const Rhs& f, Scalar t, const Vec& y, const Vec& k1,
                                        Scalar h, const Tolerance& tol) {
    constexpr Scalar a21 = Scalar(1) / 5;
    constexpr Scalar a31 = Scalar(3) / 40, a32 = Scalar(9) / 40;
    constexpr Scalar a41 = Scalar(44) / 45, a42 = Scalar(-56) / 15, a43 = Scalar(32) / 9;
    constexpr Scalar a51 = Scalar(19372) / 6561, a52 = Scalar(-25360) / 2187,
                     a53 = Scalar(64448) / 6561, a54 = Scalar(-212) / 729;
    constexpr Scalar a61 = Scalar(9017) / 3168, a62 = Scalar(-355) / 33,
                     a63 = Scalar(46732) / 5247, a64 = Scalar(49) / 176,
                     a65 = Scalar(-5103) / 18656;
    constexpr Scalar a71 = Scalar(35) / 384, a73 = Scalar(500) / 1113,
                     a74 = Scalar(125) / 192, a75 = Scalar(-2187) / 6784,
                     a76 = Scalar(11) / 84;
    constexpr Scalar e1 = Scalar(71) / 57600, e3 = Scalar(-71) / 16695,
                     e4 = Scalar(71) / 1920, e5 = Scalar(-17253) / 339200,
                     e6 = Scalar(22) / 525, e7 = Scalar(-1) / 40;
    constexpr Scalar d1 = Scalar(-12715105075.0L / 11282082432.0L),
                     d3 = Scalar(87487479700.0L / 32700410799.0L),
                     d4 = Scalar(-10690763975.0L / 1880347072.0L),
                     d5 = Scalar(701980252875.0L / 199316789632.0L),
                     d6 = Scalar(-1453857185.0L / 822651844.0L),
                     d7 = Scalar(69997945.0L / 29380423.0L);

    const Vec k2 = f(t + h / 5, Vec(y + h * (a21 * k1)));
    const Vec k3 = f(t + h * Scalar(3) / 10, Vec(y + h * (a31 * k1 + a32 * k2)));
    const Vec k4 = f(t + h * Scalar(4) / 5, Vec(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const Vec k5 = f(t + h * Scalar(8) / 9,
                     Vec(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const Vec k6 = f(t + h, Vec(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));

    StepAttempt<Scalar, N> out;
    out.y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    out.k7 = f(t + h, out.y1);
    const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * out.k7);

    double acc = 0;
    for (int i = 0; i < y.size(); ++i) {
      using std::abs;
      const double scale = tol.abs + tol.rel * std::max(double(abs(y[i])), double(abs(out.y1[i])));
      const double r = double(err[i]) / scale;
      acc += r * r;
    }
    out.error = std::sqrt(acc / double(y.size()));

    const Vec ydiff = out.y1 - y;
    const Vec bspl = h * k1 - ydiff;
    out.dense.t0 = t;
    out.dense.h = h;
    out.dense.rcont[0] = y;
    out.dense.rcont[1] = ydiff;
    out.dense.rcont[2] = bspl;
    out.dense.rcont[3] = ydiff - h * out.k7 - bspl;
    out.dense.rcont[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * out.k7);
    return out;
  }
};

struct IntegratorOptions {
  Tolerance tol{};
  double initial_step = 0;  // 0 selects a step from the local scales
  double max_step = 0;      // 0 means unbounded
  long max_steps = 5'000'000;
};

/// Adaptive driver that advances one accepted step at a time, so callers can
/// inspect each step (events, wrapping) and restart from a modified state.
template <typename Scalar, int N, typename Rhs>
class AdaptiveIntegrator {
 public:
  using Vec = State<Scalar, N>;

  AdaptiveIntegrator(Rhs rhs, Scalar t0, const Vec& y0, IntegratorOptions opts)
      : rhs_(std::move(rhs)), opts_(opts) {
    reset(t0, y0);
  }

  void reset(Scalar t, const Vec& y) {
    t_ = t;
    y_ = y;
    k1_ = rhs_(t_, y_);
    h_ = 0;
  }

  Scalar time() const { return t_; }
  const Vec& state() const { return y_; }
  const Rhs& rhs() const { return rhs_; }
  const DenseStep<Scalar, N>& last_step() const { return last_; }
  long steps_taken() const { return accepted_; }

  /// Takes one accepted step towards t_target (never overshooting it).
  void step_towards(Scalar t_target) {
    using std::abs;
    const Scalar span = t_target - t_;
    const Scalar dir = span >= 0 ? Scalar(1) : Scalar(-1);
    if (h_ == 0) h_ = dir * initial_step(abs(span));
    h_ = dir * abs(h_);
    if (opts_.max_step > 0) h_ = dir * std::min(abs(h_), Scalar(opts_.max_step));

    const double eps = std::numeric_limits<double>::epsilon();
    while (true) {
      Scalar h = h_;
      bool clipped = false;
      if (abs(h) >= abs(t_target - t_)) {
        h = t_target - t_;
        clipped = true;
      }
      const double tiny = 16 * eps * std::max(1.0, double(abs(t_)));
      if (!clipped && double(abs(h)) < tiny) throw StepUnderflow(double(t_), double(h));
      if (++attempts_ > opts_.max_steps) throw StepUnderflow(double(t_), double(h));

      auto att = DormandPrince45<Scalar, N>::attempt(rhs_, t_, y_, k1_, h, opts_.tol);
      const bool finite = att.y1.allFinite() && std::isfinite(att.error);
      if (finite && att.error <= 1.0) {
        const double fac = att.error == 0 ? 5.0
                                          : std::clamp(0.9 * std::pow(att.error, -0.2), 0.2, 5.0);
        last_ = att.dense;
        t_ = clipped ? t_target : t_ + h;
        y_ = att.y1;
        k1_ = att.k7;
        if (!clipped) h_ = h * Scalar(fac);
        ++accepted_;
        return;
      }
      const double fac = finite ? std::clamp(0.9 * std::pow(att.error, -0.2), 0.1, 0.9) : 0.25;
      h_ = h * Scalar(fac);
    }
  }

  /// Single error-uncontrolled step of size h from the start of the last step.
  Vec restep_from(const DenseStep<Scalar, N>& step, Scalar h) const {
    const Vec& y0 = step.rcont[0];
    return DormandPrince45<Scalar, N>::attempt(rhs_, step.t0, y0, rhs_(step.t0, y0), h, opts_.tol).y1;
  }

 private:
  Scalar initial_step(Scalar span) const {
    using std::abs;
    if (opts_.initial_step > 0) return Scalar(opts_.initial_step);
    const double d0 = double(y_.template lpNorm<Eigen::Infinity>());
    const double d1 = double(k1_.template lpNorm<Eigen::Infinity>());
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-3 : 0.01 * d0 / d1;
    h = std::min(h, 0.1);
    return Scalar(std::min(h, double(span)));
  }

  Rhs rhs_;
  IntegratorOptions opts_;
  Scalar t_{};
  Vec y_;
  Vec k1_;
  Scalar h_{};
  DenseStep<Scalar, N> last_{};
  long accepted_ = 0;
  long attempts_ = 0;
};

/// Integrates from t0 to t1 and returns the dense solution. Integration is
/// stopped exactly at each breakpoint strictly between t0 and t1.
template <typename Scalar, int N, typename Rhs>
DenseSolution<Scalar, N> integrate(Rhs rhs, Scalar t0, const State<Scalar, N>& y0, Scalar t1,
                                   const IntegratorOptions& opts,
                                   const std::vector<Scalar>& breakpoints = {}) {
  std::vector<Scalar> stops;
  for (Scalar b : breakpoints)
    if ((b - t0) * (t1 - b) > 0) stops.push_back(b);
  std::sort(stops.begin(), stops.end());
  if (t1 < t0) std::reverse(stops.begin(), stops.end());
  stops.push_back(t1);

  DenseSolution<Scalar, N> sol;
  AdaptiveIntegrator<Scalar, N, Rhs> integ(std::move(rhs), t0, y0, opts);
  for (Scalar target : stops) {
    // Restart at breakpoints so that k1 sees the curvature on the new side.
    integ.reset(integ.time(), integ.state());
    while (integ.time() != target) {
      integ.step_towards(target);
      sol.push(integ.last_step());
    }
  }
  return sol;
}

}  // namespace anosovlab::ode
