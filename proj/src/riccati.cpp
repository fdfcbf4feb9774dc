#include "anosovlab/riccati.hpp"

#include <algorithm>
#include <cmath>

#include "anosovlab/errors.hpp"

namespace anosovlab::riccati {

CurvatureFunction::CurvatureFunction(Evaluator eval, Interval domain, Smoothness smoothness,
                                     std::vector<double> breakpoints)
    : eval_(std::move(eval)),
      domain_(domain),
      smoothness_(smoothness),
      breakpoints_(std::move(breakpoints)) {
  std::sort(breakpoints_.begin(), breakpoints_.end());
}

CurvatureFunction CurvatureFunction::constant(double k) {
  return CurvatureFunction([k](double) { return k; }, unbounded(), Smoothness::Analytic);
}

double CurvatureFunction::operator()(double t) const {
  if (!(t >= domain_.lo && t <= domain_.hi)) throw DomainExceeded(t, domain_.lo, domain_.hi);
  return eval_(t);
}

std::pair<double, double> CurvatureFunction::sampled_bounds(Interval window, int n) const {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < n; ++i) {
    const double t = window.lo + window.length() * i / (n - 1);
    const double k = (*this)(t);
    lo = std::min(lo, k);
    hi = std::max(hi, k);
  }
  return {lo, hi};
}

namespace {

struct JacobiRhs {
  const CurvatureFunction* K;
  JacobiVec operator()(double t, const JacobiVec& y) const {
    return JacobiVec(y[1], -(*K)(t) * y[0]);
  }
};

}  // namespace

JacobiState JacobiSolution::restep(std::size_t k, double t) const {
  const auto& step = dense.steps()[k];
  const double h = t - step.t0;
  if (h == 0) return {t, step.rcont[0][0], step.rcont[0][1]};
  const JacobiRhs rhs{&curvature};
  const JacobiVec& y0 = step.rcont[0];
  const auto att = ode::DormandPrince45<double, 2>::attempt(rhs, step.t0, y0, rhs(step.t0, y0), h, tol);
  return {t, att.y1[0], att.y1[1]};
}

JacobiState JacobiSolution::at(double t) const {
  const std::size_t k = dense.locate(t);
  const auto& step = dense.steps()[k];
  if (t == step.t1()) return states[k + 1];
  return restep(k, t);
}

std::shared_ptr<const JacobiSolution> integrate_jacobi(const CurvatureFunction& K,
                                                       const JacobiState& init, double t_end,
                                                       ode::Tolerance tol) {
  if (t_end == init.t) throw DomainError("integrate_jacobi: t_end equals the initial time");
  const double lo = std::min(init.t, t_end), hi = std::max(init.t, t_end);
  if (lo < K.domain().lo) throw DomainExceeded(lo, K.domain().lo, K.domain().hi);
  if (hi > K.domain().hi) throw DomainExceeded(hi, K.domain().lo, K.domain().hi);

  auto sol = std::make_shared<JacobiSolution>(JacobiSolution{{}, {}, K, tol});
  ode::IntegratorOptions opts;
  opts.tol = tol;
  sol->dense = ode::integrate(JacobiRhs{&sol->curvature}, init.t, JacobiVec(init.f, init.fp), t_end,
                              opts, K.breakpoints());
  sol->states.reserve(sol->dense.steps().size() + 1);
  sol->states.push_back(init);
  for (const auto& s : sol->dense.steps()) {
    const JacobiVec y1 = s.eval(s.t1());
    sol->states.push_back({s.t1(), y1[0], y1[1]});
  }
  return sol;
}

double RiccatiTrajectory::U(double t) const {
  const JacobiState s = source->at(t);
  return s.fp / s.f;
}

RiccatiTrajectory riccati_from_jacobi(std::shared_ptr<const JacobiSolution> solution,
                                      double locate_tol) {
  RiccatiTrajectory traj;
  traj.tol = solution->tol;
  const auto& st = solution->states;
  traj.samples.reserve(st.size());
  for (const auto& s : st)
    if (s.f != 0) traj.samples.push_back({s.t, s.fp / s.f});

  const bool fwd = solution->dense.forward();
  if (st.front().f == 0) traj.blowups.push_back({st.front().t, 0});
  for (std::size_t k = 0; k + 1 < st.size(); ++k) {
    const JacobiState& a = st[k];
    const JacobiState& b = st[k + 1];
    const int sign = (a.f * a.fp > 0) ? 1 : -1;
    if (b.f == 0) {
      traj.blowups.push_back({b.t, sign});
      continue;
    }
    if (a.f == 0 || (a.f > 0) == (b.f > 0)) continue;
    double ta = a.t, tb = b.t;
    const double fa = a.f;
    while (std::abs(tb - ta) > locate_tol) {
      const double tm = 0.5 * (ta + tb);
      if (tm == ta || tm == tb) break;
      const double fm = solution->restep(k, tm).f;
      if (fm == 0) {
        ta = tb = tm;
        break;
      }
      if ((fm > 0) == (fa > 0))
        ta = tm;
      else
        tb = tm;
    }
    traj.blowups.push_back({0.5 * (ta + tb), sign});
  }
  if (!fwd) {
    std::reverse(traj.samples.begin(), traj.samples.end());
    std::reverse(traj.blowups.begin(), traj.blowups.end());
  }
  traj.source = std::move(solution);
  return traj;
}

double constant_curvature_riccati(double epsilon, double U0, double t) {
  if (!(epsilon > 0)) throw DomainError("constant_curvature_riccati: epsilon must be positive");
  const double s = std::sqrt(epsilon);
  const double r = U0 / s;
  if (r == 1.0 || r == -1.0) return U0;
  if (std::abs(r) < 1) return s * std::tanh(s * t + std::atanh(r));
  const double c = std::atanh(1.0 / r);  // arcoth(r)
  const double pole = -c / s;
  if (pole >= std::min(0.0, t) && pole <= std::max(0.0, t)) throw PoleAt(pole);
  return s / std::tanh(s * t + c);
}

ComparisonReport comparison_check(const CurvatureFunction& K1, const CurvatureFunction& K2,
                                  double U0, Interval window, double tol, ode::Tolerance ode_tol) {
  constexpr int kPreSamples = 2001;
  for (int i = 0; i < kPreSamples; ++i) {
    const double t = window.lo + window.length() * i / (kPreSamples - 1);
    if (K1(t) > K2(t) + 1e-14)
      throw DomainError(detail::concat("comparison_check: K1 > K2 at t=", t));
  }
  const JacobiState init{window.lo, 1.0, U0};
  const auto r1 = riccati_from_jacobi(integrate_jacobi(K1, init, window.hi, ode_tol));
  const auto r2 = riccati_from_jacobi(integrate_jacobi(K2, init, window.hi, ode_tol));

  ComparisonReport rep;
  rep.checked_until = window.hi;
  for (const auto* r : {&r1, &r2})
    if (!r->blowups.empty())
      rep.first_blowup = std::min(rep.first_blowup.value_or(window.hi), r->blowups.front().t);
  if (rep.first_blowup) rep.checked_until = *rep.first_blowup;

  rep.min_gap = std::numeric_limits<double>::infinity();
  constexpr double spacing = 0.005;
  const double stop = rep.checked_until - (rep.first_blowup ? 1e-6 : 0.0);
  const int n = std::max(2, int(std::ceil((stop - window.lo) / spacing)) + 1);
  for (int i = 0; i < n; ++i) {
    const double t = window.lo + (stop - window.lo) * i / (n - 1);
    const double u1 = r1.U(t), u2 = r2.U(t);
    const double gap = u1 - u2;
    ++rep.samples;
    if (gap < rep.min_gap) rep.min_gap = gap;
    if (-gap > rep.max_violation) {
      rep.max_violation = -gap;
      rep.violation_t = t;
    }
    const double scale = std::max({1.0, std::abs(u1), std::abs(u2)});
    if (gap < -tol * scale) throw ComparisonViolated(t, gap);
  }
  return rep;
}

double StableUnstablePair::min_Uu() const { return *std::min_element(Uu.begin(), Uu.end()); }
double StableUnstablePair::max_Us() const { return *std::max_element(Us.begin(), Us.end()); }
double StableUnstablePair::separation() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) m = std::min(m, Uu[i] - Us[i]);
  return m;
}

namespace {

bool blows_up_in(const RiccatiTrajectory& r, Interval w) {
  for (const auto& b : r.blowups)
    if (w.contains(b.t)) return true;
  return false;
}

}  // namespace

StableUnstablePair compute_stable_unstable(const CurvatureFunction& K, Interval window,
                                           double horizon_T, const StableUnstableOptions& opts) {
  StableUnstablePair p;
  p.window = window;
  p.horizon_T = horizon_T;
  const int n = std::max(2, int(std::ceil(window.length() / opts.grid_spacing)) + 1);
  p.grid.resize(n);
  for (int i = 0; i < n; ++i) p.grid[i] = window.lo + window.length() * i / (n - 1);

  auto unstable = [&](double T) {
    return riccati_from_jacobi(integrate_jacobi(K, {window.lo - T, 0.0, 1.0}, window.hi, opts.tol));
  };
  auto stable = [&](double T) {
    return riccati_from_jacobi(integrate_jacobi(K, {window.hi + T, 0.0, -1.0}, window.lo, opts.tol));
  };
  p.u_unstable = unstable(horizon_T);
  p.u_stable = stable(horizon_T);
  const auto uu_half = unstable(horizon_T / 2);
  const auto us_half = stable(horizon_T / 2);

  p.blowup_in_window = blows_up_in(p.u_unstable, window) || blows_up_in(p.u_stable, window) ||
                       blows_up_in(uu_half, window) || blows_up_in(us_half, window);
  p.Uu.resize(n);
  p.Us.resize(n);
  double gap = 0;
  for (int i = 0; i < n; ++i) {
    const double t = p.grid[i];
    p.Uu[i] = p.u_unstable.U(t);
    p.Us[i] = p.u_stable.U(t);
    gap = std::max({gap, std::abs(p.Uu[i] - uu_half.U(t)), std::abs(p.Us[i] - us_half.U(t))});
  }
  p.cauchy_gap = p.blowup_in_window ? std::numeric_limits<double>::infinity() : gap;
  if (!std::isfinite(gap)) p.cauchy_gap = std::numeric_limits<double>::infinity();
  return p;
}

StableUnstablePair stable_unstable_pair(const CurvatureFunction& K, Interval window,
                                        double horizon_T, const StableUnstableOptions& opts) {
  auto p = compute_stable_unstable(K, window, horizon_T, opts);
  if (p.blowup_in_window)
    throw NotConverged(p.cauchy_gap, opts.convergence_tol, "Jacobi field vanishes in the window");
  if (!(p.cauchy_gap <= opts.convergence_tol))
    throw NotConverged(p.cauchy_gap, opts.convergence_tol, "horizon too short");
  return p;
}

double focal_free_radius(double kplus) {
  if (!(kplus > 0)) return std::numeric_limits<double>::infinity();
  return M_PI / (4.0 * std::sqrt(kplus));
}

}  // namespace anosovlab::riccati
