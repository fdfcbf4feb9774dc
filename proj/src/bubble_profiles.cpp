#include "anosovlab/bubble_profiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "anosovlab/errors.hpp"
#include "anosovlab/parallel.hpp"
#include "anosovlab/rng.hpp"

namespace anosovlab::bubbles {

namespace {
const double kLn3 = std::log(3.0);
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

void FamilyParams::validate() const {
  if (!(epsilon > 0 && epsilon < 1)) throw DomainError(detail::concat("epsilon must lie in (0,1), got ", epsilon));
  if (!(delta > 0)) throw DomainError(detail::concat("delta must be positive, got ", delta));
  if (k < 0) throw DomainError(detail::concat("bubble count must be nonnegative, got ", k));
  if (!(mu >= 0)) throw DomainError(detail::concat("mu must be nonnegative, got ", mu));
  if (!(lambda_gap >= lambda_of_epsilon(epsilon)))
    throw DomainError(detail::concat("lambda_gap ", lambda_gap, " below Lambda(epsilon) = ",
                                     lambda_of_epsilon(epsilon)));
  if (!std::isfinite(kplus)) throw DomainError("kplus must be finite");
}

double lambda_of_epsilon(double epsilon) {
  if (!(epsilon > 0 && epsilon <= 1))
    throw DomainError(detail::concat("lambda_of_epsilon: epsilon must lie in (0,1], got ", epsilon));
  return std::atanh(1 - epsilon / 2) / std::sqrt(epsilon);
}

double kplus_bound_theorem1(double epsilon, double delta) {
  const double q = 1 - epsilon / 2;
  return (std::sqrt(epsilon) * q - epsilon * (2 * delta + 1) * q * q) / (2 * delta);
}

double kplus_bound_theorem3(double epsilon, double delta, double mu) {
  const double em = std::exp(-mu);
  const double th = std::tanh(em * kLn3 / 3);
  const double se = std::sqrt(epsilon);
  return se / (4 * std::exp(2 * mu) * delta) * (th - se * em * th * th * (4 * std::exp(mu) * delta + 1));
}

double theorem1_delta_threshold(double epsilon) {
  return 0.5 * (1 / (std::sqrt(epsilon) * (1 - epsilon / 2)) - 1);
}

double theorem3_delta_threshold(double epsilon, double mu) {
  const double em = std::exp(-mu);
  const double th = std::tanh(em * kLn3 / 3);
  return em / 4 * (1 / (std::sqrt(epsilon) * em * th) - 1);
}

double exit_threshold(double epsilon) { return std::sqrt(epsilon) * (1 - epsilon / 2); }

double floor_theorem1(double epsilon) {
  const double q = 1 - epsilon / 2;
  return epsilon * q * q;
}

double floor_theorem3(double epsilon, double mu) {
  const double th = std::tanh(std::exp(-mu) * kLn3 / 3);
  return std::exp(-2 * mu) * epsilon * th * th;
}

double growth_floor_half(double epsilon, double mu) {
  const double em = std::exp(-mu);
  return em * std::sqrt(epsilon) * std::tanh(0.5 * em * kLn3);
}

double growth_floor_third(double epsilon, double mu) {
  const double em = std::exp(-mu);
  return em * std::sqrt(epsilon) * std::tanh(em * kLn3 / 3);
}

double BubbleProfile::jitter_at(double t) const {
  double s = 0;
  for (const auto& j : jitter) s += j.weight * 0.5 * (1 + std::sin(j.omega * t + j.phase));
  return shape.jitter_amplitude * s;
}

namespace {

// C^2 taper from 0 to 1 on [0, 1] with vanishing first and second derivatives at both ends.
double taper(double x) { return x - std::sin(2 * M_PI * x) / (2 * M_PI); }

struct ProfileEvaluator {
  std::vector<Interval> intervals;
  std::vector<JitterTerm> jitter;
  double epsilon, kplus, amplitude, edge_fraction;

  double base(double t) const {
    double s = 0;
    for (const auto& j : jitter) s += j.weight * 0.5 * (1 + std::sin(j.omega * t + j.phase));
    return -epsilon * (1 + amplitude * s);
  }

  double operator()(double t) const {
    auto it = std::upper_bound(intervals.begin(), intervals.end(), t,
                               [](double x, const Interval& iv) { return x < iv.lo; });
    const double b = base(t);
    if (it == intervals.begin()) return b;
    const Interval& iv = *(it - 1);
    if (t >= iv.hi) return b;
    const double len = iv.length();
    const double edge = edge_fraction * len;
    const double c = iv.lo + 0.5 * len;
    const double plateau = 0.5 * std::max(0.0, len - 2 * edge);
    const double d = std::abs(t - c);
    if (d <= plateau) return kplus;
    const double x = std::clamp((0.5 * len - d) / (0.5 * len - plateau), 0.0, 1.0);
    return b + (kplus - b) * taper(x);
  }
};

}  // namespace

BubbleProfile make_profile(const FamilyParams& params, const std::vector<double>& layout,
                           std::uint64_t seed, ProfileShape shape) {
  params.validate();
  if (int(layout.size()) != params.k)
    throw LayoutError(detail::concat("layout has ", layout.size(), " intervals, expected k = ", params.k));
  if (!(shape.jitter_amplitude >= 0 && shape.jitter_amplitude <= 0.5))
    throw DomainError("jitter amplitude must lie in [0, 0.5]");
  if (!(shape.edge_fraction > 0 && shape.edge_fraction <= 0.5))
    throw DomainError("edge fraction must lie in (0, 0.5]");
  BubbleProfile p;
  p.params = params;
  p.seed = seed;
  p.shape = shape;
  for (std::size_t m = 0; m < layout.size(); ++m) {
    const Interval iv{layout[m], layout[m] + 2 * params.delta};
    if (m > 0) {
      const double gap = iv.lo - p.intervals.back().hi;
      if (gap < 0) throw LayoutError(detail::concat("intervals ", m - 1, " and ", m, " overlap"));
      if (gap < params.lambda_gap - 1e-12)
        throw LayoutError(detail::concat("gap ", gap, " between intervals ", m - 1, " and ", m,
                                         " is below lambda_gap ", params.lambda_gap));
    }
    p.intervals.push_back(iv);
  }

  Rng rng(seed);
  double total = 0;
  for (int j = 0; j < 3; ++j) {
    JitterTerm term{rng.uniform(0.2, 1.0), rng.uniform(0.5, 3.0), rng.uniform(0, 2 * M_PI)};
    total += term.weight;
    p.jitter.push_back(term);
  }
  for (auto& term : p.jitter) term.weight /= total;

  std::vector<double> breaks;
  for (const auto& iv : p.intervals) {
    const double edge = shape.edge_fraction * iv.length();
    breaks.insert(breaks.end(), {iv.lo, iv.lo + edge, iv.hi - edge, iv.hi});
  }
  p.curvature = CurvatureFunction(
      ProfileEvaluator{p.intervals, p.jitter, params.epsilon, params.kplus, shape.jitter_amplitude,
                       shape.edge_fraction},
      CurvatureFunction::unbounded(), riccati::Smoothness::C2, breaks);
  return p;
}

std::string BubbleProfile::admissibility_error() const {
  for (std::size_t m = 0; m < intervals.size(); ++m) {
    if (intervals[m].length() > 2 * params.delta + 1e-12) return detail::concat("interval ", m, " longer than 2 delta");
    if (m > 0 && intervals[m].lo - intervals[m - 1].hi < params.lambda_gap - 1e-12)
      return detail::concat("gap before interval ", m, " below lambda_gap");
  }
  const double lo = intervals.empty() ? -10 : intervals.front().lo - 10;
  const double hi = intervals.empty() ? 10 : intervals.back().hi + 10;
  const int n = 20001;
  for (int i = 0; i < n; ++i) {
    const double t = lo + (hi - lo) * i / (n - 1);
    const double k = K(t);
    bool inside = false;
    for (const auto& iv : intervals) inside |= (t > iv.lo && t < iv.hi);
    if (inside && k > params.kplus + 1e-12) return detail::concat("K exceeds kplus at t=", t);
    if (!inside && k > -params.epsilon) return detail::concat("K above -epsilon outside bubbles at t=", t);
  }
  return {};
}

std::string BubbleProfile::serialize() const {
  nlohmann::ordered_json j;
  j["params"] = {{"epsilon", params.epsilon}, {"delta", params.delta},   {"k", params.k},
                 {"lambda_gap", params.lambda_gap}, {"kplus", params.kplus}, {"mu", params.mu}};
  j["intervals"] = nlohmann::json::array();
  for (const auto& iv : intervals) j["intervals"].push_back({iv.lo, iv.hi});
  j["seed"] = seed;
  j["shape"] = {{"jitter_amplitude", shape.jitter_amplitude}, {"edge_fraction", shape.edge_fraction}};
  return j.dump(2);
}

std::vector<double> random_layout(const FamilyParams& params, std::uint64_t seed, double spread) {
  Rng rng(Rng::derive(seed, 0xA11));
  std::vector<double> starts;
  double s = 0;
  for (int m = 0; m < params.k; ++m) {
    starts.push_back(s);
    s += 2 * params.delta + params.lambda_gap + spread * rng.uniform();
  }
  return starts;
}

BubbleProfile profile_for_seed(const FamilyParams& params, std::uint64_t base_seed, int index,
                               ProfileShape shape) {
  const std::uint64_t s = Rng::derive(base_seed, std::uint64_t(index));
  return make_profile(params, random_layout(params, s), s, shape);
}

SegmentResult riccati_across(const CurvatureFunction& K, Interval span, double U0, double sample_spacing,
                             ode::Tolerance tol) {
  const auto traj = riccati::riccati_from_jacobi(riccati::integrate_jacobi(K, {span.lo, 1.0, U0}, span.hi, tol));
  SegmentResult r;
  r.blowup = !traj.blowups.empty();
  r.U_end = traj.samples.back().U;
  r.U_min = kInf;
  const double h = std::min(sample_spacing, span.length() / 200);
  if (r.blowup) {
    r.U_min = -kInf;
    r.t_min = traj.blowups.front().t;
    return r;
  }
  const int n = int(std::ceil(span.length() / h)) + 1;
  for (int i = 0; i < n; ++i) {
    const double t = span.lo + span.length() * i / (n - 1);
    const double u = traj.U(t);
    if (u < r.U_min) {
      r.U_min = u;
      r.t_min = t;
    }
  }
  for (const auto& s : traj.samples)
    if (s.U < r.U_min) {
      r.U_min = s.U;
      r.t_min = s.t;
    }
  return r;
}

ExitBoundReport verify_exit_bound(const BubbleProfile& profile, const std::vector<double>& exit_values) {
  const double eps = profile.params.epsilon;
  if (!(profile.params.lambda_gap >= lambda_of_epsilon(eps)))
    throw DomainError("verify_exit_bound: gaps shorter than Lambda(epsilon)");
  ExitBoundReport rep;
  rep.threshold = exit_threshold(eps);
  rep.min_margin = kInf;
  for (std::size_t m = 0; m + 1 < profile.intervals.size(); ++m) {
    const Interval gap{profile.intervals[m].hi, profile.intervals[m + 1].lo};
    for (double u : exit_values) {
      const auto seg = riccati_across(profile.curvature, gap, u);
      ExitCase c{m, u, seg.U_end, seg.U_min, seg.U_end - rep.threshold};
      if (seg.blowup || !(seg.U_min > 0) || !(c.margin > 0))
        throw BoundViolated(m, u, seg.blowup ? -kInf : seg.U_end, rep.threshold);
      rep.min_margin = std::min(rep.min_margin, c.margin);
      rep.cases.push_back(c);
    }
  }
  return rep;
}

std::vector<double> default_entry_values(double epsilon) {
  const double thr = exit_threshold(epsilon);
  return {thr, 1.25 * thr, std::sqrt(epsilon), 2 * std::sqrt(epsilon)};
}

namespace {

struct CrossingDetail {
  CrossingCase c;
  double floor_t = 0;       // time of the worst floor margin
  double analytic_at_t = 0;  // analytic floor at that time
};

CrossingDetail cross_one(const BubbleProfile& profile, std::size_t m, double entry) {
  const double eps = profile.params.epsilon;
  const double thr = exit_threshold(eps);
  const double floor = floor_theorem1(eps);
  const double slope = floor + profile.params.kplus;
  const Interval iv = profile.intervals[m];
  const auto traj =
      riccati::riccati_from_jacobi(riccati::integrate_jacobi(profile.curvature, {iv.lo, 1.0, entry}, iv.hi));

  CrossingDetail d{{m, entry, kInf, iv.lo, kInf, kInf}};
  if (!traj.blowups.empty()) {
    d.c.U_min = -kInf;
    d.c.t_min = traj.blowups.front().t;
    d.c.floor_margin = -kInf;
    d.c.analytic_margin = -kInf;
    d.floor_t = d.c.t_min;
    return d;
  }
  const int n = 2001;
  // Once U drops to the threshold at c, U(t) >= U(c) - (thr^2 + K+)(t - c).
  double c_time = std::numeric_limits<double>::quiet_NaN(), c_value = thr;
  for (int i = 0; i < n; ++i) {
    const double t = iv.lo + iv.length() * i / (n - 1);
    const double u = traj.U(t);
    if (std::isnan(c_time) && u <= thr) {
      c_time = t;
      c_value = u;
    }
    const double analytic = std::isnan(c_time) ? thr : c_value - slope * (t - c_time);
    if (u < d.c.U_min) {
      d.c.U_min = u;
      d.c.t_min = t;
      d.floor_t = t;
      d.analytic_at_t = analytic;
    }
    d.c.analytic_margin = std::min(d.c.analytic_margin, u - analytic);
  }
  d.c.floor_margin = d.c.U_min - floor;
  return d;
}

}  // namespace

CrossingReport crossing_report(const BubbleProfile& profile, const std::vector<double>& entries) {
  CrossingReport rep;
  rep.floor = floor_theorem1(profile.params.epsilon);
  rep.min_floor_margin = kInf;
  rep.min_analytic_margin = kInf;
  for (std::size_t m = 0; m < profile.intervals.size(); ++m)
    for (double e : entries) {
      const auto d = cross_one(profile, m, e);
      rep.cases.push_back(d.c);
      rep.min_floor_margin = std::min(rep.min_floor_margin, d.c.floor_margin);
      rep.min_analytic_margin = std::min(rep.min_analytic_margin, d.c.analytic_margin);
      rep.violated |= !(d.c.floor_margin > 0) || !(d.c.analytic_margin >= -1e-9);
    }
  return rep;
}

CrossingReport verify_bubble_crossing(const BubbleProfile& profile, const std::vector<double>& entries_in) {
  const auto& p = profile.params;
  if (!(p.kplus < kplus_bound_theorem1(p.epsilon, p.delta)))
    throw DomainError("verify_bubble_crossing: kplus is not below the admissible bound");
  const auto entries = entries_in.empty() ? default_entry_values(p.epsilon) : entries_in;
  const double floor = floor_theorem1(p.epsilon);
  for (std::size_t m = 0; m < profile.intervals.size(); ++m)
    for (double e : entries) {
      const auto d = cross_one(profile, m, e);
      if (!(d.c.floor_margin > 0) || !(d.c.analytic_margin >= -1e-9))
        throw FloorViolated(d.floor_t, d.c.U_min, floor, d.analytic_at_t);
    }
  return crossing_report(profile, entries);
}

AnosovProfileReport certify_theorem1(const FamilyParams& params, int n_profiles, std::uint64_t seed,
                                     const CertifyOptions& opts) {
  params.validate();
  if (!(params.kplus < kplus_bound_theorem1(params.epsilon, params.delta)))
    throw DomainError(detail::concat("certify_theorem1: kplus ", params.kplus, " not below bound ",
                                     kplus_bound_theorem1(params.epsilon, params.delta)));
  AnosovProfileReport rep;
  rep.params = params;
  rep.floor = floor_theorem1(params.epsilon);
  rep.sign_tol = opts.sign_tol;
  rep.slack = opts.slack;
  rep.separation_required = 2 * rep.floor - opts.slack;
  rep.convergence_tol = opts.su.convergence_tol;
  rep.horizon_T = opts.horizon_T;
  rep.profiles.resize(std::size_t(n_profiles));

  std::vector<std::string> replay(rep.profiles.size());
  parallel_for(rep.profiles.size(), [&](std::size_t i) {
    const auto profile = profile_for_seed(params, seed, int(i), opts.shape);
    Interval window{-opts.window_pad, 10.0};
    if (!profile.intervals.empty())
      window = {profile.intervals.front().lo - opts.window_pad, profile.intervals.back().hi + opts.window_pad};
    const auto pair = riccati::compute_stable_unstable(profile.curvature, window, opts.horizon_T, opts.su);
    ProfileCertificate& c = rep.profiles[i];
    c.seed = profile.seed;
    c.window = window;
    c.cauchy_gap = pair.cauchy_gap;
    if (pair.blowup_in_window) {
      c.min_Uu = -kInf;
      c.max_Us = kInf;
      c.separation = -kInf;
    } else {
      c.min_Uu = pair.min_Uu();
      c.max_Us = pair.max_Us();
      c.separation = pair.separation();
    }
    c.pass = c.min_Uu >= -opts.sign_tol && c.max_Us <= opts.sign_tol &&
             c.separation >= rep.separation_required && c.cauchy_gap <= opts.su.convergence_tol;
    replay[i] = profile.serialize();
  });

  rep.min_margin = kInf;
  for (std::size_t i = 0; i < rep.profiles.size(); ++i) {
    const auto& c = rep.profiles[i];
    const double margin = c.separation - rep.separation_required;
    if (margin < rep.min_margin) {
      rep.min_margin = margin;
      rep.worst = i;
    }
    rep.pass &= c.pass;
  }
  if (!rep.pass && opts.throw_on_failure) {
    std::size_t bad = 0;
    while (rep.profiles[bad].pass) ++bad;
    throw CertificateFailed(detail::concat("profile ", bad, " (seed ", rep.profiles[bad].seed,
                                           ") failed the stable/unstable certificate"),
                            replay[bad]);
  }
  return rep;
}

}  // namespace anosovlab::bubbles
