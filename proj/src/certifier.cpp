#include "anosovlab/certifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "anosovlab/bubble_profiles.hpp"
#include "anosovlab/errors.hpp"
#include "anosovlab/parallel.hpp"
#include "anosovlab/rng.hpp"
#include "anosovlab/serialize.hpp"

namespace anosovlab::certifier {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

Complex uniform_point(const surface::BubbledSurface& s, Rng& rng) {
  const auto& D = s.domain();
  const double cosh_r = std::cosh(D.circumradius());
  while (true) {
    const double r = std::acosh(1 + rng.uniform() * (cosh_r - 1));
    const Complex z = std::polar(hyperbolic::distance_to_radius(r), rng.uniform(0, 2 * kPi));
    if (D.contains(z)) return z;
  }
}

}  // namespace

const char* stratum_name(Stratum s) {
  switch (s) {
    case Stratum::Aimed: return "aimed";
    case Stratum::Grazing: return "grazing";
    case Stratum::Uniform: return "uniform";
    case Stratum::Given: return "given";
  }
  return "?";
}

CurveVerdict certify_curvature(const CurvatureFunction& K, double floor, const CertifyOptions& opts) {
  const auto pair = riccati::compute_stable_unstable(K, opts.window, opts.horizon_T, opts.su);
  CurveVerdict v;
  v.cauchy_gap = pair.cauchy_gap;
  if (pair.blowup_in_window) {
    v.min_Uu = -kInf;
    v.max_Us = kInf;
    v.separation = -kInf;
  } else {
    v.min_Uu = pair.min_Uu();
    v.max_Us = pair.max_Us();
    v.separation = pair.separation();
  }
  std::tie(v.k_min, v.k_max) = K.sampled_bounds(opts.window);
  v.converged = !pair.blowup_in_window && pair.cauchy_gap <= opts.su.convergence_tol;
  v.signs_ok = v.min_Uu >= -opts.sign_tol && v.max_Us <= opts.sign_tol;
  v.separation_ok = v.separation >= 2 * floor - opts.slack;
  return v;
}

namespace {

GeodesicCertificate run_geodesic(const surface::Metric& metric, Complex z0, double theta0, double epsilon,
                                 double mu, const CertifyOptions& opts, bool thm1) {
  GeodesicCertificate c;
  c.rho = metric.rho();
  c.z0 = z0;
  c.theta0 = theta0;
  c.window = opts.window;
  c.floor_thm1 = bubbles::floor_theorem1(epsilon);
  c.floor_thm3 = bubbles::floor_theorem3(epsilon, mu);
  const auto init = surface::unit_state(metric, z0, theta0);
  const auto traj = surface::geodesic_flow(metric, init, opts.window.lo - opts.horizon_T,
                                           opts.window.hi + opts.horizon_T, opts.flow);
  auto along = surface::curvature_along(metric, traj);
  const CurveVerdict v = certify_curvature(along.K, thm1 ? c.floor_thm1 : c.floor_thm3, opts);
  c.visits = std::move(along.visits);
  c.min_Uu = v.min_Uu;
  c.max_Us = v.max_Us;
  c.separation = v.separation;
  c.cauchy_gap = v.cauchy_gap;
  c.k_min = v.k_min;
  c.k_max = v.k_max;
  c.pass = v.pass();
  if (!v.converged) c.failure = detail::concat("not converged (cauchy gap ", v.cauchy_gap, ")");
  else if (!v.signs_ok) c.failure = detail::concat("sign check (min Uu ", v.min_Uu, ", max Us ", v.max_Us, ")");
  else if (!v.separation_ok) c.failure = detail::concat("separation ", v.separation);
  return c;
}

}  // namespace

GeodesicCertificate certify_geodesic(const surface::Metric& metric, Complex z0, double theta0,
                                     double epsilon, double mu, const CertifyOptions& opts,
                                     bool use_theorem1_floor) {
  GeodesicCertificate c = run_geodesic(metric, z0, theta0, epsilon, mu, opts, use_theorem1_floor);
  if (!c.pass && opts.oracle_rerun) {
    CertifyOptions fine = opts;
    fine.horizon_T = 2 * opts.horizon_T;
    fine.flow.tol.rel /= 32;
    fine.flow.tol.abs /= 32;
    fine.su.tol.rel /= 32;
    fine.su.tol.abs /= 32;
    fine.oracle_rerun = false;
    const GeodesicCertificate o = run_geodesic(metric, z0, theta0, epsilon, mu, fine, use_theorem1_floor);
    c.oracle_confirmed = !o.pass;
  }
  return c;
}

GeodesicRiccati riccati_along(const surface::Metric& metric, Complex z0, double theta0, const CertifyOptions& opts) {
  const auto traj = surface::geodesic_flow(metric, surface::unit_state(metric, z0, theta0),
                                           opts.window.lo - opts.horizon_T, opts.window.hi + opts.horizon_T, opts.flow);
  const auto along = surface::curvature_along(metric, traj);
  const auto pair = riccati::compute_stable_unstable(along.K, opts.window, opts.horizon_T, opts.su);
  GeodesicRiccati out;
  out.t = pair.grid;
  out.Uu = pair.Uu;
  out.Us = pair.Us;
  for (double t : out.t) out.K.push_back(along.K(t));
  return out;
}

// ---------------------------------------------------------------- growth

GrowthSegment growth_on_segment(const CurvatureFunction& K, double start, double length, double epsilon,
                                double mu, ode::Tolerance tol) {
  const double lambda = bubbles::lambda_of_epsilon(epsilon);
  if (length < lambda) throw DomainError("growth segment shorter than Lambda(epsilon)");
  GrowthSegment s;
  s.start = start;
  s.length = length;
  s.U_lambda = bubbles::riccati_across(K, {start, start + lambda}, 0, 1e-2, tol).U_end;
  s.U_end = length > lambda ? bubbles::riccati_across(K, {start, start + length}, 0, 1e-2, tol).U_end : s.U_lambda;
  s.margin_half = s.U_lambda - bubbles::growth_floor_half(epsilon, mu);
  s.margin_third = s.U_lambda - bubbles::growth_floor_third(epsilon, mu);
  return s;
}

GrowthReport growth_lemma_check(const surface::Metric& metric, double epsilon, double mu, int n_geodesics,
                                std::uint64_t seed, double length, const surface::FlowOptions& flow) {
  GrowthReport rep;
  rep.epsilon = epsilon;
  rep.mu = mu;
  rep.rho = metric.rho();
  rep.lambda = bubbles::lambda_of_epsilon(epsilon);
  rep.floor_half = bubbles::growth_floor_half(epsilon, mu);
  rep.floor_third = bubbles::growth_floor_third(epsilon, mu);
  rep.min_margin_half = rep.min_margin_third = kInf;
  std::vector<std::vector<GrowthSegment>> per(static_cast<std::size_t>(n_geodesics));
  parallel_for(per.size(), [&](std::size_t i) {
    for (int attempt = 0;; ++attempt) {
      Rng rng(Rng::derive(seed, i + std::uint64_t(attempt) * std::uint64_t(n_geodesics)));
      const Complex z = uniform_point(metric.surface(), rng);
      const double theta = rng.uniform(0, 2 * kPi);
      try {
        const auto traj = surface::geodesic_flow(metric, surface::unit_state(metric, z, theta), length, flow);
        const auto along = surface::curvature_along(metric, traj);
        std::vector<double> cuts{0};
        for (const auto& v : along.visits) {
          cuts.push_back(v.interval.lo);
          cuts.push_back(v.interval.hi);
        }
        cuts.push_back(length);
        for (std::size_t k = 0; k + 1 < cuts.size(); k += 2) {
          const double a = cuts[k], b = cuts[k + 1];
          if (b - a >= rep.lambda) per[i].push_back(growth_on_segment(along.K, a, b - a, epsilon, mu));
        }
        return;
      } catch (const CornerHit&) {
        if (attempt == 8) throw;
      }
    }
  });
  rep.geodesics = n_geodesics;
  for (auto& v : per)
    for (auto& s : v) {
      rep.min_margin_half = std::min(rep.min_margin_half, s.margin_half);
      rep.min_margin_third = std::min(rep.min_margin_third, s.margin_third);
      rep.segments.push_back(s);
    }
  for (const auto& s : rep.segments)
    if (!(s.margin_third > 0)) throw GrowthViolated(s.start, s.U_lambda, rep.floor_third);
  return rep;
}

// ---------------------------------------------------------------- theorem 3

std::vector<Start> stratified_starts(const surface::BubbledSurface& surface, const Theorem3Params& p) {
  const auto& bumps = surface.bumps();
  const int k = int(bumps.size());
  const int n_aimed = k ? int(std::lround(p.n_geodesics * p.aimed_fraction)) : 0;
  const int n_grazing = k ? int(std::lround(p.n_geodesics * p.grazing_fraction)) : 0;
  std::vector<Start> out;
  for (int i = 0; i < p.n_geodesics; ++i) {
    const std::uint64_t s = Rng::derive(p.seed, std::uint64_t(i));
    Rng rng(s);
    Start st{s, Stratum::Uniform, 0, 0};
    if (i < n_aimed) {
      st.stratum = Stratum::Aimed;
      st.z = bumps[i % k].center;
      st.theta = rng.uniform(0, 2 * kPi);
    } else if (i < n_aimed + n_grazing) {
      // Tangent to the hyperbolic circle of radius b around the centre,
      // b within 10% of the support radius.
      const auto& b = bumps[i % k];
      const double r = b.delta * rng.uniform(0.9, 1.1), alpha = rng.uniform(0, 2 * kPi);
      const surface::Mobius back = surface::Mobius::to_origin(b.center).inverse();
      const Complex q = std::polar(std::tanh(0.5 * r), alpha);
      st.stratum = Stratum::Grazing;
      st.z = back(q);
      st.theta = alpha + std::arg(back.derivative(q)) + (rng.uniform() < 0.5 ? 0.5 : -0.5) * kPi;
    } else {
      st.z = uniform_point(surface, rng);
      st.theta = rng.uniform(0, 2 * kPi);
    }
    out.push_back(st);
  }
  return out;
}

FamilyCalibration calibrate_for_deformed_family(const surface::BubbledSurface& base, double epsilon,
                                                double fraction, const deformation::MeshOptions& mesh,
                                                int max_rounds) {
  if (base.bumps().empty()) return {base, 0, 0, 0};
  FamilyCalibration out{base, 0, 0, 0};
  double mu = 0;
  for (int round = 1; round <= max_rounds; ++round) {
    // delta_g depends on the amplitude; bound from the uncalibrated radius first.
    const double delta_g = round == 1 ? [&] {
      double d = 0;
      for (const auto& b : base.bumps()) d = std::max(d, b.delta);
      return d;
    }() : out.surface.max_bubble_radius();
    out.target = fraction * bubbles::kplus_bound_theorem3(epsilon, delta_g, mu);
    out.surface = surface::calibrate_amplitudes(base, out.target);
    out.mu_used = mu;
    out.rounds = round;
    const double next = deformation::build_path(out.surface, mesh, epsilon, {0.0}).mu();
    const double bound = bubbles::kplus_bound_theorem3(epsilon, out.surface.max_bubble_radius(), next);
    if (next <= mu && out.surface.max_curvature() <= fraction * bound) return out;
    mu = std::max(mu, next);
  }
  throw DomainError("calibration to the deformed-family bound did not settle");
}

std::string replay_bundle(const surface::BubbledSurface& surface, const GeodesicCertificate& c, double epsilon,
                          double mu) {
  serialize::ordered_json j;
  j["surface"] = serialize::surface_to_json(surface);
  j["epsilon"] = epsilon;
  j["mu"] = mu;
  j["rho"] = c.rho;
  j["seed"] = c.seed;
  j["stratum"] = stratum_name(c.stratum);
  j["z0"] = {c.z0.real(), c.z0.imag()};
  j["theta0"] = c.theta0;
  j["window"] = {c.window.lo, c.window.hi};
  j["failure"] = c.failure;
  return serialize::dump(j);
}

AnosovCertificate certify_theorem3(const surface::BubbledSurface& surface, const deformation::DeformationPath& path,
                                   const Theorem3Params& p) {
  AnosovCertificate cert;
  cert.epsilon = path.epsilon;
  cert.mu = path.mu();
  cert.k = int(surface.bumps().size());
  cert.lambda = bubbles::lambda_of_epsilon(cert.epsilon);
  for (const auto& b : surface.bumps()) cert.delta = std::max(cert.delta, b.delta);
  cert.floor_thm1 = bubbles::floor_theorem1(cert.epsilon);
  cert.floor_thm3 = bubbles::floor_theorem3(cert.epsilon, cert.mu);
  cert.separation_required = 2 * cert.floor_thm3 - p.cert.slack;
  cert.sign_tol = p.cert.sign_tol;
  cert.slack = p.cert.slack;
  cert.convergence_tol = p.cert.su.convergence_tol;
  cert.horizon_T = p.cert.horizon_T;
  cert.window = p.cert.window;
  cert.seed = p.seed;
  cert.kplus = surface.max_curvature();
  if (cert.k > 0) {
    cert.delta_g = surface.max_bubble_radius();
    cert.kplus_bound = bubbles::kplus_bound_theorem3(cert.epsilon, cert.delta_g, cert.mu);
    cert.hypothesis_holds = cert.kplus < cert.kplus_bound;
    if (!cert.hypothesis_holds && p.enforce_hypothesis)
      throw HypothesisViolated(detail::concat("measured K+ ", cert.kplus, " not below the bound ", cert.kplus_bound,
                                              " at delta_g=", cert.delta_g, ", mu=", cert.mu),
                               cert.kplus - cert.kplus_bound);
  }

  const auto field = std::make_shared<const deformation::MeshField>(surface, path.mesh, path.poisson.w);
  const auto starts = stratified_starts(surface, p);
  for (double rho : path.rho_grid) {
    const surface::Metric metric = deformation::deformed_metric(surface, path, field, rho);
    RhoVerdict r;
    r.rho = rho;
    r.geodesics = int(starts.size());
    r.certificates.resize(starts.size());
    std::vector<int> resamples(starts.size(), 0);
    parallel_for(starts.size(), [&](std::size_t i) {
      double theta = starts[i].theta;
      for (int attempt = 0;; ++attempt) {
        try {
          auto c = certify_geodesic(metric, starts[i].z, theta, cert.epsilon, cert.mu, p.cert);
          c.seed = starts[i].seed;
          c.stratum = starts[i].stratum;
          r.certificates[i] = std::move(c);
          return;
        } catch (const CornerHit&) {
          if (attempt == 8) throw;
          ++resamples[i];
          theta += 1e-3 * (attempt + 1);
        }
      }
    });
    r.min_Uu = r.min_separation = r.min_margin = kInf;
    r.max_Us = r.max_cauchy_gap = r.k_max_along = -kInf;
    for (std::size_t i = 0; i < starts.size(); ++i) {
      const auto& c = r.certificates[i];
      r.corner_resamples += resamples[i];
      r.min_Uu = std::min(r.min_Uu, c.min_Uu);
      r.max_Us = std::max(r.max_Us, c.max_Us);
      r.min_separation = std::min(r.min_separation, c.separation);
      r.max_cauchy_gap = std::max(r.max_cauchy_gap, c.cauchy_gap);
      r.k_max_along = std::max(r.k_max_along, c.k_max);
      const double margin = c.separation - cert.separation_required;
      // Worst: the failing certificate with the smallest margin, else the smallest margin.
      const bool better = r.failures == 0 ? (!c.pass || margin < r.min_margin)
                                          : (!c.pass && margin < r.certificates[r.worst].separation - cert.separation_required);
      if (better) r.worst = i;
      r.min_margin = std::min(r.min_margin, margin);
      if (!c.pass) {
        ++r.failures;
        r.oracle_confirmed += c.oracle_confirmed;
      }
    }
    r.pass = r.failures == 0;
    cert.pass &= r.pass;
    cert.per_rho.push_back(std::move(r));
  }
  if (!cert.pass && p.throw_on_failure) {
    for (const auto& r : cert.per_rho)
      if (!r.pass) {
        const auto& c = r.certificates[r.worst];
        throw CertificateFailed(detail::concat("geodesic seed ", c.seed, " at rho=", r.rho, " failed: ", c.failure),
                                replay_bundle(surface, c, cert.epsilon, cert.mu));
      }
  }
  return cert;
}

}  // namespace anosovlab::certifier
