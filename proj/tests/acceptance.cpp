// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "anosovlab/bubble_profiles.hpp"
#include "anosovlab/certifier.hpp"
#include "anosovlab/deformation.hpp"
#include "anosovlab/errors.hpp"
#include "anosovlab/hyperbolic.hpp"
#include "anosovlab/reports.hpp"
#include "anosovlab/riccati.hpp"
#include "anosovlab/serialize.hpp"

using namespace anosovlab;
using surface::BubbledSurface;
using surface::Bump;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool pass = o.pass && in_time;
  failures += pass ? 0 : 1;
  std::printf("%s %d %s: %s; %.1f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
              budget_s, in_time ? "" : ", exceeded");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// ---- shared fixtures

bubbles::FamilyParams profile_params() { return {0.5, 0.1, 3, 1.5, 0.5, 0}; }
constexpr std::uint64_t kProfileSeed = 2024;

struct Flagship {
  BubbledSurface surface;
  deformation::DeformationPath path;
};

Flagship make_flagship() {
  auto cal = certifier::calibrate_for_deformed_family(BubbledSurface({Bump{0, 0.05, 0}}), 0.5, 0.9);
  auto path = deformation::build_path(cal.surface, {}, 0.5);
  return {std::move(cal.surface), std::move(path)};
}

std::string profile_artifacts(const bubbles::AnosovProfileReport& r) {
  return serialize::dump(reports::profile_report(r)) + reports::profile_margins_csv(r);
}

std::string deformation_artifacts(const Flagship& f, const deformation::PathReport& props) {
  return serialize::dump(reports::deformation_report(f.path, props, nullptr, deformation::PoissonOptions{}.tol)) +
         reports::curvature_extrema_csv(f.path) + reports::w_csv(f.path);
}

std::string certificate_artifacts(const certifier::AnosovCertificate& c) {
  return serialize::dump(reports::certificate_report(c)) + reports::certificate_margins_csv(c);
}

certifier::Theorem3Params theorem3_params() {
  certifier::Theorem3Params p;
  p.n_geodesics = 200;
  p.seed = 1;
  return p;
}

}  // namespace

int main() {
  std::string c3_report, c6_report, c7_report;

  criterion(1, "closed-form Riccati for K = -eps", 1, [] {
    double worst = 0;
    for (double eps : {0.25, 1.0}) {
      const auto K = riccati::CurvatureFunction::constant(-eps);
      const auto traj = riccati::riccati_from_jacobi(riccati::integrate_jacobi(K, {0, 1, 0}, 10));
      if (!traj.complete()) return Outcome{false, "unexpected blow-up"};
      for (int i = 0; i <= 10000; ++i) {
        const double t = i * 1e-3;
        worst = std::max(worst, std::abs(traj.U(t) - std::sqrt(eps) * std::tanh(std::sqrt(eps) * t)));
      }
      for (const auto& s : traj.samples)
        worst = std::max(worst, std::abs(s.U - std::sqrt(eps) * std::tanh(std::sqrt(eps) * s.t)));
    }
    return Outcome{worst <= 1e-8, fmt("sup error %.3g (tol 1e-8) on [0,10], eps in {0.25, 1}", worst)};
  });

  criterion(2, "exit value across Lambda(1)", 1, [] {
    const double L = bubbles::lambda_of_epsilon(1);
    const auto seg = bubbles::riccati_across(riccati::CurvatureFunction::constant(-1), {0, L}, 1e-6);
    const double thr = bubbles::exit_threshold(1);
    const bool ok = std::abs(seg.U_end - 0.5) <= 1e-3 && std::abs(thr - 0.5) <= 1e-15 &&
                    std::abs(L - 0.5 * std::log(3.0)) <= 1e-15;
    return Outcome{ok, fmt("Lambda %.15g, U_exit %.12g (target 0.5 +- 1e-3), threshold %.15g", L, seg.U_end, thr)};
  });

  criterion(3, "first-family profile certificates", 60, [&] {
    bubbles::CertifyOptions opts;
    opts.throw_on_failure = false;
    const auto rep = bubbles::certify_theorem1(profile_params(), 100, kProfileSeed, opts);
    c3_report = profile_artifacts(rep);
    double min_uu = INFINITY, max_us = -INFINITY, min_sep = INFINITY;
    for (const auto& c : rep.profiles) {
      min_uu = std::min(min_uu, c.min_Uu);
      max_us = std::max(max_us, c.max_Us);
      min_sep = std::min(min_sep, c.separation);
    }
    const double required = 2 * 0.28125 - 1e-3;
    const bool ok = rep.pass && rep.profiles.size() == 100 && min_uu >= -1e-8 && max_us <= 1e-8 &&
                    min_sep >= required && std::abs(rep.separation_required - required) <= 1e-15;
    return Outcome{ok, fmt("100 profiles, min U^u %.3g, max U^s %.3g, ", min_uu, max_us) +
                           fmt("min separation %.6g (required %.6g)", min_sep, required)};
  });

  criterion(4, "Gauss-Bonnet on a one-bump surface", 30, [] {
    const BubbledSurface s = surface::calibrate_amplitudes(BubbledSurface({Bump{0, 0.05, 0}}),
                                                           0.9 * bubbles::kplus_bound_theorem3(0.5, 0.05, 0));
    const auto base = s.gauss_bonnet();
    const auto fine = s.gauss_bonnet(724, 1448);  // twice the node count
    const double ratio = fine.rel_error / base.rel_error;
    const bool ok = base.rel_error <= 1e-3 && ratio >= 0.4 && ratio <= 0.6;
    return Outcome{ok, fmt("rel error %.4g (tol 1e-3), x2 error %.4g, ratio %.4f (0.5 +- 20%%)", base.rel_error,
                           fine.rel_error, ratio)};
  });

  Flagship flagship;
  criterion(5, "Poisson pipeline", 30, [&] {
    flagship = make_flagship();
    const auto& m = *flagship.path.mesh;
    const surface::Complex c(0.2, -0.1);
    Eigen::VectorXd w0(m.n_vertices);
    for (int v = 0; v < m.n_vertices; ++v) {
      const double s = std::min(1.0, hyperbolic::distance(m.position[v], c));
      w0[v] = std::pow(1 - s * s, 4);
    }
    const Eigen::VectorXd h = (-(m.laplacian * w0)).cwiseQuotient(m.mass);
    const auto r = deformation::solve_poisson(m, h);
    const Eigen::VectorXd expect = w0.array() - w0.minCoeff();
    const double rel = (r.w - expect).cwiseAbs().maxCoeff() / expect.cwiseAbs().maxCoeff();
    double stall = 0;
    bool stalled = false;
    try {
      deformation::solve_poisson(m, flagship.path.h.h.array() + 0.01);
    } catch (const NoConvergence& e) {
      stalled = true;
      stall = e.residual;
    }
    const bool ok = rel <= 1e-6 && stalled && stall > 1e-3;
    return Outcome{ok, fmt("manufactured rel error %.3g (tol 1e-6), mean-violating residual %.3g (> 1e-3)", rel,
                           stall)};
  });

  criterion(6, "deformation properties P1-P5 on the flagship", 120, [&] {
    const auto props = deformation::verify_path_properties(flagship.surface, flagship.path, false);
    c6_report = deformation_artifacts(flagship, props);
    const auto& last = flagship.path.per_rho.back();
    int passed = 0;
    for (const auto& c : props.checks) passed += c.p1 && c.p2 && c.p3 && c.p4 && c.p5;
    const bool ok = props.pass && props.checks.size() == 11 && passed == 11 && last.rho == 1 && last.k_max < 0;
    return Outcome{ok, fmt("%.0f/11 rho values pass, mu %.4g, max K_1 over vertices %.4g (< 0)", passed,
                           flagship.path.mu(), last.k_max)};
  });

  criterion(7, "deformed-family end-to-end certificate", 600, [&] {
    const auto cert = certifier::certify_theorem3(flagship.surface, flagship.path, theorem3_params());
    c7_report = certificate_artifacts(cert);
    const double mu = flagship.path.mu();
    const double bound = bubbles::kplus_bound_theorem3(0.5, cert.delta_g, mu);
    const double floor = std::exp(-2 * mu) * 0.5 * std::pow(std::tanh(std::exp(-mu) * std::log(3.0) / 3), 2);
    double gap = 0, margin = INFINITY;
    int geodesics = 0;
    for (const auto& r : cert.per_rho) {
      gap = std::max(gap, r.max_cauchy_gap);
      margin = std::min(margin, r.min_margin);
      geodesics += r.geodesics;
    }
    const bool ok = cert.pass && cert.per_rho.size() == 11 && geodesics == 2200 &&
                    cert.kplus <= 0.9 * bound && std::abs(cert.floor_thm3 - floor) <= 1e-15 * floor &&
                    cert.slack == 1e-3 && gap <= 1e-6;
    return Outcome{ok, fmt("K+ %.6g <= 0.9 x %.6g, floor %.6g, ", cert.kplus, bound, floor) +
                           fmt("min margin %.4g, max cauchy gap %.3g (tol 1e-6), 2200 geodesics", margin, gap)};
  });

  criterion(8, "byte-identical reruns of 3, 6 and 7", 720, [&] {
    bubbles::CertifyOptions opts;
    opts.throw_on_failure = false;
    const bool same3 = profile_artifacts(bubbles::certify_theorem1(profile_params(), 100, kProfileSeed, opts)) ==
                       c3_report;
    const Flagship again = make_flagship();
    const auto props = deformation::verify_path_properties(again.surface, again.path, false);
    const bool same6 = deformation_artifacts(again, props) == c6_report;
    const bool same7 = certificate_artifacts(certifier::certify_theorem3(again.surface, again.path,
                                                                         theorem3_params())) == c7_report;
    const bool ok = same3 && same6 && same7 && !c3_report.empty() && !c6_report.empty() && !c7_report.empty();
    return Outcome{ok, std::string("profile ") + (same3 ? "identical" : "differs") + ", deformation " +
                           (same6 ? "identical" : "differs") + ", certificate " + (same7 ? "identical" : "differs")};
  });

  return failures == 0 ? 0 : 1;
}
