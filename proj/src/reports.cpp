#include "anosovlab/reports.hpp"

#include "anosovlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

namespace anosovlab::reports {

namespace {

constexpr double kPi = std::numbers::pi;

// JSON has no infinities; they are written as strings.
ordered_json real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

std::string short_fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json number(double value, double tol) { return {{"value", real(value)}, {"tol", tol}}; }

ordered_json checked(double value, double threshold, double tol, bool pass) {
  return {{"value", real(value)}, {"threshold", real(threshold)}, {"tol", tol}, {"pass", pass}};
}

// ---------------------------------------------------------------- profiles

ordered_json profile_report(const bubbles::AnosovProfileReport& rep) {
  const auto& p = rep.params;
  ordered_json j;
  j["kind"] = "profile-certificate";
  j["params"] = {{"epsilon", number(p.epsilon, 0)}, {"delta", number(p.delta, 0)},  {"k", p.k},
                 {"lambda_gap", number(p.lambda_gap, 0)}, {"kplus", number(p.kplus, 0)}};
  j["kplus_bound"] = checked(p.kplus, bubbles::kplus_bound_theorem1(p.epsilon, p.delta), 0,
                             p.kplus < bubbles::kplus_bound_theorem1(p.epsilon, p.delta));
  j["floor"] = number(rep.floor, 0);
  j["horizon_T"] = rep.horizon_T;
  j["profiles"] = rep.profiles.size();
  double min_uu = std::numeric_limits<double>::infinity(), max_us = -min_uu, max_gap = 0;
  for (const auto& c : rep.profiles) {
    min_uu = std::min(min_uu, c.min_Uu);
    max_us = std::max(max_us, c.max_Us);
    max_gap = std::max(max_gap, c.cauchy_gap);
  }
  j["min_Uu"] = checked(min_uu, -rep.sign_tol, rep.sign_tol, min_uu >= -rep.sign_tol);
  j["max_Us"] = checked(max_us, rep.sign_tol, rep.sign_tol, max_us <= rep.sign_tol);
  j["min_separation_margin"] = checked(rep.min_margin, 0, rep.slack, rep.min_margin >= 0);
  j["separation_required"] = number(rep.separation_required, rep.slack);
  j["max_cauchy_gap"] = checked(max_gap, rep.convergence_tol, rep.convergence_tol, max_gap <= rep.convergence_tol);
  j["worst_seed"] = rep.profiles.empty() ? 0 : rep.profiles[rep.worst].seed;
  j["verdict"] = rep.pass ? "PASS" : "FAIL";
  return j;
}

std::string profile_margins_csv(const bubbles::AnosovProfileReport& rep) {
  std::ostringstream os;
  os << "index,seed,min_Uu,sign_tol,max_Us,separation,separation_required,slack,cauchy_gap,convergence_tol,pass\n";
  for (std::size_t i = 0; i < rep.profiles.size(); ++i) {
    const auto& c = rep.profiles[i];
    os << i << ',' << c.seed << ',' << fmt(c.min_Uu) << ',' << fmt(rep.sign_tol) << ',' << fmt(c.max_Us) << ','
       << fmt(c.separation) << ',' << fmt(rep.separation_required) << ',' << fmt(rep.slack) << ','
       << fmt(c.cauchy_gap) << ',' << fmt(rep.convergence_tol) << ',' << (c.pass ? 1 : 0) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------- surfaces

ordered_json surface_file(const surface::BubbledSurface& s, const SurfaceHeader& h) {
  ordered_json j = serialize::surface_to_json(s);
  ordered_json head;
  head["kplus"] = number(h.kplus, 0);
  if (h.target_kplus != 0) head["target_kplus"] = number(h.target_kplus, 0);
  head["gauss_bonnet"] = {{"integral", number(h.gauss_bonnet.integral, h.gb_tol * 4 * kPi)},
                          {"volume", number(h.gauss_bonnet.volume, h.gb_tol * 4 * kPi)},
                          {"rel_error", checked(h.gauss_bonnet.rel_error, h.gb_tol, h.gb_tol,
                                                h.gauss_bonnet.rel_error <= h.gb_tol)},
                          {"n_radial", h.gauss_bonnet.n_radial},
                          {"n_angular", h.gauss_bonnet.n_angular}};
  if (h.has_separation) {
    const auto& sp = h.separation;
    head["separation"] = {
        {"epsilon", number(h.epsilon, 0)},
        {"geodesics", sp.geodesics},
        {"visits", sp.visits},
        {"corner_hits", sp.corner_hits},
        {"min_gap_any", checked(sp.min_gap_any, sp.required_gap, 0, sp.min_gap_any >= sp.required_gap)},
        {"min_gap_same_lift",
         checked(sp.min_gap_same_lift, sp.required_same_lift, 0, sp.min_gap_same_lift >= sp.required_same_lift)}};
  }
  ordered_json out;
  out["format"] = j["format"];
  out["version"] = j["version"];
  out["header"] = head;
  out["bumps"] = j["bumps"];
  return out;
}

// ---------------------------------------------------------------- deformation

ordered_json deformation_report(const deformation::DeformationPath& path, const deformation::PathReport& props,
                                const deformation::LengthReport* lengths, double poisson_tol) {
  const auto& m = *path.mesh;
  ordered_json j;
  j["kind"] = "deformation";
  j["epsilon"] = number(path.epsilon, 0);
  j["mesh"] = {{"vertices", m.n_vertices},
               {"triangles", m.triangles.size()},
               {"euler_characteristic", m.euler_characteristic()},
               {"max_row_sum", checked(m.max_abs_row_sum(), 1e-12, 1e-12, m.max_abs_row_sum() <= 1e-12)},
               {"volume", number(m.volume(), 1e-3 * m.volume())}};
  j["h"] = {{"kappa", number(path.h.kappa, 0)},
            {"shift", number(path.h.shift, 0)},
            {"mean_after", checked(path.h.mean_after, 0, 1e-14, std::abs(path.h.mean_after) <= 1e-14)}};
  j["poisson"] = {{"residual", checked(path.poisson.residual, poisson_tol, poisson_tol,
                                       path.poisson.residual <= poisson_tol)},
                  {"iterations", path.poisson.iterations},
                  {"mu", number(path.mu(), 0)},
                  {"min_w", number(path.poisson.w.size() ? path.poisson.w.minCoeff() : 0.0, 0)}};
  j["zeta"] = number(props.zeta, 0);
  ordered_json rows = ordered_json::array();
  for (std::size_t k = 0; k < props.checks.size(); ++k) {
    const auto& c = props.checks[k];
    const auto& d = path.per_rho[k];
    rows.push_back({{"rho", c.rho},
                    {"P1_margin", checked(c.p1_margin, 0, 0, c.p1)},
                    {"P2_worst", checked(c.p2_worst, 0, props.slack, c.p2)},
                    {"P3", c.p3},
                    {"P4_kmax", std::abs(c.rho - 1) < 1e-12 ? checked(d.k_max, 0, 0, c.p4) : ordered_json(nullptr)},
                    {"P5_rel_error", checked(c.p5_rel_error, props.gb_tol, props.gb_tol, c.p5)},
                    {"k_min", number(d.k_min, 0)},
                    {"k_max", number(d.k_max, 0)},
                    {"positive_vertices", d.positive_vertices},
                    {"route_disagreement", checked(d.disagreement, 10 * path.poisson.residual, 0,
                                                   d.disagreement <= 10 * path.poisson.residual)}});
  }
  j["per_rho"] = rows;
  if (lengths) {
    j["lengths"] = {{"curves", lengths->curves},
                    {"segments", lengths->segments},
                    {"min_ratio", checked(lengths->min_ratio, 1, 0, lengths->min_ratio >= 1)},
                    {"max_radius_ratio", checked(lengths->max_radius_ratio, 1, 1e-14, lengths->max_radius_ratio <= 1 + 1e-14)}};
  }
  j["verdict"] = props.pass ? "PASS" : "FAIL";
  return j;
}

std::string curvature_extrema_csv(const deformation::DeformationPath& path) {
  std::ostringstream os;
  os << "rho,k_min,k_max,k_max_outside,positive_vertices,gauss_bonnet,gb_target,gb_rel_tol,disagreement,disagreement_tol\n";
  for (const auto& d : path.per_rho)
    os << fmt(d.rho) << ',' << fmt(d.k_min) << ',' << fmt(d.k_max) << ',' << fmt(d.k_max_outside) << ','
       << d.positive_vertices << ',' << fmt(d.gauss_bonnet) << ',' << fmt(-4 * kPi) << ",0.001,"
       << fmt(d.disagreement) << ',' << fmt(10 * path.poisson.residual) << '\n';
  return os.str();
}

std::string w_csv(const deformation::DeformationPath& path) {
  std::ostringstream os;
  os << "vertex,x,y,w\n";
  const auto& m = *path.mesh;
  for (int v = 0; v < m.n_vertices; ++v)
    os << v << ',' << fmt(m.position[v].real()) << ',' << fmt(m.position[v].imag()) << ','
       << fmt(path.poisson.w[v]) << '\n';
  return os.str();
}

std::string sign_heatmap_svg(const surface::BubbledSurface& surface, const deformation::DeformationPath& path, const deformation::MeshField& field,
                             const std::vector<std::size_t>& rho_indices, int pixels) {
  const double extent = 0.85;
  const int panel = 300, pad = 30;
  const double px = double(panel) / pixels;
  const int width = int(rho_indices.size()) * (panel + pad) + pad, height = panel + 2 * pad;
  // Four levels per sign, scaled by the largest |K| of the panel.
  static const char* kNeg[] = {"#deebf7", "#9ecae1", "#4292c6", "#08519c"};
  static const char* kPos[] = {"#fee0d2", "#fc9272", "#ef3b2c", "#99000d"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < rho_indices.size(); ++p) {
    const auto& d = path.per_rho.at(rho_indices[p]);
    const double scale = std::max(std::abs(d.k_min), std::abs(d.k_max));
    const int x0 = pad + int(p) * (panel + pad);
    os << "<text x=\"" << x0 << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">rho = " << short_fmt(d.rho)
       << ", max K = " << short_fmt(d.k_max) << "</text>\n";
    for (int row = 0; row < pixels; ++row) {
      const double y = extent - (row + 0.5) * 2 * extent / pixels;
      const char* run_color = nullptr;
      int run_start = 0;
      auto flush = [&](int end) {
        if (run_color)
          os << "<rect x=\"" << short_fmt(x0 + run_start * px) << "\" y=\"" << short_fmt(pad + row * px)
             << "\" width=\"" << short_fmt((end - run_start) * px) << "\" height=\"" << short_fmt(px)
             << "\" fill=\"" << run_color << "\"/>\n";
      };
      for (int col = 0; col <= pixels; ++col) {
        const char* color = nullptr;
        if (col < pixels) {
          const surface::Complex z(-extent + (col + 0.5) * 2 * extent / pixels, y);
          if (surface.domain().contains(z)) {
            try {
              const double k = field.nodal_value(z, d.K);
              const int level = std::min(3, int(4 * std::abs(k) / scale));
              color = k >= 0 ? kPos[level] : kNeg[level];
            } catch (const DomainError&) {
              // sliver between a side arc and the mesh boundary: left blank
            }
          }
        }
        if (color != run_color) {
          flush(col);
          run_color = color;
          run_start = col;
        }
      }
    }
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------- certificates

ordered_json certificate_report(const certifier::AnosovCertificate& c) {
  ordered_json j;
  j["kind"] = "deformed-family-certificate";
  j["params"] = {{"epsilon", number(c.epsilon, 0)},
                 {"delta", number(c.delta, 0)},
                 {"delta_g", number(c.delta_g, 0)},
                 {"k", c.k},
                 {"lambda", number(c.lambda, 0)},
                 {"kplus", number(c.kplus, 0)},
                 {"mu", number(c.mu, 0)}};
  j["hypothesis"] = checked(c.kplus, c.kplus_bound, 0, c.hypothesis_holds);
  j["floor_thm1"] = number(c.floor_thm1, 0);
  j["floor_thm3"] = number(c.floor_thm3, 0);
  j["separation_required"] = number(c.separation_required, c.slack);
  j["horizon_T"] = c.horizon_T;
  j["window"] = {c.window.lo, c.window.hi};
  j["seed"] = c.seed;
  ordered_json rows = ordered_json::array();
  for (const auto& r : c.per_rho) {
    const auto& w = r.certificates.empty() ? certifier::GeodesicCertificate{} : r.certificates[r.worst];
    rows.push_back({{"rho", r.rho},
                    {"geodesics", r.geodesics},
                    {"failures", r.failures},
                    {"oracle_confirmed", r.oracle_confirmed},
                    {"corner_resamples", r.corner_resamples},
                    {"min_Uu", checked(r.min_Uu, -c.sign_tol, c.sign_tol, r.min_Uu >= -c.sign_tol)},
                    {"max_Us", checked(r.max_Us, c.sign_tol, c.sign_tol, r.max_Us <= c.sign_tol)},
                    {"min_separation", checked(r.min_separation, c.separation_required, c.slack,
                                               r.min_separation >= c.separation_required)},
                    {"max_cauchy_gap", checked(r.max_cauchy_gap, c.convergence_tol, c.convergence_tol,
                                               r.max_cauchy_gap <= c.convergence_tol)},
                    {"k_max_along", number(r.k_max_along, 0)},
                    {"worst", {{"seed", w.seed}, {"stratum", certifier::stratum_name(w.stratum)}, {"failure", w.failure}}},
                    {"verdict", r.pass ? "PASS" : "FAIL"}});
  }
  j["per_rho"] = rows;
  j["verdict"] = c.pass ? "PASS" : "FAIL";
  return j;
}

std::string certificate_margins_csv(const certifier::AnosovCertificate& c) {
  std::ostringstream os;
  os << "rho,index,seed,stratum,min_Uu,max_Us,sign_tol,separation,separation_required,slack,cauchy_gap,"
        "convergence_tol,k_max,visits,pass\n";
  for (const auto& r : c.per_rho)
    for (std::size_t i = 0; i < r.certificates.size(); ++i) {
      const auto& g = r.certificates[i];
      os << fmt(r.rho) << ',' << i << ',' << g.seed << ',' << certifier::stratum_name(g.stratum) << ','
         << fmt(g.min_Uu) << ',' << fmt(g.max_Us) << ',' << fmt(c.sign_tol) << ',' << fmt(g.separation) << ','
         << fmt(c.separation_required) << ',' << fmt(c.slack) << ',' << fmt(g.cauchy_gap) << ','
         << fmt(c.convergence_tol) << ',' << fmt(g.k_max) << ',' << g.visits.size() << ',' << (g.pass ? 1 : 0)
         << '\n';
    }
  return os.str();
}

// ---------------------------------------------------------------- sweep

std::string bounds_csv(const std::vector<double>& epsilons, const std::vector<double>& deltas, double mu) {
  std::ostringstream os;
  os << "epsilon,delta,mu,kplus_bound_theorem1,kplus_bound_theorem3\n";
  for (double e : epsilons)
    for (double d : deltas)
      os << fmt(e) << ',' << fmt(d) << ',' << fmt(mu) << ',' << fmt(bubbles::kplus_bound_theorem1(e, d)) << ','
         << fmt(bubbles::kplus_bound_theorem3(e, d, mu)) << '\n';
  return os.str();
}

std::string thresholds_csv(const std::vector<double>& epsilons, double mu) {
  std::ostringstream os;
  os << "epsilon,mu,delta_threshold_theorem1,delta_threshold_theorem3\n";
  for (double e : epsilons)
    os << fmt(e) << ',' << fmt(mu) << ',' << fmt(bubbles::theorem1_delta_threshold(e)) << ','
       << fmt(bubbles::theorem3_delta_threshold(e, mu)) << '\n';
  return os.str();
}

// ---------------------------------------------------------------- plots

std::string line_plot_svg(const std::string& title, const std::string& xlabel, const std::vector<Series>& series,
                          const std::vector<HLine>& hlines) {
  const double W = 720, H = 420, L = 60, R = 150, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  for (const auto& h : hlines) {
    y0 = std::min(y0, h.y);
    y1 = std::max(y1, h.y);
  }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  const double ypad = 0.05 * (y1 - y0);
  y0 -= ypad;
  y1 += ypad;
  auto X = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto Y = [&](double y) { return T + (y1 - y) / (y1 - y0) * (H - T - B); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << L << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n"
     << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
    os << "<text x=\"" << short_fmt(X(xv)) << "\" y=\"" << H - B + 18
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << short_fmt(xv) << "</text>\n"
       << "<text x=\"" << L - 6 << "\" y=\"" << short_fmt(Y(yv) + 4)
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << short_fmt(yv) << "</text>\n";
  }
  os << "<text x=\"" << short_fmt(0.5 * (L + W - R)) << "\" y=\"" << H - 12
     << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  int legend = 0;
  for (const auto& h : hlines) {
    os << "<line x1=\"" << L << "\" x2=\"" << W - R << "\" y1=\"" << short_fmt(Y(h.y)) << "\" y2=\""
       << short_fmt(Y(h.y)) << "\" stroke=\"" << h.color << "\" stroke-dasharray=\"5,4\"/>\n";
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * ++legend << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
       << h.color << "\">" << h.name << "</text>\n";
  }
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.y[i])) os << short_fmt(X(s.x[i])) << ',' << short_fmt(Y(s.y[i])) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * ++legend << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
       << s.color << "\">" << s.name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace anosovlab::reports
