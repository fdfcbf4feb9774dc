#pragma once

// Report emission: structured JSON text, CSV tables and SVG figures. Every
// checked number is written next to the threshold and tolerance it was
// checked against. Output depends only on its inputs (no clocks, no paths).

#include <string>
#include <vector>

#include "anosovlab/bubble_profiles.hpp"
#include "anosovlab/certifier.hpp"
#include "anosovlab/deformation.hpp"
#include "anosovlab/serialize.hpp"

namespace anosovlab::reports {

using serialize::ordered_json;

/// {"value": v, "tol": tol}
ordered_json number(double value, double tol);
/// {"value": v, "threshold": t, "tol": tol, "pass": pass}
ordered_json checked(double value, double threshold, double tol, bool pass);

/// Fixed-format decimal used in CSV and SVG ("%.17g").
std::string fmt(double v);

// ---- profiles

ordered_json profile_report(const bubbles::AnosovProfileReport& rep);
std::string profile_margins_csv(const bubbles::AnosovProfileReport& rep);

// ---- surfaces

struct SurfaceHeader {
  double kplus = 0;
  double target_kplus = 0;
  surface::GaussBonnetResult gauss_bonnet;
  double gb_tol = 1e-3;
  surface::SeparationStats separation;
  bool has_separation = false;
  double epsilon = 0;
};
ordered_json surface_file(const surface::BubbledSurface& s, const SurfaceHeader& header);

// ---- deformation

ordered_json deformation_report(const deformation::DeformationPath& path, const deformation::PathReport& props,
                                const deformation::LengthReport* lengths, double poisson_tol);
std::string curvature_extrema_csv(const deformation::DeformationPath& path);
std::string w_csv(const deformation::DeformationPath& path);
/// Sign map of K_rho over the octagon for the given grid indices.
std::string sign_heatmap_svg(const surface::BubbledSurface& surface, const deformation::DeformationPath& path, const deformation::MeshField& field,
                             const std::vector<std::size_t>& rho_indices, int pixels = 160);

// ---- certificates

ordered_json certificate_report(const certifier::AnosovCertificate& cert);
std::string certificate_margins_csv(const certifier::AnosovCertificate& cert);

// ---- sweep

/// Rows (epsilon, delta, bound1, bound3 at mu) over the grid.
std::string bounds_csv(const std::vector<double>& epsilons, const std::vector<double>& deltas, double mu);
/// Positivity thresholds delta*(epsilon) of both bounds.
std::string thresholds_csv(const std::vector<double>& epsilons, double mu);

// ---- plots

struct Series {
  std::string name;
  std::vector<double> x, y;
  std::string color;
};
struct HLine {
  std::string name;
  double y;
  std::string color;
};
std::string line_plot_svg(const std::string& title, const std::string& xlabel, const std::vector<Series>& series,
                          const std::vector<HLine>& hlines = {});

}  // namespace anosovlab::reports
