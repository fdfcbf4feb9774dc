#include "anosovlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "anosovlab/bubble_profiles.hpp"
#include "anosovlab/certifier.hpp"
#include "anosovlab/deformation.hpp"
#include "anosovlab/errors.hpp"
#include "anosovlab/reports.hpp"
#include "anosovlab/serialize.hpp"

namespace anosovlab::cli {

namespace fs = std::filesystem;
using surface::BubbledSurface;
using surface::Bump;

namespace {

// Artifacts of one stage, held in memory and written together at the end.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }
  void flush(std::ostream& out) const {
    fs::create_directories(dir_);
    for (const auto& [name, content] : files_) {
      std::ofstream f(dir_ / name, std::ios::binary);
      if (!f) throw ConfigError("cannot write " + (dir_ / name).string());
      f << content;
      out << "wrote " << name << '\n';
    }
  }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

struct Common {
  std::string out = ".";
  std::uint64_t seed = 1;
  double horizon = 40;
};

struct ProfileConfig : Common {
  bubbles::FamilyParams params{};
  int profiles = 100;
  double sign_tol = 1e-8;
  double slack = 1e-3;
};

struct SurfaceConfig : Common {
  std::vector<std::string> bumps;
  bool no_bumps = false;
  double epsilon = 0.5;
  double fraction = 0.9;
  double target_kplus = 0;  // 0: deformed-family calibration by fraction
  double mesh_res = 1;
  int geodesics = 50;
  std::string file = "surface.json";
};

struct DeformConfig : Common {
  std::string surface_file;
  double epsilon = 0.5;
  std::vector<double> rho_grid = deformation::default_rho_grid();
  double mesh_res = 1;
  double poisson_tol = 1e-10;
  int curves = 20;
};

struct CertifyConfig : DeformConfig {
  int geodesics = 200;
  double sign_tol = 1e-8;
  double slack = 1e-3;
};

struct SweepConfig : Common {
  std::vector<double> epsilons{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> deltas;
  double mu = 0;
};

void require_positive(double v, const char* name) {
  if (!(v > 0)) throw ConfigError(detail::concat(name, " must be positive, got ", v));
}

void validate_rho_grid(const std::vector<double>& g) {
  if (g.empty()) throw ConfigError("rho grid is empty");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(g[i] >= 0 && g[i] <= 1)) throw ConfigError(detail::concat("rho ", g[i], " outside [0,1]"));
    if (i > 0 && !(g[i] > g[i - 1])) throw ConfigError("rho grid must be strictly ascending");
  }
}

Bump parse_bump(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bump '" + text + "': expected x,y,delta");
    }
  }
  if (v.size() != 3) throw ConfigError("bump '" + text + "': expected x,y,delta");
  if (!(v[2] > 0)) throw ConfigError(detail::concat("bump '", text, "': delta must be positive"));
  return Bump{{v[0], v[1]}, v[2], 0};
}

BubbledSurface load_surface(const std::string& file) {
  std::ifstream f(file);
  if (!f) throw ConfigError("cannot read surface file " + file);
  serialize::ordered_json j;
  try {
    j = serialize::ordered_json::parse(f);
  } catch (const serialize::ordered_json::parse_error& e) {
    throw ConfigError(file + ": " + e.what());
  }
  return serialize::surface_from_json(j);
}

deformation::MeshOptions mesh_options(double res) {
  deformation::MeshOptions m;
  m.resolution = res;
  return m;
}

// ---------------------------------------------------------------- profile-verify

int profile_verify(const ProfileConfig& c, std::ostream& out) {
  c.params.validate();
  require_positive(c.horizon, "horizon");
  require_positive(c.sign_tol, "sign-tol");
  require_positive(c.slack, "slack");
  if (c.profiles < 1) throw ConfigError("profiles must be at least 1");
  bubbles::CertifyOptions opts;
  opts.horizon_T = c.horizon;
  opts.sign_tol = c.sign_tol;
  opts.slack = c.slack;
  opts.throw_on_failure = false;
  const auto rep = bubbles::certify_theorem1(c.params, c.profiles, c.seed, opts);

  const auto& worst = rep.profiles[rep.worst];
  const auto profile = bubbles::profile_for_seed(c.params, c.seed, int(rep.worst), opts.shape);
  const auto pair = riccati::compute_stable_unstable(profile.curvature, worst.window, opts.horizon_T, opts.su);
  std::vector<double> K(pair.grid.size()), gap(pair.grid.size());
  for (std::size_t i = 0; i < pair.grid.size(); ++i) {
    K[i] = profile.K(pair.grid[i]);
    gap[i] = pair.Uu[i] - pair.Us[i];
  }
  const std::string title = detail::concat("worst profile (seed ", worst.seed, ")");

  Outputs files(c.out);
  files.add("profile_report.json", serialize::dump(reports::profile_report(rep)));
  files.add("profile_margins.csv", reports::profile_margins_csv(rep));
  files.add("profile_worst.svg",
            reports::line_plot_svg(title, "t",
                                   {{"U^u", pair.grid, pair.Uu, "#c0392b"},
                                    {"U^s", pair.grid, pair.Us, "#2471a3"},
                                    {"U^u - U^s", pair.grid, gap, "#7d3c98"},
                                    {"K", pair.grid, K, "#7f8c8d"}},
                                   {{"2 floor - slack", rep.separation_required, "#7d3c98"}, {"0", 0, "#000000"}}));
  files.flush(out);
  out << "profile-verify: " << (rep.pass ? "PASS" : "FAIL") << " (" << rep.profiles.size()
      << " profiles, min separation margin " << rep.min_margin << ")\n";
  return rep.pass ? kPass : kFail;
}

// ---------------------------------------------------------------- surface-build

int surface_build(const SurfaceConfig& c, std::ostream& out) {
  require_positive(c.epsilon, "epsilon");
  require_positive(c.mesh_res, "mesh-res");
  require_positive(c.horizon, "horizon");
  if (!(c.fraction > 0 && c.fraction < 1)) throw ConfigError(detail::concat("fraction must lie in (0,1), got ", c.fraction));
  if (c.target_kplus < 0) throw ConfigError("target-kplus must be nonnegative");
  if (c.no_bumps && !c.bumps.empty()) throw ConfigError("--no-bumps conflicts with --bump");
  std::vector<Bump> bumps;
  if (!c.no_bumps) {
    for (const auto& b : c.bumps) bumps.push_back(parse_bump(b));
    if (c.bumps.empty()) bumps.push_back(Bump{{0, 0}, 0.05, 0});
  }
  const BubbledSurface base(bumps);  // LayoutError names an overlapping pair

  reports::SurfaceHeader header;
  BubbledSurface s = base;
  double mu = 0;
  if (!bumps.empty()) {
    if (c.target_kplus > 0) {
      s = surface::calibrate_amplitudes(base, c.target_kplus);
      header.target_kplus = c.target_kplus;
    } else {
      auto cal = certifier::calibrate_for_deformed_family(base, c.epsilon, c.fraction, mesh_options(c.mesh_res));
      s = std::move(cal.surface);
      mu = cal.mu_used;
      header.target_kplus = cal.target;
    }
  }
  header.kplus = bumps.empty() ? -1.0 : s.max_curvature();
  header.gauss_bonnet = s.gauss_bonnet();
  header.epsilon = c.epsilon;
  const surface::Metric g(s);
  header.separation = surface::bubble_separation_stats(g, c.geodesics, c.horizon, c.seed, c.epsilon, mu);
  header.has_separation = true;

  const bool gb_ok = header.gauss_bonnet.rel_error <= header.gb_tol;
  Outputs files(c.out);
  files.add(c.file, serialize::dump(reports::surface_file(s, header)));
  files.flush(out);
  out << "surface-build: " << (gb_ok ? "PASS" : "FAIL") << " (" << bumps.size() << " bumps, K+ " << header.kplus
      << ", Gauss-Bonnet error " << header.gauss_bonnet.rel_error << ")\n";
  return gb_ok ? kPass : kFail;
}

// ---------------------------------------------------------------- deform

void validate(const DeformConfig& c) {
  if (c.surface_file.empty()) throw ConfigError("--surface is required");
  require_positive(c.epsilon, "epsilon");
  require_positive(c.mesh_res, "mesh-res");
  require_positive(c.poisson_tol, "poisson-tol");
  validate_rho_grid(c.rho_grid);
}

int deform(const DeformConfig& c, std::ostream& out) {
  validate(c);
  if (c.curves < 0) throw ConfigError("curves must be nonnegative");
  const BubbledSurface s = load_surface(c.surface_file);
  deformation::PoissonOptions po;
  po.tol = c.poisson_tol;
  const auto path = deformation::build_path(s, mesh_options(c.mesh_res), c.epsilon, c.rho_grid, po);
  const auto props = deformation::verify_path_properties(s, path, false);
  const auto field = std::make_shared<const deformation::MeshField>(s, path.mesh, path.poisson.w);
  deformation::LengthReport lengths;
  std::string length_failure;
  if (c.curves > 0) {
    try {
      lengths = deformation::verify_length_monotonicity(s, path, *field, c.curves, c.seed);
    } catch (const MonotonicityViolated& e) {
      length_failure = e.what();
    }
  }
  std::vector<std::size_t> panels{0};
  if (path.rho_grid.size() > 2) panels.push_back(path.rho_grid.size() / 2);
  if (path.rho_grid.size() > 1) panels.push_back(path.rho_grid.size() - 1);

  auto report = reports::deformation_report(path, props, c.curves > 0 && length_failure.empty() ? &lengths : nullptr,
                                            po.tol);
  if (!length_failure.empty()) report["lengths"] = {{"failure", length_failure}};
  const bool pass = props.pass && length_failure.empty();
  report["verdict"] = pass ? "PASS" : "FAIL";

  Outputs files(c.out);
  files.add("deformation.json", serialize::dump(report));
  files.add("curvature_extrema.csv", reports::curvature_extrema_csv(path));
  files.add("w.csv", reports::w_csv(path));
  files.add("sign_heatmap.svg", reports::sign_heatmap_svg(s, path, *field, panels));
  files.flush(out);
  out << "deform: " << (pass ? "PASS" : "FAIL") << " (mu " << path.mu() << ", " << path.rho_grid.size()
      << " rho values)\n";
  return pass ? kPass : kFail;
}

// ---------------------------------------------------------------- certify

int certify(const CertifyConfig& c, std::ostream& out) {
  validate(c);
  require_positive(c.horizon, "horizon");
  require_positive(c.sign_tol, "sign-tol");
  require_positive(c.slack, "slack");
  if (c.geodesics < 1) throw ConfigError("geodesics must be at least 1");
  const BubbledSurface s = load_surface(c.surface_file);
  deformation::PoissonOptions po;
  po.tol = c.poisson_tol;
  const auto path = deformation::build_path(s, mesh_options(c.mesh_res), c.epsilon, c.rho_grid, po);
  certifier::Theorem3Params p;
  p.n_geodesics = c.geodesics;
  p.seed = c.seed;
  p.cert.horizon_T = c.horizon;
  p.cert.sign_tol = c.sign_tol;
  p.cert.slack = c.slack;
  const auto cert = certifier::certify_theorem3(s, path, p);

  // Worst geodesic over all rho.
  std::size_t wr = 0;
  for (std::size_t r = 1; r < cert.per_rho.size(); ++r)
    if (cert.per_rho[r].min_margin < cert.per_rho[wr].min_margin) wr = r;
  const auto& worst = cert.per_rho[wr].certificates[cert.per_rho[wr].worst];
  const auto field = std::make_shared<const deformation::MeshField>(s, path.mesh, path.poisson.w);
  const auto g = deformation::deformed_metric(s, path, field, worst.rho);
  const auto along = certifier::riccati_along(g, worst.z0, worst.theta0, p.cert);
  std::vector<double> gap(along.t.size());
  for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = along.Uu[i] - along.Us[i];
  const std::string title = detail::concat("worst geodesic (rho ", worst.rho, ", seed ", worst.seed, ")");

  Outputs files(c.out);
  files.add("certificate.json", serialize::dump(reports::certificate_report(cert)));
  files.add("certificate_margins.csv", reports::certificate_margins_csv(cert));
  files.add("worst_geodesic.svg",
            reports::line_plot_svg(title, "t",
                                   {{"U^u", along.t, along.Uu, "#c0392b"},
                                    {"U^s", along.t, along.Us, "#2471a3"},
                                    {"U^u - U^s", along.t, gap, "#7d3c98"},
                                    {"K_rho", along.t, along.K, "#7f8c8d"}},
                                   {{"2 floor - slack", cert.separation_required, "#7d3c98"}, {"0", 0, "#000000"}}));
  if (!cert.pass) files.add("replay.json", certifier::replay_bundle(s, worst, cert.epsilon, cert.mu));
  files.flush(out);
  out << "certify: " << (cert.pass ? "PASS" : "FAIL") << " (" << c.geodesics << " geodesics x "
      << cert.per_rho.size() << " rho, mu " << cert.mu << ")\n";
  return cert.pass ? kPass : kFail;
}

// ---------------------------------------------------------------- sweep

int sweep(SweepConfig c, std::ostream& out) {
  if (c.deltas.empty())
    for (int i = 1; i <= 30; ++i) c.deltas.push_back(i / 100.0);
  for (double e : c.epsilons)
    if (!(e > 0 && e <= 1)) throw ConfigError(detail::concat("epsilon ", e, " outside (0,1]"));
  for (double d : c.deltas) require_positive(d, "delta");
  if (!(c.mu >= 0)) throw ConfigError("mu must be nonnegative");
  std::sort(c.epsilons.begin(), c.epsilons.end());
  std::sort(c.deltas.begin(), c.deltas.end());

  static const char* kColors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d"};
  std::vector<reports::Series> series;
  for (std::size_t i = 0; i < c.epsilons.size(); ++i) {
    reports::Series a{detail::concat("bound1, eps ", c.epsilons[i]), c.deltas, {}, kColors[i % 7]};
    for (double d : c.deltas) a.y.push_back(bubbles::kplus_bound_theorem1(c.epsilons[i], d));
    series.push_back(std::move(a));
  }
  Outputs files(c.out);
  files.add("bounds.csv", reports::bounds_csv(c.epsilons, c.deltas, c.mu));
  files.add("thresholds.csv", reports::thresholds_csv(c.epsilons, c.mu));
  files.add("bounds.svg", reports::line_plot_svg("K+ bound against delta", "delta", series, {{"0", 0, "#000000"}}));
  files.flush(out);
  out << "sweep: " << c.epsilons.size() << " x " << c.deltas.size() << " grid\n";
  return kPass;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
  app->add_option("--seed", c.seed, "Base seed")->capture_default_str();
  app->add_option("--horizon", c.horizon, "Riccati horizon T")->capture_default_str();
}

void add_path_options(CLI::App* app, DeformConfig& c) {
  app->add_option("--surface", c.surface_file, "Surface file from surface-build")->required();
  app->add_option("--epsilon", c.epsilon, "Curvature ceiling -epsilon outside bubbles")->capture_default_str();
  app->add_option("--rho-grid", c.rho_grid, "Comma-separated rho values in [0,1]")->delimiter(',');
  app->add_option("--mesh-res", c.mesh_res, "Mesh resolution factor")->capture_default_str();
  app->add_option("--poisson-tol", c.poisson_tol, "CG relative residual tolerance")->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical certificates for Anosov geodesic flows on bubbled genus-2 surfaces", "anosovlab"};
  app.set_config("--config", "", "TOML configuration file (one table per subcommand)");
  app.require_subcommand(1);

  ProfileConfig pc;
  pc.params.k = 3;
  auto* prof = app.add_subcommand("profile-verify", "Certify random admissible curvature profiles");
  add_common(prof, pc);
  prof->add_option("--epsilon", pc.params.epsilon)->capture_default_str();
  prof->add_option("--delta", pc.params.delta)->capture_default_str();
  prof->add_option("--kplus", pc.params.kplus)->capture_default_str();
  prof->add_option("--lambda-gap", pc.params.lambda_gap)->capture_default_str();
  prof->add_option("--k", pc.params.k, "Bubble count")->capture_default_str();
  prof->add_option("--profiles", pc.profiles)->capture_default_str();
  prof->add_option("--sign-tol", pc.sign_tol)->capture_default_str();
  prof->add_option("--slack", pc.slack)->capture_default_str();

  SurfaceConfig sc;
  auto* surf = app.add_subcommand("surface-build", "Build and calibrate a bubbled surface");
  add_common(surf, sc);
  surf->add_option("--bump", sc.bumps, "Bump as x,y,delta (repeatable); default one bump 0,0,0.05");
  surf->add_flag("--no-bumps", sc.no_bumps, "Constant curvature -1 surface");
  surf->add_option("--epsilon", sc.epsilon)->capture_default_str();
  surf->add_option("--fraction", sc.fraction, "Target K+ as a fraction of the deformed-family bound")
      ->capture_default_str();
  surf->add_option("--target-kplus", sc.target_kplus, "Calibrate to this K+ instead");
  surf->add_option("--mesh-res", sc.mesh_res)->capture_default_str();
  surf->add_option("--geodesics", sc.geodesics, "Geodesics for the separation statistics")->capture_default_str();
  surf->add_option("--file", sc.file, "Surface file name below --out")->capture_default_str();

  DeformConfig dc;
  auto* def = app.add_subcommand("deform", "Solve the Poisson problem and check the deformation path");
  add_common(def, dc);
  add_path_options(def, dc);
  def->add_option("--curves", dc.curves, "Random curves for the length check")->capture_default_str();

  CertifyConfig cc;
  auto* cer = app.add_subcommand("certify", "Riccati certificate along the deformation path");
  add_common(cer, cc);
  add_path_options(cer, cc);
  cer->add_option("--geodesics", cc.geodesics)->capture_default_str();
  cer->add_option("--sign-tol", cc.sign_tol)->capture_default_str();
  cer->add_option("--slack", cc.slack)->capture_default_str();

  SweepConfig wc;
  auto* swp = app.add_subcommand("sweep", "Tabulate the K+ bounds over an (epsilon, delta) grid");
  add_common(swp, wc);
  swp->add_option("--epsilons", wc.epsilons)->delimiter(',');
  swp->add_option("--deltas", wc.deltas)->delimiter(',');
  swp->add_option("--mu", wc.mu)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (*prof) return profile_verify(pc, out);
    if (*surf) return surface_build(sc, out);
    if (*def) return deform(dc, out);
    if (*cer) return certify(cc, out);
    return sweep(wc, out);
  } catch (const ConfigError& e) {
    err << "anosovlab: error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    err << "anosovlab: error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "anosovlab: failure: " << e.what() << '\n';
    return kFail;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "anosovlab: error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace anosovlab::cli
