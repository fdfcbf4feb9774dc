#pragma once

// Conformal deformation g_rho = e^{2 rho w} g towards negative curvature:
// h = -(K - 2 pi chi / vol), -Delta_g w = h on an identified triangle mesh of
// the octagon, min w = 0, and checks of the curvature path.

#include <Eigen/Sparse>

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "anosovlab/surface.hpp"

namespace anosovlab::deformation {

using surface::BubbledSurface;
using surface::Complex;

struct MeshOptions {
  double resolution = 1.0;   // scales all target edge lengths by 1 / resolution
  double h_bump = 1.0 / 40;  // edge length near bumps, relative to delta
  double h_max = 0.04;       // hyperbolic edge length far from bumps
  double growth = 1.1;       // ring spacing growth factor away from bumps
};

/// Polar-ring triangulation of the octagon in disk coordinates. Vertices on
/// paired sides are identified, so the mesh is a closed genus-2 surface.
struct SurfaceMesh {
  std::vector<Complex> points;               // unidentified vertices
  std::vector<int> vertex_of;                // unidentified -> identified index
  std::vector<std::array<int, 3>> triangles;  // unidentified indices
  int n_vertices = 0;                        // identified
  std::vector<Complex> position;             // a representative per identified vertex
  Eigen::SparseMatrix<double> laplacian;     // cotangent Laplacian L (negative semidefinite)
  Eigen::VectorXd mass;                      // lumped g-area per identified vertex

  int euler_characteristic() const;
  double volume() const { return mass.sum(); }
  double max_abs_row_sum() const;
  bool connected() const;
};

SurfaceMesh build_mesh(const BubbledSurface& surface, const MeshOptions& opts = {});

struct HField {
  Eigen::VectorXd K;  // analytic curvature at the vertices
  Eigen::VectorXd h;  // re-centred: sum(M h) = 0
  double volume = 0;
  double kappa = 0;   // 2 pi chi / vol
  double shift = 0;   // mass-weighted mean removed from -(K - kappa)
  double mean_after = 0;
};

/// Throws HypothesisViolated when epsilon >= -2 pi chi / vol.
HField compute_h(const BubbledSurface& surface, const SurfaceMesh& mesh, double epsilon);

struct PoissonOptions {
  double tol = 1e-10;
  long max_iterations = 20000;
};

struct PoissonResult {
  Eigen::VectorXd w;  // min w = 0
  double mu = 0;      // max w
  double residual = 0;  // |-L w - M h| / |M h|
  long iterations = 0;
};

/// Solves the stiffness system -L w = M h (so that K_rho = e^{-2 rho w}(K + rho h))
/// by preconditioned conjugate gradients. Throws
/// NoConvergence when the relative residual stays above tol.
PoissonResult solve_poisson(const SurfaceMesh& mesh, const Eigen::VectorXd& h,
                            const PoissonOptions& opts = {});

struct DeformedCurvature {
  Eigen::VectorXd algebraic;  // e^{-2 rho w}(K + rho h)
  Eigen::VectorXd discrete;   // e^{-2 rho w}(K - rho (L w) / m)
  double disagreement = 0;    // |M (i - ii)| / |M h|
  double tolerance = 0;       // 10 x Poisson residual
};

/// Throws FormulaMismatch when the routes disagree beyond tolerance.
DeformedCurvature curvature_of_deformed(const SurfaceMesh& mesh, const HField& h,
                                        const PoissonResult& w, double rho);

struct RhoDiagnostics {
  double rho = 0;
  Eigen::VectorXd K;  // K_rho per vertex (algebraic route)
  double k_min = 0, k_max = 0;
  double k_max_outside = 0;  // max outside bump supports
  long positive_vertices = 0;
  double gauss_bonnet = 0;  // sum K_rho e^{2 rho w} m
  double disagreement = 0;
};

struct DeformationPath {
  std::shared_ptr<const SurfaceMesh> mesh;
  HField h;
  PoissonResult poisson;
  double epsilon = 0;
  std::vector<double> rho_grid;
  std::vector<RhoDiagnostics> per_rho;

  double mu() const { return poisson.mu; }
  double zeta() const;  // e^{-2 mu} epsilon
  /// Metric curvature constant (1 - rho) K + rho kappa_eff with kappa_eff = kappa - shift.
  double kappa_eff() const { return h.kappa - h.shift; }
};

std::vector<double> default_rho_grid();

DeformationPath build_path(const BubbledSurface& surface, const MeshOptions& mesh_opts,
                           double epsilon, std::vector<double> rho_grid = default_rho_grid(),
                           const PoissonOptions& poisson = {});

struct PropertyCheck {
  double rho = 0;
  bool p1 = true, p2 = true, p3 = true, p4 = true, p5 = true;
  double p1_margin = 0;  // min over vertices outside bumps of -zeta - K_rho
  double p2_worst = 0;   // max K_rho over vertices with K < 0
  double p5_rel_error = 0;
};

struct PathReport {
  std::vector<PropertyCheck> checks;
  double zeta = 0;
  double slack = 1e-6;
  double gb_tol = 1e-3;
  bool pass = true;
};

/// P1: K_rho < -zeta outside bumps; P2: K_rho < 0 where K < 0; P3: K_rho
/// strictly decreasing in rho while non-negative at K >= 0 vertices; P4: K_1 < 0;
/// P5: sum K_rho dA_rho = 2 pi chi. Throws PropertyFailed unless told otherwise.
PathReport verify_path_properties(const BubbledSurface& surface, const DeformationPath& path,
                                  bool throw_on_failure = true);

/// Smooth representation of w for flows: -u + P1 interpolation of (w + u),
/// with gradients recovered at the vertices.
class MeshField : public surface::ScalarField {
 public:
  MeshField(const BubbledSurface& surface, std::shared_ptr<const SurfaceMesh> mesh,
            const Eigen::VectorXd& w);
  double value(Complex z) const override;
  Complex gradient(Complex z) const override;
  /// P1 interpolation of nodal values (non-negative when w is).
  double nodal_value(Complex z, const Eigen::VectorXd& w) const;

 private:
  struct Hit {
    int tri;
    std::array<double, 3> bary;
  };
  Hit locate(Complex z) const;

  const BubbledSurface* surface_;
  std::shared_ptr<const SurfaceMesh> mesh_;
  std::vector<double> smooth_;     // w + u at unidentified vertices
  std::vector<Complex> gradient_;  // recovered gradient of w + u
  int grid_ = 1;
  double lo_ = -1, cell_ = 1;
  std::vector<std::vector<int>> buckets_;
};

/// g_rho on the surface with the path's w.
surface::Metric deformed_metric(const BubbledSurface& surface, const DeformationPath& path,
                                std::shared_ptr<const MeshField> field, double rho);

struct LengthReport {
  int curves = 0;
  long segments = 0;
  double min_ratio = 0;           // min over segments of L(rho2) / L(rho1)
  double max_radius_ratio = 0;    // max over boundary samples of d_rho / (delta_g e^{rho mu})
  std::vector<double> rho_grid;
};

/// Random smooth curves and base geodesic segments: length under g_rho is
/// non-decreasing in rho; radial distances from bump centres to their support
/// boundaries stay within delta_g e^{rho mu}. Throws MonotonicityViolated.
LengthReport verify_length_monotonicity(const BubbledSurface& surface, const DeformationPath& path,
                                        const MeshField& field, int n_curves, std::uint64_t seed);

}  // namespace anosovlab::deformation
