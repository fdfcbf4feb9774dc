#include "anosovlab/deformation.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <set>

#include "anosovlab/errors.hpp"
#include "anosovlab/parallel.hpp"
#include "anosovlab/rng.hpp"

namespace anosovlab::deformation {

namespace {

constexpr double kPi = std::numbers::pi;

double cross(Complex a, Complex b) { return a.real() * b.imag() - a.imag() * b.real(); }
double dot(Complex a, Complex b) { return a.real() * b.real() + a.imag() * b.imag(); }

// e^{2 phi} of g = e^{2u} g_hyp in disk coordinates.
double area_density(const BubbledSurface& s, Complex z) {
  const double f = 2.0 / (1.0 - std::norm(z));
  return std::exp(2 * s.u(z)) * f * f;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

// ---------------------------------------------------------------- mesh

int SurfaceMesh::euler_characteristic() const {
  std::set<std::pair<int, int>> edges;
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k) {
      const int a = vertex_of[t[k]], b = vertex_of[t[(k + 1) % 3]];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  return n_vertices - int(edges.size()) + int(triangles.size());
}

double SurfaceMesh::max_abs_row_sum() const {
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(n_vertices);
  return (laplacian * ones).cwiseAbs().maxCoeff();
}

bool SurfaceMesh::connected() const {
  std::vector<char> seen(n_vertices, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (Eigen::SparseMatrix<double>::InnerIterator it(laplacian, v); it; ++it)
      if (!seen[it.row()]) {
        seen[it.row()] = 1;
        ++count;
        q.push(int(it.row()));
      }
  }
  return count == n_vertices;
}

SurfaceMesh build_mesh(const BubbledSurface& surface, const MeshOptions& opts) {
  if (!(opts.resolution > 0) || !(opts.h_max > 0) || !(opts.h_bump > 0) || !(opts.growth > 1))
    throw DomainError("invalid mesh options");
  const auto& D = surface.domain();
  const double R_in = D.inradius();
  const double h_far = opts.h_max / opts.resolution;

  struct Zone {
    double r, delta, h;
  };
  std::vector<Zone> zones;
  for (const auto& b : surface.bumps())
    zones.push_back({hyperbolic::distance(0, b.center), b.delta,
                     std::min(h_far, opts.h_bump * b.delta / opts.resolution)});
  auto target = [&](double s) {
    double h = h_far;
    for (const Zone& z : zones)
      h = std::min(h, z.h + (opts.growth - 1) * std::max(0.0, std::abs(s - z.r) - 1.5 * z.delta));
    return h;
  };

  // Ring levels in the base radius s = nu R_in.
  std::vector<double> levels{0};
  while (true) {
    const double s = levels.back();
    const double h = target(s);
    if (s + 1.5 * h >= R_in) break;
    levels.push_back(s + h);
  }
  levels.push_back(R_in);

  auto ring_radius = [&](double nu, double theta) {
    const double x = std::clamp((nu - 0.5) / 0.5, 0.0, 1.0);
    const double b = x * x * (3 - 2 * x);
    return nu * (R_in + b * (D.boundary_radius(theta) - R_in));
  };

  SurfaceMesh mesh;
  mesh.points.push_back(0);
  std::vector<int> offset{0}, count{1};
  int n = 8;
  for (std::size_t k = 1; k < levels.size(); ++k) {
    const double nu = levels[k] / R_in;
    auto ring = [&](int m) {
      std::vector<Complex> pts(m);
      for (int j = 0; j < m; ++j) {
        const double theta = 2 * kPi * j / m;
        pts[j] = std::polar(hyperbolic::distance_to_radius(ring_radius(nu, theta)), theta);
      }
      return pts;
    };
    std::vector<Complex> pts = ring(n);
    double spacing = 0;
    for (int j = 0; j < n; ++j) spacing = std::max(spacing, hyperbolic::distance(pts[j], pts[(j + 1) % n]));
    if (k > 1 && spacing > 1.5 * target(levels[k])) {
      n *= 2;
      pts = ring(n);
    }
    offset.push_back(int(mesh.points.size()));
    count.push_back(n);
    mesh.points.insert(mesh.points.end(), pts.begin(), pts.end());
  }

  // Fan around the centre, then ring-to-ring strips.
  for (int j = 0; j < count[1]; ++j)
    mesh.triangles.push_back({0, offset[1] + j, offset[1] + (j + 1) % count[1]});
  for (std::size_t k = 1; k + 1 < levels.size(); ++k) {
    const int ni = count[k], no = count[k + 1];
    auto in = [&](int j) { return offset[k] + (j % ni + ni) % ni; };
    auto out = [&](int j) { return offset[k + 1] + (j % no + no) % no; };
    if (no == ni) {
      for (int j = 0; j < ni; ++j) {
        mesh.triangles.push_back({in(j), out(j), out(j + 1)});
        mesh.triangles.push_back({in(j), out(j + 1), in(j + 1)});
      }
    } else {
      for (int j = 0; j < ni; ++j) {
        mesh.triangles.push_back({in(j), out(2 * j), out(2 * j + 1)});
        mesh.triangles.push_back({in(j), out(2 * j + 1), in(j + 1)});
        mesh.triangles.push_back({in(j + 1), out(2 * j + 1), out(2 * j + 2)});
      }
    }
  }

  // Identify the outer ring through the side pairings: the point q steps
  // along side i corresponds to q steps backwards along its partner.
  const int n_out = count.back(), first = offset.back(), per_side = n_out / 8;
  UnionFind uf(int(mesh.points.size()));
  for (int i = 0; i < 8; ++i) {
    const int j = D.partner(i);
    for (int q = 0; q <= per_side; ++q)
      uf.unite(first + (i * per_side + q) % n_out, first + (j * per_side + per_side - q) % n_out);
  }
  mesh.vertex_of.assign(mesh.points.size(), -1);
  std::vector<int> id_of_root(mesh.points.size(), -1);
  for (std::size_t p = 0; p < mesh.points.size(); ++p) {
    const int r = uf.find(int(p));
    if (id_of_root[r] < 0) {
      id_of_root[r] = mesh.n_vertices++;
      mesh.position.push_back(mesh.points[r]);
    }
    mesh.vertex_of[p] = id_of_root[r];
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.triangles.size() * 12);
  mesh.mass = Eigen::VectorXd::Zero(mesh.n_vertices);
  for (const auto& t : mesh.triangles) {
    const Complex p[3] = {mesh.points[t[0]], mesh.points[t[1]], mesh.points[t[2]]};
    const double area2 = std::abs(cross(p[1] - p[0], p[2] - p[0]));
    if (!(area2 > 0)) throw DomainError("degenerate mesh triangle");
    const int v[3] = {mesh.vertex_of[t[0]], mesh.vertex_of[t[1]], mesh.vertex_of[t[2]]};
    if (v[0] == v[1] || v[1] == v[2] || v[0] == v[2]) throw DomainError("triangle collapsed by identification");
    for (int k = 0; k < 3; ++k) {
      const int a = k, b = (k + 1) % 3, c = (k + 2) % 3;
      const double cot = dot(p[b] - p[a], p[c] - p[a]) / area2;
      const double wgt = 0.5 * cot;
      trip.emplace_back(v[b], v[c], wgt);
      trip.emplace_back(v[c], v[b], wgt);
      trip.emplace_back(v[b], v[b], -wgt);
      trip.emplace_back(v[c], v[c], -wgt);
    }
    const double density = (area_density(surface, 0.5 * (p[0] + p[1])) +
                            area_density(surface, 0.5 * (p[1] + p[2])) +
                            area_density(surface, 0.5 * (p[2] + p[0]))) /
                           3;
    const double area_g = 0.5 * area2 * density;
    for (int k = 0; k < 3; ++k) mesh.mass[v[k]] += area_g / 3;
  }
  mesh.laplacian.resize(mesh.n_vertices, mesh.n_vertices);
  mesh.laplacian.setFromTriplets(trip.begin(), trip.end());
  mesh.laplacian.makeCompressed();
  return mesh;
}

// ---------------------------------------------------------------- h and w

HField compute_h(const BubbledSurface& surface, const SurfaceMesh& mesh, double epsilon) {
  HField out;
  out.volume = mesh.volume();
  out.kappa = 2 * kPi * BubbledSurface::euler_characteristic() / out.volume;
  if (epsilon >= -out.kappa)
    throw HypothesisViolated(detail::concat("epsilon ", epsilon, " >= -2 pi chi / vol = ", -out.kappa),
                             epsilon + out.kappa);
  out.K.resize(mesh.n_vertices);
  for (int v = 0; v < mesh.n_vertices; ++v) out.K[v] = surface.curvature(mesh.position[v]);
  out.h = -(out.K.array() - out.kappa).matrix();
  out.shift = mesh.mass.dot(out.h) / out.volume;
  out.h.array() -= out.shift;
  // Residue at rounding level (constant curvature) is exactly zero.
  const double floor = 16 * std::numeric_limits<double>::epsilon() * (out.K.cwiseAbs().maxCoeff() + std::abs(out.kappa));
  if (out.h.cwiseAbs().maxCoeff() <= floor) out.h.setZero();
  out.mean_after = mesh.mass.dot(out.h) / out.volume;
  return out;
}

PoissonResult solve_poisson(const SurfaceMesh& mesh, const Eigen::VectorXd& h,
                            const PoissonOptions& opts) {
  PoissonResult out;
  const Eigen::VectorXd b = mesh.mass.cwiseProduct(h);
  const double bnorm = b.norm();
  if (bnorm == 0) {
    out.w = Eigen::VectorXd::Zero(mesh.n_vertices);
    return out;
  }
  // -L is symmetric positive semidefinite with the constants as kernel.
  const Eigen::SparseMatrix<double> S = -mesh.laplacian;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(opts.tol);
  cg.setMaxIterations(opts.max_iterations);
  cg.compute(S);
  Eigen::VectorXd w = cg.solve(b);
  out.iterations = long(cg.iterations());
  out.residual = (S * w - b).norm() / bnorm;
  if (!w.allFinite() || out.residual > opts.tol) throw NoConvergence(out.iterations, out.residual);
  w.array() -= w.minCoeff();
  out.w = std::move(w);
  out.mu = out.w.maxCoeff();
  return out;
}

DeformedCurvature curvature_of_deformed(const SurfaceMesh& mesh, const HField& h,
                                        const PoissonResult& w, double rho) {
  DeformedCurvature out;
  const Eigen::ArrayXd factor = (-2 * rho * w.w.array()).exp();
  out.algebraic = (factor * (h.K.array() + rho * h.h.array())).matrix();
  const Eigen::ArrayXd lap = (mesh.laplacian * w.w).array() / mesh.mass.array();
  out.discrete = (factor * (h.K.array() - rho * lap)).matrix();
  const double mh = mesh.mass.cwiseProduct(h.h).norm();
  const double diff = mesh.mass.cwiseProduct(out.algebraic - out.discrete).norm();
  out.disagreement = mh > 0 ? diff / mh : diff;
  out.tolerance = 10 * w.residual;
  if (out.disagreement > out.tolerance) throw FormulaMismatch(out.disagreement, out.tolerance);
  return out;
}

double DeformationPath::zeta() const { return std::exp(-2 * mu()) * epsilon; }

std::vector<double> default_rho_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 10; ++k) g.push_back(k / 10.0);
  return g;
}

DeformationPath build_path(const BubbledSurface& surface, const MeshOptions& mesh_opts,
                           double epsilon, std::vector<double> rho_grid,
                           const PoissonOptions& poisson) {
  if (rho_grid.empty()) throw DomainError("empty rho grid");
  for (std::size_t k = 0; k < rho_grid.size(); ++k) {
    if (rho_grid[k] < 0 || rho_grid[k] > 1) throw DomainError("rho outside [0, 1]");
    if (k > 0 && rho_grid[k] <= rho_grid[k - 1]) throw DomainError("rho grid must be increasing");
  }
  DeformationPath path;
  path.mesh = std::make_shared<const SurfaceMesh>(build_mesh(surface, mesh_opts));
  path.epsilon = epsilon;
  path.rho_grid = std::move(rho_grid);
  path.h = compute_h(surface, *path.mesh, epsilon);
  path.poisson = solve_poisson(*path.mesh, path.h.h, poisson);

  const SurfaceMesh& mesh = *path.mesh;
  std::vector<char> outside(mesh.n_vertices);
  for (int v = 0; v < mesh.n_vertices; ++v) outside[v] = surface.bump_containing(mesh.position[v]) < 0;
  path.per_rho.resize(path.rho_grid.size());
  parallel_for(path.rho_grid.size(), [&](std::size_t k) {
    const double rho = path.rho_grid[k];
    const DeformedCurvature dc = curvature_of_deformed(mesh, path.h, path.poisson, rho);
    RhoDiagnostics& d = path.per_rho[k];
    d.rho = rho;
    d.K = dc.algebraic;
    d.disagreement = dc.disagreement;
    d.k_min = d.K.minCoeff();
    d.k_max = d.K.maxCoeff();
    d.k_max_outside = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < mesh.n_vertices; ++v) {
      if (outside[v]) d.k_max_outside = std::max(d.k_max_outside, d.K[v]);
      d.positive_vertices += d.K[v] >= 0;
    }
    const Eigen::ArrayXd dA = (2 * rho * path.poisson.w.array()).exp() * mesh.mass.array();
    d.gauss_bonnet = (d.K.array() * dA).sum();
  });
  return path;
}

PathReport verify_path_properties(const BubbledSurface& surface, const DeformationPath& path,
                                  bool throw_on_failure) {
  PathReport rep;
  rep.zeta = path.zeta();
  const SurfaceMesh& mesh = *path.mesh;
  const Eigen::VectorXd& K = path.h.K;
  const double gb = 2 * kPi * BubbledSurface::euler_characteristic();
  auto fail = [&](const char* tag, long v, double rho, double value) {
    rep.pass = false;
    if (throw_on_failure) throw PropertyFailed(tag, v, rho, value);
  };
  std::vector<char> outside(mesh.n_vertices);
  for (int v = 0; v < mesh.n_vertices; ++v) outside[v] = surface.bump_containing(mesh.position[v]) < 0;

  for (std::size_t k = 0; k < path.per_rho.size(); ++k) {
    const RhoDiagnostics& d = path.per_rho[k];
    PropertyCheck c;
    c.rho = d.rho;
    c.p1_margin = std::numeric_limits<double>::infinity();
    c.p2_worst = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < mesh.n_vertices; ++v) {
      if (outside[v]) {
        const double m = -rep.zeta - d.K[v];
        c.p1_margin = std::min(c.p1_margin, m);
        if (!(m > 0) && c.p1) {
          c.p1 = false;
          fail("P1", v, d.rho, d.K[v]);
        }
      }
      if (K[v] < -rep.slack) {
        c.p2_worst = std::max(c.p2_worst, d.K[v]);
        if (!(d.K[v] < 0) && c.p2) {
          c.p2 = false;
          fail("P2", v, d.rho, d.K[v]);
        }
      }
      if (K[v] >= 0 && k + 1 < path.per_rho.size() && d.K[v] >= 0 &&
          !(path.per_rho[k + 1].K[v] < d.K[v]) && c.p3) {
        c.p3 = false;
        fail("P3", v, d.rho, path.per_rho[k + 1].K[v] - d.K[v]);
      }
    }
    if (std::abs(d.rho - 1) < 1e-12 && !(d.k_max < 0)) {
      c.p4 = false;
      fail("P4", -1, d.rho, d.k_max);
    }
    c.p5_rel_error = std::abs(d.gauss_bonnet - gb) / std::abs(gb);
    if (!(c.p5_rel_error <= rep.gb_tol)) {
      c.p5 = false;
      fail("P5", -1, d.rho, c.p5_rel_error);
    }
    rep.checks.push_back(c);
  }
  return rep;
}

// ---------------------------------------------------------------- field

MeshField::MeshField(const BubbledSurface& surface, std::shared_ptr<const SurfaceMesh> mesh,
                     const Eigen::VectorXd& w)
    : surface_(&surface), mesh_(std::move(mesh)) {
  const SurfaceMesh& m = *mesh_;
  const std::size_t np = m.points.size();
  smooth_.resize(np);
  for (std::size_t p = 0; p < np; ++p) smooth_[p] = w[m.vertex_of[p]] + surface.u(m.points[p]);

  gradient_.assign(np, 0);
  std::vector<double> weight(np, 0);
  for (const auto& t : m.triangles) {
    const Complex p0 = m.points[t[0]], e1 = m.points[t[1]] - p0, e2 = m.points[t[2]] - p0;
    const double det = cross(e1, e2);
    const double f1 = smooth_[t[1]] - smooth_[t[0]], f2 = smooth_[t[2]] - smooth_[t[0]];
    // Solve [e1; e2] g = [f1; f2].
    const Complex g((f1 * e2.imag() - f2 * e1.imag()) / det, (f2 * e1.real() - f1 * e2.real()) / det);
    const double a = 0.5 * std::abs(det);
    for (int k = 0; k < 3; ++k) {
      gradient_[t[k]] += a * g;
      weight[t[k]] += a;
    }
  }
  for (std::size_t p = 0; p < np; ++p) gradient_[p] /= weight[p];

  double extent = 0;
  for (Complex p : m.points) extent = std::max({extent, std::abs(p.real()), std::abs(p.imag())});
  lo_ = -extent - 1e-9;
  grid_ = std::max(1, int(std::sqrt(double(m.triangles.size()) / 2)));
  cell_ = 2 * (extent + 1e-9) / grid_;
  buckets_.assign(std::size_t(grid_) * grid_, {});
  auto cell_of = [&](double x) { return std::clamp(int((x - lo_) / cell_), 0, grid_ - 1); };
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
    for (int k = 0; k < 3; ++k) {
      const Complex p = m.points[m.triangles[t][k]];
      x0 = std::min(x0, p.real());
      x1 = std::max(x1, p.real());
      y0 = std::min(y0, p.imag());
      y1 = std::max(y1, p.imag());
    }
    for (int i = cell_of(x0); i <= cell_of(x1); ++i)
      for (int j = cell_of(y0); j <= cell_of(y1); ++j) buckets_[std::size_t(i) * grid_ + j].push_back(int(t));
  }
}

MeshField::Hit MeshField::locate(Complex z) const {
  const SurfaceMesh& m = *mesh_;
  auto cell_of = [&](double x) { return std::clamp(int((x - lo_) / cell_), 0, grid_ - 1); };
  const int ci = cell_of(z.real()), cj = cell_of(z.imag());
  Hit best{-1, {0, 0, 0}};
  double best_score = -std::numeric_limits<double>::infinity();
  for (int ring = 0; ring <= 2 && !(best_score >= -1e-12); ++ring) {
    for (int i = std::max(0, ci - ring); i <= std::min(grid_ - 1, ci + ring); ++i)
      for (int j = std::max(0, cj - ring); j <= std::min(grid_ - 1, cj + ring); ++j) {
        if (std::max(std::abs(i - ci), std::abs(j - cj)) != ring) continue;
        for (int t : buckets_[std::size_t(i) * grid_ + j]) {
          const auto& tri = m.triangles[t];
          const Complex p0 = m.points[tri[0]], e1 = m.points[tri[1]] - p0, e2 = m.points[tri[2]] - p0;
          const Complex d = z - p0;
          const double det = cross(e1, e2);
          const double b1 = cross(d, e2) / det, b2 = cross(e1, d) / det, b0 = 1 - b1 - b2;
          const double score = std::min({b0, b1, b2});
          if (score > best_score) {
            best_score = score;
            best = {t, {b0, b1, b2}};
          }
          if (score >= 0) return best;
        }
      }
  }
  if (best.tri < 0) throw DomainError("point outside the mesh");
  // Clamp to the nearest triangle (thin lunes between boundary chords and arcs).
  double sum = 0;
  for (double& b : best.bary) sum += (b = std::max(b, 0.0));
  for (double& b : best.bary) b /= sum;
  return best;
}

double MeshField::value(Complex z) const {
  const Hit h = locate(z);
  const auto& t = mesh_->triangles[h.tri];
  double v = -surface_->u(z);
  for (int k = 0; k < 3; ++k) v += h.bary[k] * smooth_[t[k]];
  return v;
}

Complex MeshField::gradient(Complex z) const {
  const Hit h = locate(z);
  const auto& t = mesh_->triangles[h.tri];
  Complex g = -surface_->grad_u(z);
  for (int k = 0; k < 3; ++k) g += h.bary[k] * gradient_[t[k]];
  return g;
}

double MeshField::nodal_value(Complex z, const Eigen::VectorXd& w) const {
  const Hit h = locate(z);
  const auto& t = mesh_->triangles[h.tri];
  double v = 0;
  for (int k = 0; k < 3; ++k) v += h.bary[k] * w[mesh_->vertex_of[t[k]]];
  return v;
}

surface::Metric deformed_metric(const BubbledSurface& surface, const DeformationPath& path,
                                std::shared_ptr<const MeshField> field, double rho) {
  return surface::Metric(surface, rho, std::move(field), path.kappa_eff());
}

// ---------------------------------------------------------------- lengths

LengthReport verify_length_monotonicity(const BubbledSurface& surface, const DeformationPath& path,
                                        const MeshField& field, int n_curves, std::uint64_t seed) {
  const auto& D = surface.domain();
  const Eigen::VectorXd& w = path.poisson.w;
  LengthReport rep;
  rep.rho_grid = path.rho_grid;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  constexpr int kSegments = 200;

  Rng rng(seed);
  auto random_point = [&](double max_r) {
    Complex z;
    do z = std::polar(hyperbolic::distance_to_radius(rng.uniform(0, max_r)), rng.uniform(0, 2 * kPi));
    while (!D.contains(z));
    return z;
  };
  for (int c = 0; c < n_curves; ++c) {
    std::vector<Complex> pts(kSegments + 1);
    bool ok = true;
    if (c % 2 == 0) {
      // Cubic Bezier curve.
      const Complex p0 = random_point(2.0), p1 = random_point(2.0), p2 = random_point(2.0),
                    p3 = random_point(2.0);
      for (int k = 0; k <= kSegments; ++k) {
        const double s = double(k) / kSegments, r = 1 - s;
        pts[k] = r * r * r * p0 + 3 * r * r * s * p1 + 3 * r * s * s * p2 + s * s * s * p3;
      }
    } else {
      // Segment of a hyperbolic geodesic of the base metric.
      const Complex p = random_point(1.5);
      const double theta = rng.uniform(0, 2 * kPi), len = rng.uniform(0.2, 2.0);
      const surface::Mobius back = surface::Mobius::to_origin(p).inverse();
      for (int k = 0; k <= kSegments; ++k)
        pts[k] = back(std::polar(std::tanh(0.5 * len * k / kSegments), theta));
    }
    for (Complex z : pts) ok = ok && D.contains(z);
    if (!ok) {
      --c;
      continue;
    }
    ++rep.curves;
    for (int k = 0; k < kSegments; ++k) {
      const Complex mid = 0.5 * (pts[k] + pts[k + 1]);
      const double base = std::abs(pts[k + 1] - pts[k]) *
                          std::exp(surface.u(mid) + hyperbolic::log_disk_factor(mid));
      const double wm = field.nodal_value(mid, w);
      double prev = base * std::exp(path.rho_grid.front() * wm);
      for (std::size_t r = 1; r < path.rho_grid.size(); ++r) {
        const double len = base * std::exp(path.rho_grid[r] * wm);
        if (len < prev)
          throw MonotonicityViolated(detail::concat("segment length decreased from rho=", path.rho_grid[r - 1],
                                                    " to rho=", path.rho_grid[r], " (w=", wm, ")"));
        rep.min_ratio = std::min(rep.min_ratio, len / prev);
        prev = len;
      }
      ++rep.segments;
    }
  }

  // Radial g_rho lengths from each bump centre to its support boundary.
  const double mu = path.mu();
  for (const auto& b : surface.bumps()) {
    const surface::Mobius back = surface::Mobius::to_origin(b.center).inverse();
    const int n = 400;
    for (int a = 0; a < 16; ++a) {
      const double theta = 2 * kPi * a / 16;
      for (double rho : path.rho_grid) {
        double len = 0, len0 = 0;
        for (int k = 0; k <= n; ++k) {
          const double r = b.delta * k / n;
          const double wt = (k == 0 || k == n) ? 1 : (k % 2 ? 4 : 2);
          const Complex z = back(std::polar(std::tanh(0.5 * r), theta));
          const double eu = std::exp(b.amplitude * surface::psi(r / b.delta));
          len0 += wt * eu;
          len += wt * eu * std::exp(rho * field.nodal_value(z, w));
        }
        const double ratio = len / (len0 * std::exp(rho * mu));
        rep.max_radius_ratio = std::max(rep.max_radius_ratio, ratio);
        if (ratio > 1 + 1e-14)
          throw MonotonicityViolated(detail::concat("bubble radius exceeds delta e^{rho mu} at rho=", rho));
      }
    }
  }
  return rep;
}

}  // namespace anosovlab::deformation
