#include "anosovlab/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <type_traits>

#include "anosovlab/bubble_profiles.hpp"
#include "anosovlab/errors.hpp"
#include "anosovlab/parallel.hpp"
#include "anosovlab/rng.hpp"

namespace anosovlab::surface {

namespace {

constexpr double kPi = std::numbers::pi;

void push_reduced(std::vector<int>& word, int side, int partner) {
  if (!word.empty() && word.back() == partner)
    word.pop_back();
  else
    word.push_back(side);
}

// Radial Laplacian and curvature of a single bump of amplitude A, radius delta.
double bump_laplacian(double A, double delta, double r) {
  if (r >= delta) return 0;
  const double s = r / delta;
  const double q = 1 - s * s;
  const double ratio = r < 1e-8 ? 1.0 : r / std::tanh(r);
  return A / (delta * delta) * (psi_second(s) - 6 * q * q * ratio);
}

double bump_curvature(double A, double delta, double r) {
  if (r >= delta) return -1.0;
  const double u = A * psi(r / delta);
  return std::exp(-2 * u) * (-1 - bump_laplacian(A, delta, r));
}

double bump_max_curvature(double A, double delta, int samples) {
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k)
    best = std::max(best, bump_curvature(A, delta, delta * k / (samples - 1)));
  return best;
}

}  // namespace

// ---------------------------------------------------------------- domain

FuchsianDomain::FuchsianDomain() {
  const double c8 = 1 / std::tan(kPi / 8);  // 1 + sqrt 2
  circumradius_ = std::acosh(c8 * c8);
  inradius_ = std::acosh(c8);
  vertex_radius_ = hyperbolic::distance_to_radius(circumradius_);
  const double m = hyperbolic::distance_to_radius(inradius_);
  center_distance_ = 0.5 * (m + 1 / m);
  side_radius_ = 0.5 * (1 / m - m);
  for (int i = 0; i < kSides; ++i) centers_[i] = std::polar(center_distance_, side_angle(i));
  const Mobius shift = Mobius::translation(2 * inradius_);
  for (int i = 0; i < kSides; ++i) {
    const int j = partner(i);
    if (j < i) continue;
    pairings_[i] = Mobius::rotation(side_angle(j)) * shift * Mobius::rotation(kPi - side_angle(i));
    pairings_[j] = pairings_[i].inverse();  // adjugate: exact inverse of the stored entries
  }
}

Complex FuchsianDomain::vertex(int i) const {
  return std::polar(vertex_radius_, kPi / 4 * ((i % kSides + kSides) % kSides));
}

double FuchsianDomain::side_angle(int i) const { return (2 * i + 1) * kPi / 8; }

int FuchsianDomain::partner(int i) const {
  static constexpr std::array<int, kSides> p{2, 3, 0, 1, 6, 7, 4, 5};
  return p[i];
}

double FuchsianDomain::side_value(int i, Complex z) const {
  return std::norm(z - centers_[i]) - side_radius_ * side_radius_;
}

bool FuchsianDomain::contains(Complex z) const {
  for (int i = 0; i < kSides; ++i)
    if (side_value(i, z) < 0) return false;
  return true;
}

double FuchsianDomain::distance_to_side(int i, Complex z) const {
  return hyperbolic::distance_to_geodesic(z, centers_[i], side_radius_);
}

double FuchsianDomain::distance_to_boundary(Complex z) const {
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kSides; ++i) d = std::min(d, distance_to_side(i, z));
  return d;
}

double FuchsianDomain::boundary_radius(double theta) const {
  double s_min = 1.0;
  for (int i = 0; i < kSides; ++i) {
    const double beta = center_distance_ * std::cos(theta - side_angle(i));
    if (beta <= 1) continue;
    s_min = std::min(s_min, beta - std::sqrt(beta * beta - 1));
  }
  return hyperbolic::radius_to_distance(s_min);
}

double FuchsianDomain::pairing_isometry_residual(int samples) const {
  double worst = 0;
  for (int i = 0; i < kSides; ++i) {
    const int j = partner(i);
    const Complex c = centers_[i];
    const double a0 = std::arg(vertex(i) - c);
    double a1 = std::arg(vertex(i + 1) - c);
    if (a1 - a0 > kPi) a1 -= 2 * kPi;
    if (a0 - a1 > kPi) a1 += 2 * kPi;
    std::vector<Complex> p(samples), q(samples);
    for (int k = 0; k < samples; ++k) {
      p[k] = c + std::polar(side_radius_, a0 + (a1 - a0) * k / (samples - 1));
      q[k] = pairings_[i](p[k]);
      worst = std::max({worst, distance_to_side(i, p[k]), distance_to_side(j, q[k])});
    }
    for (int a = 0; a < samples; ++a)
      for (int b = a + 1; b < samples; ++b)
        worst = std::max(worst, std::abs(hyperbolic::distance(p[a], p[b]) -
                                         hyperbolic::distance(q[a], q[b])));
  }
  return worst;
}

double FuchsianDomain::vertex_angle_sum() const {
  double sum = 0;
  for (int k = 0; k < kSides; ++k) {
    const Complex V = vertex(k);
    // Tangents of side k (towards V_{k+1}) and side k-1 (towards V_{k-1}).
    auto tangent = [&](int side, Complex towards) {
      Complex t = Complex(0, 1) * (V - centers_[side]);
      if ((std::conj(t) * (towards - V)).real() < 0) t = -t;
      return t / std::abs(t);
    };
    const Complex t1 = tangent(k, vertex(k + 1));
    const Complex t2 = tangent((k + kSides - 1) % kSides, vertex(k - 1));
    sum += std::acos(std::clamp((std::conj(t1) * t2).real(), -1.0, 1.0));
  }
  return sum;
}

int FuchsianDomain::vertex_classes() const {
  std::array<int, kSides> parent;
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto nearest = [&](Complex z) {
    int best = 0;
    for (int k = 1; k < kSides; ++k)
      if (std::abs(z - vertex(k)) < std::abs(z - vertex(best))) best = k;
    return best;
  };
  for (int i = 0; i < kSides; ++i)
    for (int k : {i, (i + 1) % kSides}) parent[find(k)] = find(nearest(pairings_[i](vertex(k))));
  int classes = 0;
  for (int k = 0; k < kSides; ++k) classes += find(k) == k;
  return classes;
}

Complex FuchsianDomain::reduce(Complex z, std::vector<int>* word) const {
  for (int iter = 0; iter < 64; ++iter) {
    int worst = -1;
    double value = 0;
    for (int i = 0; i < kSides; ++i) {
      const double s = side_value(i, z);
      if (s < value) {
        value = s;
        worst = i;
      }
    }
    if (worst < 0) return z;
    z = pairings_[worst](z);
    if (word) push_reduced(*word, worst, partner(worst));
  }
  throw DomainError("point could not be reduced into the fundamental domain");
}

// ---------------------------------------------------------------- bumps

double psi(double s) {
  if (std::abs(s) >= 1) return 0;
  const double q = 1 - s * s;
  return q * q * q;
}

double psi_prime(double s) {
  if (std::abs(s) >= 1) return 0;
  const double q = 1 - s * s;
  return -6 * s * q * q;
}

double psi_second(double s) {
  if (std::abs(s) >= 1) return 0;
  const double q = 1 - s * s;
  return -6 * q * q + 24 * s * s * q;
}

BubbledSurface::BubbledSurface(std::vector<Bump> bumps) : bumps_(std::move(bumps)) {
  for (std::size_t i = 0; i < bumps_.size(); ++i) {
    const Bump& b = bumps_[i];
    if (!(b.delta > 0)) throw LayoutError(detail::concat("bump ", i, " has radius ", b.delta));
    if (!domain_.contains(b.center))
      throw LayoutError(detail::concat("bump ", i, " centre lies outside the domain"));
    const double clearance = domain_.distance_to_boundary(b.center);
    if (clearance < 2 * b.delta)
      throw LayoutError(detail::concat("bump ", i, " enters the boundary collar: distance ",
                                       clearance, " < ", 2 * b.delta));
    for (std::size_t j = 0; j < i; ++j) {
      const double d = hyperbolic::distance(b.center, bumps_[j].center);
      if (d <= b.delta + bumps_[j].delta)
        throw LayoutError(detail::concat("bumps ", j, " and ", i, " overlap: distance ", d));
    }
  }
}

double BubbledSurface::u(Complex z) const {
  double sum = 0;
  for (const Bump& b : bumps_) {
    const double d = hyperbolic::distance(z, b.center);
    if (d < b.delta) sum += b.amplitude * psi(d / b.delta);
  }
  return sum;
}

Complex BubbledSurface::grad_u(Complex z) const {
  Complex g = 0;
  for (const Bump& b : bumps_) {
    const Complex den = 1.0 - std::conj(b.center) * z;
    const Complex w = (z - b.center) / den;
    const double aw = std::abs(w);
    if (aw == 0) continue;
    const double d = 2 * std::atanh(std::min(aw, 1.0));
    if (d >= b.delta) continue;
    const Complex mp = (1 - std::norm(b.center)) / (den * den);
    const Complex grad_d = 2.0 * (w / aw) * std::conj(mp) / (1 - aw * aw);
    g += b.amplitude * psi_prime(d / b.delta) / b.delta * grad_d;
  }
  return g;
}

double BubbledSurface::laplacian_u(Complex z) const {
  double sum = 0;
  for (const Bump& b : bumps_) {
    const double d = hyperbolic::distance(z, b.center);
    if (d < b.delta) sum += bump_laplacian(b.amplitude, b.delta, d);
  }
  return sum;
}

int BubbledSurface::bump_containing(Complex z) const {
  for (std::size_t i = 0; i < bumps_.size(); ++i)
    if (hyperbolic::distance(z, bumps_[i].center) < bumps_[i].delta) return int(i);
  return -1;
}

double BubbledSurface::curvature(Complex z) const {
  const int i = bump_containing(z);
  if (i < 0) return -1.0;
  const Bump& b = bumps_[i];
  return bump_curvature(b.amplitude, b.delta, hyperbolic::distance(z, b.center));
}

double BubbledSurface::radial_curvature(int i, double r) const {
  return bump_curvature(bumps_[i].amplitude, bumps_[i].delta, r);
}

double BubbledSurface::max_curvature_of(int i, int samples) const {
  return bump_max_curvature(bumps_[i].amplitude, bumps_[i].delta, samples);
}

double BubbledSurface::max_curvature(int samples) const {
  double best = -1.0;
  for (std::size_t i = 0; i < bumps_.size(); ++i) best = std::max(best, max_curvature_of(int(i), samples));
  return best;
}

double BubbledSurface::bubble_radius(int i) const {
  // Simpson rule for the g-length of a radius, int_0^delta e^u dr.
  const Bump& b = bumps_[i];
  const int n = 2000;
  const double h = b.delta / n;
  double sum = 0;
  for (int k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 1 : (k % 2 ? 4 : 2);
    sum += w * std::exp(b.amplitude * psi(k * h / b.delta));
  }
  return sum * h / 3;
}

double BubbledSurface::max_bubble_radius() const {
  double r = 0;
  for (std::size_t i = 0; i < bumps_.size(); ++i) r = std::max(r, bubble_radius(int(i)));
  return r;
}

GaussBonnetResult BubbledSurface::gauss_bonnet(int n_radial, int n_angular) const {
  if (n_radial < 1 || n_angular < 8 || n_angular % 8 != 0)
    throw DomainError("Gauss-Bonnet grid needs n_radial >= 1 and n_angular a multiple of 8");
  // Hyperbolic area of the octagon (K e^{2u} = -1 away from bumps).
  double area = 0;
  const double dtheta = 2 * kPi / n_angular;
  for (int j = 0; j < n_angular; ++j) {
    const double R = domain_.boundary_radius((j + 0.5) * dtheta);
    const double h = R / n_radial;
    double s = 0;
    for (int k = 0; k < n_radial; ++k) s += std::sinh((k + 0.5) * h);
    area += s * h * dtheta;
  }
  // Radial patches carry K e^{2u} + 1 and e^{2u} - 1, both supported in the bumps.
  double corr_k = 0, corr_v = 0;
  for (std::size_t i = 0; i < bumps_.size(); ++i) {
    const Bump& b = bumps_[i];
    const double h = b.delta / n_radial;
    for (int k = 0; k < n_radial; ++k) {
      const double r = (k + 0.5) * h;
      const double e2u = std::exp(2 * b.amplitude * psi(r / b.delta));
      corr_k += (radial_curvature(int(i), r) * e2u + 1) * std::sinh(r) * h;
      corr_v += (e2u - 1) * std::sinh(r) * h;
    }
  }
  GaussBonnetResult out;
  out.integral = -area + 2 * kPi * corr_k;
  out.volume = area + 2 * kPi * corr_v;
  const double expected = 2 * kPi * euler_characteristic();
  out.rel_error = std::abs(out.integral - expected) / std::abs(expected);
  out.n_radial = n_radial;
  out.n_angular = n_angular;
  return out;
}

BubbledSurface BubbledSurface::with_amplitudes(const std::vector<double>& amplitudes) const {
  if (amplitudes.size() != bumps_.size()) throw DomainError("amplitude count does not match bumps");
  std::vector<Bump> b = bumps_;
  for (std::size_t i = 0; i < b.size(); ++i) b[i].amplitude = amplitudes[i];
  return BubbledSurface(std::move(b));
}

double peak_amplitude(double delta) { return (delta * delta + 6) / 12; }

BubbledSurface calibrate_amplitudes(const BubbledSurface& surface, double target_kplus) {
  if (!(target_kplus > 0)) throw DomainError("calibration target must be positive");
  constexpr int kSamples = 4001;
  std::vector<double> amps;
  for (const Bump& b : surface.bumps()) {
    const double a_peak = peak_amplitude(b.delta);
    const double reachable = bump_max_curvature(a_peak, b.delta, kSamples);
    if (reachable < 0.95 * target_kplus) throw Unreachable(target_kplus, reachable);
    double lo = 0, hi = a_peak;
    const double aim = 0.975 * target_kplus;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * a_peak; ++it) {
      const double mid = 0.5 * (lo + hi);
      (bump_max_curvature(mid, b.delta, kSamples) < aim ? lo : hi) = mid;
    }
    amps.push_back(0.5 * (lo + hi));
  }
  BubbledSurface out = surface.with_amplitudes(amps);
  const double radius = riccati::focal_free_radius(target_kplus);
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double kmax = out.max_curvature_of(int(i), kSamples);
    if (kmax < 0.95 * target_kplus || kmax > target_kplus)
      throw Unreachable(target_kplus, kmax);
    if (out.bubble_radius(int(i)) > radius)
      throw DomainError(detail::concat("bubble ", i, " radius ", out.bubble_radius(int(i)),
                                       " exceeds the focal-free radius ", radius));
  }
  return out;
}

// ---------------------------------------------------------------- metric

Metric::Metric(const BubbledSurface& surface, double rho, std::shared_ptr<const ScalarField> w,
               double kappa)
    : surface_(&surface), rho_(rho), w_(std::move(w)), kappa_(kappa) {}

double Metric::phi(Complex z) const {
  const double pw = (w_ && rho_ != 0) ? rho_ * w_->value(z) : 0.0;
  return surface_->u(z) + pw + hyperbolic::log_disk_factor(z);
}

Complex Metric::grad_phi(Complex z) const {
  Complex g = surface_->grad_u(z) + 2.0 * z / (1 - std::norm(z));
  if (w_ && rho_ != 0) g += rho_ * w_->gradient(z);
  return g;
}

double Metric::curvature(Complex z) const {
  const double K = surface_->curvature(z);
  if (rho_ == 0) return K;
  return std::exp(-2 * rho_ * w(z)) * ((1 - rho_) * K + rho_ * kappa_);
}

// ---------------------------------------------------------------- flow

namespace {

// The metric is evaluated in double; the state may be carried in a wider
// type so that rounding does not accumulate over many steps.
template <typename S>
struct GeodesicRhs {
  const Metric* metric;
  ode::State<S, 4> operator()(S, const ode::State<S, 4>& y) const {
    const Complex z{double(y[0]), double(y[1])};
    const Complex g = metric->grad_phi(z);
    const S gx = g.real(), gy = g.imag();
    const S dot = y[2] * gx + y[3] * gy;
    const S vv = y[2] * y[2] + y[3] * y[3];
    ode::State<S, 4> out;
    out << y[2], y[3], -2 * dot * y[2] + vv * gx, -2 * dot * y[3] + vv * gy;
    return out;
  }
};

template <typename S>
ode::State<S, 4> pack(Complex z, Complex v) {
  ode::State<S, 4> y;
  y << S(z.real()), S(z.imag()), S(v.real()), S(v.imag());
  return y;
}

template <typename S>
Complex position_of(const ode::State<S, 4>& y) {
  return {double(y[0]), double(y[1])};
}
template <typename S>
Complex velocity_of(const ode::State<S, 4>& y) {
  return {double(y[2]), double(y[3])};
}

template <typename S>
ode::DenseStep<double, 4> narrow(const ode::DenseStep<S, 4>& step) {
  if constexpr (std::is_same_v<S, double>) {
    return step;
  } else {
    ode::DenseStep<double, 4> out;
    out.t0 = double(step.t0);
    out.h = double(step.t0 + step.h) - out.t0;
    for (int k = 0; k < 5; ++k) out.rcont[k] = step.rcont[k].template cast<double>();
    return out;
  }
}

double max_step_for(const BubbledSurface& s) {
  double h = 0.5;
  for (const Bump& b : s.bumps()) h = std::min(h, 0.5 * b.delta);
  return h;
}

// Moves z just inside side i when rounding left it marginally outside.
Complex nudge_inside(const FuchsianDomain& D, int i, Complex z) {
  const Complex c = D.side_center(i);
  const Complex d = z - c;
  return c + d / std::abs(d) * (D.side_radius() * (1 + 1e-14));
}

template <typename S>
void run_direction(const Metric& metric, const GeodesicState& init, double target,
                   const FlowOptions& opts, std::vector<TrajectoryPiece>& pieces,
                   GeodesicState& end) {
  using Vec = ode::State<S, 4>;
  const FuchsianDomain& D = metric.surface().domain();
  const GeodesicRhs<S> rhs{&metric};
  ode::IntegratorOptions io;
  io.tol = opts.tol;
  io.max_step = max_step_for(metric.surface());
  ode::AdaptiveIntegrator<S, 4, GeodesicRhs<S>> integ(rhs, S(0), pack<S>(init.z, init.v), io);
  std::vector<int> word = init.word;
  pieces.push_back({{}, word});
  int entered = -1;  // side crossed by the last wrap; may start marginally negative

  while (integ.time() != S(target)) {
    const S ts = integ.time();
    const Vec ys = integ.state();
    integ.step_towards(S(target));
    const ode::DenseStep<S, 4> step = integ.last_step();
    const Complex z1 = position_of(integ.state());

    int side = -1;
    double theta = 2;
    for (int i = 0; i < FuchsianDomain::kSides; ++i) {
      if (D.side_value(i, z1) >= 0) continue;
      double lo = 0, hi = 1;
      const double start_value = D.side_value(i, position_of(ys));
      if (start_value < 0 && i == entered) continue;
      if (start_value < 0) {
        hi = 0;
      } else {
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double val = D.side_value(i, position_of<S>(step.eval(ts + S(mid) * step.h)));
          (val < 0 ? hi : lo) = mid;
        }
      }
      if (hi < theta) {
        theta = hi;
        side = i;
      }
    }
    if (side < 0) {
      pieces.back().solution.push(narrow(step));
      entered = -1;
      continue;
    }

    // Re-step onto the crossing so the wrapped state is error-controlled.
    const S hc = S(theta) * step.h;
    Vec yc = ys;
    if (hc != 0) {
      auto att = ode::DormandPrince45<S, 4>::attempt(rhs, ts, ys, rhs(ts, ys), hc, opts.tol);
      pieces.back().solution.push(narrow(att.dense));
      yc = att.y1;
    }
    const S tc = ts + hc;
    const Complex zc = position_of(yc);
    for (int k = 0; k < FuchsianDomain::kSides; ++k)
      if (std::abs(zc - D.vertex(k)) < opts.corner_tol)
        throw CornerHit(double(tc), zc.real(), zc.imag());

    // Pairings are applied in the state precision.
    using C = std::complex<S>;
    C z(yc[0], yc[1]), v(yc[2], yc[3]);
    int apply = side;
    for (int iter = 0; iter < FuchsianDomain::kSides && apply >= 0; ++iter) {
      const Mobius& A = D.pairing(apply);
      const C a(A.a), b(A.b), c(A.c), d(A.d);
      const C den = c * z + d;
      v = (a * d - b * c) / (den * den) * v;
      z = (a * z + b) / den;
      push_reduced(word, apply, D.partner(apply));
      entered = D.partner(apply);
      apply = -1;
      for (int k = 0; k < FuchsianDomain::kSides; ++k) {
        const Complex zd(double(z.real()), double(z.imag()));
        const double val = D.side_value(k, zd);
        if (val >= 0 || (k == entered && val > -1e-9)) continue;
        if (val > -1e-9)
          z = C(nudge_inside(D, k, zd));
        else
          apply = k;
      }
    }
    if (apply >= 0) throw CornerHit(double(tc), zc.real(), zc.imag());
    const Complex zd(double(z.real()), double(z.imag()));
    v *= S(std::exp(-metric.phi(zd))) / std::abs(v);

    if (pieces.back().solution.empty())
      pieces.back().word = word;
    else
      pieces.push_back({{}, word});
    Vec yn;
    yn << z.real(), z.imag(), v.real(), v.imag();
    integ.reset(tc, yn);
  }
  const Vec y = integ.state();
  end = GeodesicState{position_of(y), velocity_of(y), word};
}

}  // namespace

Trajectory geodesic_flow(const Metric& metric, const GeodesicState& init, double t_lo, double t_hi,
                         const FlowOptions& opts) {
  if (!(t_lo <= 0 && t_hi >= 0 && t_hi > t_lo))
    throw DomainError(detail::concat("invalid flow span [", t_lo, ", ", t_hi, "]"));
  Trajectory traj;
  traj.t0_ = 0;
  traj.t_min_ = t_lo;
  traj.t_max_ = t_hi;
  traj.end_ = traj.start_end_ = init;
  auto run = opts.extended_precision ? run_direction<long double> : run_direction<double>;
  if (t_hi > 0) run(metric, init, t_hi, opts, traj.forward_, traj.end_);
  if (t_lo < 0) run(metric, init, t_lo, opts, traj.backward_, traj.start_end_);
  return traj;
}

const TrajectoryPiece& Trajectory::piece_at(double t) const {
  const double slack = 1e-9 * std::max(1.0, std::abs(t));
  if (t < t_min_ - slack || t > t_max_ + slack) throw DomainExceeded(t, t_min_, t_max_);
  const bool fwd = backward_.empty() || (t >= t0_ && !forward_.empty());
  const auto& pieces = fwd ? forward_ : backward_;
  for (const auto& p : pieces)
    if (!p.solution.empty() && (fwd ? p.solution.t_end() >= t : p.solution.t_end() <= t)) return p;
  for (auto it = pieces.rbegin(); it != pieces.rend(); ++it)
    if (!it->solution.empty()) return *it;
  throw DomainExceeded(t, t_min_, t_max_);
}

Complex Trajectory::position(double t) const { return position_of(piece_at(t).solution.eval(t)); }
Complex Trajectory::velocity(double t) const { return velocity_of(piece_at(t).solution.eval(t)); }
const std::vector<int>& Trajectory::word_at(double t) const { return piece_at(t).word; }

GeodesicState Trajectory::state_at(double t) const {
  const TrajectoryPiece& p = piece_at(t);
  const FlowVec y = p.solution.eval(t);
  return {position_of(y), velocity_of(y), p.word};
}

std::vector<double> Trajectory::wrap_times() const {
  std::vector<double> out;
  for (std::size_t k = 1; k < forward_.size(); ++k)
    if (!forward_[k].solution.empty()) out.push_back(forward_[k].solution.t_begin());
  for (std::size_t k = 1; k < backward_.size(); ++k)
    if (!backward_[k].solution.empty()) out.push_back(backward_[k].solution.t_begin());
  std::sort(out.begin(), out.end());
  return out;
}

GeodesicState unit_state(const Metric& metric, Complex z, double theta) {
  return {z, std::polar(std::exp(-metric.phi(z)), theta), {}};
}

// ---------------------------------------------------------------- along

CurvatureAlong curvature_along(const Metric& metric, const Trajectory& traj) {
  auto shared = std::make_shared<const Trajectory>(traj);
  const BubbledSurface& S = metric.surface();
  CurvatureAlong out{riccati::CurvatureFunction::constant(-1), {}};

  std::vector<BubbleVisit> visits;
  if (!S.bumps().empty()) {
    double delta_min = std::numeric_limits<double>::infinity();
    for (const Bump& b : S.bumps()) delta_min = std::min(delta_min, b.delta);
    const double span = traj.t_max() - traj.t_min();
    const long n = std::max(2L, long(std::ceil(span / std::min(delta_min / 16, 0.01))) + 1);
    auto at = [&](long k) { return k == n - 1 ? traj.t_max() : traj.t_min() + span * double(k) / double(n - 1); };
    auto edge = [&](int bump, double a, double b) {
      // a is outside bump, b inside (either order in time).
      const Bump& B = S.bumps()[bump];
      auto inside = [&](double t) { return hyperbolic::distance(traj.position(t), B.center) < B.delta; };
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (a + b);
        (inside(mid) ? b : a) = mid;
      }
      return 0.5 * (a + b);
    };
    int cur = S.bump_containing(traj.position(at(0)));
    double start = traj.t_min();
    double prev_t = at(0);
    auto close = [&](int bump, double lo, double hi) {
      BubbleVisit v;
      v.bump = bump;
      v.interval = {lo, hi};
      v.word = traj.word_at(0.5 * (lo + hi));
      double km = -std::numeric_limits<double>::infinity();
      for (int k = 0; k <= 400; ++k) km = std::max(km, metric.curvature(traj.position(lo + (hi - lo) * k / 400.0)));
      v.k_max = km;
      visits.push_back(std::move(v));
    };
    for (long k = 1; k < n; ++k) {
      const double t = at(k);
      const int b = S.bump_containing(traj.position(t));
      if (b != cur) {
        if (cur >= 0) close(cur, start, edge(cur, t, prev_t));
        if (b >= 0) start = edge(b, prev_t, t);
        cur = b;
      }
      prev_t = t;
    }
    if (cur >= 0) close(cur, start, traj.t_max());
  }

  std::vector<double> breaks = traj.wrap_times();
  for (const auto& v : visits) {
    breaks.push_back(v.interval.lo);
    breaks.push_back(v.interval.hi);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  const Metric m = metric;
  out.K = riccati::CurvatureFunction(
      [shared, m](double t) { return m.curvature(shared->position(t)); },
      {traj.t_min(), traj.t_max()}, riccati::Smoothness::C2, std::move(breaks));
  out.visits = std::move(visits);
  return out;
}

// ---------------------------------------------------------------- statistics

SeparationStats bubble_separation_stats(const Metric& metric, int n_geodesics, double horizon_T,
                                        std::uint64_t seed, double epsilon, double mu) {
  const BubbledSurface& S = metric.surface();
  const FuchsianDomain& D = S.domain();
  const double inf = std::numeric_limits<double>::infinity();
  double delta_max = 0;
  for (const Bump& b : S.bumps()) delta_max = std::max(delta_max, b.delta);

  struct Slot {
    bool corner = false;
    int visits = 0;
    double gap_any = std::numeric_limits<double>::infinity();
    double gap_lift = std::numeric_limits<double>::infinity();
  };
  std::vector<Slot> slots(std::max(0, n_geodesics));
  const double cosh_r = std::cosh(D.circumradius());
  parallel_for(slots.size(), [&](std::size_t g) {
    Rng rng(Rng::derive(seed, g));
    Complex z;
    do {
      const double r = std::acosh(1 + rng.uniform() * (cosh_r - 1));
      z = std::polar(hyperbolic::distance_to_radius(r), rng.uniform(0, 2 * kPi));
    } while (!D.contains(z));
    const double theta = rng.uniform(0, 2 * kPi);
    Slot& s = slots[g];
    try {
      const Trajectory traj = geodesic_flow(metric, unit_state(metric, z, theta), horizon_T);
      if (S.bumps().empty()) return;
      const auto visits = curvature_along(metric, traj).visits;
      s.visits = int(visits.size());
      for (std::size_t k = 1; k < visits.size(); ++k) {
        s.gap_any = std::min(s.gap_any, visits[k].interval.lo - visits[k - 1].interval.hi);
        for (std::size_t j = 0; j < k; ++j)
          if (visits[j].bump == visits[k].bump && visits[j].word == visits[k].word)
            s.gap_lift = std::min(s.gap_lift, visits[k].interval.lo - visits[j].interval.hi);
      }
    } catch (const CornerHit&) {
      s.corner = true;
    }
  });

  SeparationStats st;
  st.geodesics = n_geodesics;
  st.min_gap_any = inf;
  st.min_gap_same_lift = inf;
  st.required_gap = bubbles::lambda_of_epsilon(epsilon);
  st.required_same_lift = 2 * delta_max * std::exp(mu);
  std::uint64_t lift_seed = 0;
  for (std::size_t g = 0; g < slots.size(); ++g) {
    const Slot& s = slots[g];
    st.corner_hits += s.corner;
    st.visits += s.visits;
    if (s.gap_any < st.min_gap_any) {
      st.min_gap_any = s.gap_any;
      st.worst_seed = Rng::derive(seed, g);
    }
    if (s.gap_lift < st.min_gap_same_lift) {
      st.min_gap_same_lift = s.gap_lift;
      lift_seed = Rng::derive(seed, g);
    }
  }
  if (st.min_gap_any < st.required_gap)
    throw SeparationViolated(st.worst_seed, st.min_gap_any, st.required_gap);
  if (st.min_gap_same_lift < st.required_same_lift)
    throw SeparationViolated(lift_seed, st.min_gap_same_lift, st.required_same_lift);
  return st;
}

std::vector<std::vector<double>> bump_clearances(const BubbledSurface& surface) {
  const auto& b = surface.bumps();
  std::vector<std::vector<double>> out(b.size(), std::vector<double>(b.size(), 0));
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (i != j)
        out[i][j] = hyperbolic::distance(b[i].center, b[j].center) - b[i].delta - b[j].delta;
  return out;
}

}  // namespace anosovlab::surface
