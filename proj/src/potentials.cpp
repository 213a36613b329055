#include "mdwkb/potentials.hpp"

#include <algorithm>
#include <cmath>

#include "mdwkb/dirac.hpp"

namespace mdwkb {

template <typename Field>
void BasicSourceHistory<Field>::at(double t, Field& out) const {
  if (values.empty()) throw Error(ErrorKind::HistoryTooShort, "source history is empty");
  if (t < 0.0) {
    out = Field::Zero(values.front().size());
    return;
  }
  const double last = static_cast<double>(values.size() - 1);
  const double s = dt > 0.0 ? t / dt : 0.0;
  if (s > last * (1.0 + 1e-12) + 1e-12)
    throw Error(ErrorKind::HistoryTooShort,
                "time " + std::to_string(t) + " is past the last source sample " + std::to_string(last_time()));
  const auto n = static_cast<std::size_t>(std::min(std::floor(s), last));
  if (n + 1 >= values.size()) {
    out = values.back();
    return;
  }
  const double w = s - static_cast<double>(n);
  out = values[n] * (1.0 - w) + values[n + 1] * w;
}

template <typename Field>
Field BasicSourceHistory<Field>::at(double t) const {
  Field out;
  at(t, out);
  return out;
}

template struct BasicSourceHistory<RealField>;
template struct BasicSourceHistory<ComplexField>;

PotentialState PotentialState::zeros(std::size_t n) {
  const auto c = static_cast<Eigen::Index>(n);
  return {RealField::Zero(c), VectorField::Zero(3, c), RealField::Zero(c), VectorField::Zero(3, c), 0.0};
}

template <typename Field>
Field laplacian(const GridSpec& g, const Field& f, int order) {
  using S = typename Field::Scalar;
  if (order != 2 && order != 4) throw Error(ErrorKind::InvalidArgument, "laplacian order must be 2 or 4");
  Field out = Field::Zero(f.size());
  const int nx = g.points[0], ny = g.points[1], nz = g.points[2];
  const std::array<std::ptrdiff_t, 3> st{1, nx, static_cast<std::ptrdiff_t>(nx) * ny};
  for (int a = 0; a < g.active_axes(); ++a) {
    const int m = g.points[a];
    const bool per = g.periodic[a];
    const double inv = 1.0 / (g.spacing(a) * g.spacing(a));
    std::ptrdiff_t idx = 0;
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i, ++idx) {
          const int q = a == 0 ? i : (a == 1 ? j : k);
          auto nb = [&](int off) -> S {
            int v = q + off;
            if (per) {
              v = (v + 2 * m) % m;
            } else if (v < 0 || v >= m) {
              return S(0);
            }
            return f(idx + (v - q) * st[a]);
          };
          const S c = f(idx);
          if (order == 2)
            out(idx) += (nb(-1) - 2.0 * c + nb(1)) * inv;
          else
            out(idx) += (-nb(-2) + 16.0 * nb(-1) - 30.0 * c + 16.0 * nb(1) - nb(2)) * (inv / 12.0);
        }
  }
  return out;
}

template RealField laplacian(const GridSpec&, const RealField&, int);
template ComplexField laplacian(const GridSpec&, const ComplexField&, int);

template <typename Field>
double WaveStepper<Field>::max_cfl(int dims, int spatial_order) {
  return (spatial_order == 4 ? std::sqrt(3.0) / 2.0 : 1.0) / std::sqrt(static_cast<double>(dims));
}

namespace {

double min_spacing(const GridSpec& g) {
  double h = g.spacing(0);
  for (int a = 1; a < g.active_axes(); ++a) h = std::min(h, g.spacing(a));
  return h;
}

}  // namespace

template <typename Field>
WaveStepper<Field>::WaveStepper(const GridSpec& grid, double dt, int spatial_order)
    : grid_(grid), dt_(dt), order_(spatial_order) {
  grid.validate();
  if (spatial_order != 2 && spatial_order != 4) throw Error(ErrorKind::InvalidArgument, "spatial order must be 2 or 4");
  const double c = dt / min_spacing(grid);
  if (!(dt > 0.0) || c > max_cfl(grid.active_axes(), spatial_order) * (1.0 + 1e-12))
    throw Error(ErrorKind::CFLViolation, "dt/h = " + std::to_string(c) + " exceeds the leapfrog bound " +
                                             std::to_string(max_cfl(grid.active_axes(), spatial_order)));
  u_ = Field::Zero(static_cast<Eigen::Index>(grid.size()));
  prev_ = u_;
}

template <typename Field>
void WaveStepper<Field>::step(const Field& f) {
  const double dt2 = dt_ * dt_;
  if (steps_ == 0) {
    prev_ = u_;
    u_ = (0.5 * dt2) * f;
  } else {
    Field next = 2.0 * u_ - prev_ + dt2 * (laplacian(grid_, u_, order_) + f);
    prev_.swap(u_);
    u_.swap(next);
  }
  ++steps_;
}

template <typename Field>
Field WaveStepper<Field>::time_derivative() const {
  return (u_ - prev_) / dt_;
}

template class WaveStepper<RealField>;
template class WaveStepper<ComplexField>;

namespace {

template <typename Field>
WaveTrajectory<Field> fdtd_impl(const BasicSourceHistory<Field>& source, int n_steps, double cfl, int order,
                                int store_every) {
  const GridSpec& g = source.grid;
  g.validate();
  if (n_steps < 0 || store_every < 1) throw Error(ErrorKind::InvalidArgument, "bad step counts");
  if (!(cfl > 0.0) || cfl > WaveStepper<Field>::max_cfl(g.active_axes(), order) * (1.0 + 1e-12))
    throw Error(ErrorKind::CFLViolation, "cfl " + std::to_string(cfl) + " outside (0, " +
                                             std::to_string(WaveStepper<Field>::max_cfl(g.active_axes(), order)) +
                                             "]");
  const double dt = cfl * min_spacing(g);
  WaveStepper<Field> w(g, dt, order);
  WaveTrajectory<Field> out;
  out.times.push_back(0.0);
  out.values.push_back(w.value());
  Field f;
  for (int s = 0; s < n_steps; ++s) {
    source.at(s * dt, f);
    w.step(f);
    if ((s + 1) % store_every == 0 || s + 1 == n_steps) {
      out.times.push_back(w.time());
      out.values.push_back(w.value());
    }
  }
  return out;
}

}  // namespace

WaveTrajectory<RealField> wave_fdtd(const SourceHistory& source, int n_steps, double cfl, int spatial_order,
                                    int store_every) {
  return fdtd_impl(source, n_steps, cfl, spatial_order, store_every);
}

WaveTrajectory<ComplexField> wave_fdtd(const ComplexSourceHistory& source, int n_steps, double cfl,
                                       int spatial_order, int store_every) {
  return fdtd_impl(source, n_steps, cfl, spatial_order, store_every);
}

namespace {

struct SphereRule {
  std::vector<Vec3> dir;
  std::vector<double> w;  // sums to 1 (average over the sphere)
};

SphereRule sphere_rule(int n_theta) {
  if (n_theta < 2) throw Error(ErrorKind::InvalidArgument, "n_theta must be >= 2");
  // Gauss-Legendre nodes on [-1, 1] by Newton on P_n.
  std::vector<double> x(static_cast<std::size_t>(n_theta)), wx(static_cast<std::size_t>(n_theta));
  for (int i = 0; i < n_theta; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n_theta + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n_theta; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n_theta * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    wx[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  SphereRule r;
  const int n_phi = 2 * n_theta;
  for (int i = 0; i < n_theta; ++i) {
    const double c = x[static_cast<std::size_t>(i)], s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int k = 0; k < n_phi; ++k) {
      const double p = 2.0 * kPi * (k + 0.5) / n_phi;
      r.dir.emplace_back(s * std::cos(p), s * std::sin(p), c);
      r.w.push_back(wx[static_cast<std::size_t>(i)] / (2.0 * n_phi));
    }
  }
  return r;
}

struct Box {
  Vec3 lo, hi;
  bool empty = true;
  bool contains(const Vec3& y) const { return !empty && (y.array() >= lo.array()).all() && (y.array() <= hi.array()).all(); }
};

// Bounding box of nonzero source samples over the whole history, padded by
// the cubic stencil reach.
Box support_box(const SourceHistory& s) {
  const GridSpec& g = s.grid;
  Box b;
  b.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  b.hi = -b.lo;
  for (std::size_t i = 0; i < g.size(); ++i) {
    bool nz = false;
    for (const auto& v : s.values)
      if (v(static_cast<Eigen::Index>(i)) != 0.0) {
        nz = true;
        break;
      }
    if (!nz) continue;
    const Vec3 x = g.node(i);
    b.lo = b.lo.cwiseMin(x);
    b.hi = b.hi.cwiseMax(x);
    b.empty = false;
  }
  const Vec3 pad(2 * g.spacing(0), 2 * g.spacing(1), 2 * g.spacing(2));
  b.lo -= pad;
  b.hi += pad;
  return b;
}

void check_3d(const SourceHistory& s, double t) {
  if (s.grid.mode != DimMode::Full3d)
    throw Error(ErrorKind::ModeMismatch, "light-cone quadrature needs a full-3d grid; use wave_fdtd in reduced-1d");
  if (s.values.empty() || t > s.last_time() * (1.0 + 1e-12) + 1e-12)
    throw Error(ErrorKind::HistoryTooShort, "retarded evaluation at t = " + std::to_string(t) +
                                                " needs source samples up to that time");
}

struct RadialRule {
  int n = 0;
  double dr = 0.0;
};

RadialRule radial_rule(const GridSpec& g, double t, const ShellQuadrature& q) {
  const double step = q.radial_step > 0.0 ? q.radial_step : 0.5 * min_spacing(g);
  RadialRule r;
  r.n = std::max(1, static_cast<int>(std::ceil(t / step - 1e-12)));
  r.dr = t / r.n;
  return r;
}

}  // namespace

RealField retarded_convolve(const SourceHistory& source, double t, const GridSpec& grid, const ShellQuadrature& q) {
  check_3d(source, t);
  if (grid.mode != DimMode::Full3d) throw Error(ErrorKind::ModeMismatch, "target grid must be full-3d");
  const std::size_t n = grid.size();
  RealField out = RealField::Zero(static_cast<Eigen::Index>(n));
  if (t <= 0.0) return out;
  const SphereRule sph = sphere_rule(q.n_theta);
  const Box box = support_box(source);
  if (box.empty) return out;
  const RadialRule rr = radial_rule(source.grid, t, q);
  RealField slice;
  for (int i = 0; i < rr.n; ++i) {
    const double r = (i + 0.5) * rr.dr;
    source.at(t - r, slice);
    const double scale = rr.dr * r;
    parallel_for(n, default_threads(), [&](std::size_t b, std::size_t e) {
      for (std::size_t idx = b; idx < e; ++idx) {
        const Vec3 x = grid.node(idx);
        // Skip shells that miss the support entirely.
        const Vec3 c = x.cwiseMax(box.lo).cwiseMin(box.hi);
        if ((c - x).norm() > r) continue;
        if (((x - box.lo).cwiseAbs().cwiseMax((x - box.hi).cwiseAbs())).norm() < r) continue;
        double acc = 0.0;
        for (std::size_t d = 0; d < sph.dir.size(); ++d) {
          const Vec3 y = x + r * sph.dir[d];
          if (!box.contains(y)) continue;
          acc += sph.w[d] * interpolate(source.grid, slice, y);
        }
        out(static_cast<Eigen::Index>(idx)) += scale * acc;
      }
    });
  }
  return out;
}

double retarded_convolve_at(const SourceHistory& source, double t, const Vec3& x, const ShellQuadrature& q) {
  check_3d(source, t);
  if (t <= 0.0) return 0.0;
  const SphereRule sph = sphere_rule(q.n_theta);
  const Box box = support_box(source);
  if (box.empty) return 0.0;
  const RadialRule rr = radial_rule(source.grid, t, q);
  RealField slice;
  double total = 0.0;
  for (int i = 0; i < rr.n; ++i) {
    const double r = (i + 0.5) * rr.dr;
    source.at(t - r, slice);
    double acc = 0.0;
    for (std::size_t d = 0; d < sph.dir.size(); ++d) {
      const Vec3 y = x + r * sph.dir[d];
      if (!box.contains(y)) continue;
      acc += sph.w[d] * interpolate(source.grid, slice, y);
    }
    total += rr.dr * r * acc;
  }
  return total;
}

PotentialStepper::PotentialStepper(const GridSpec& grid, double dt, int spatial_order) {
  for (int k = 0; k < 4; ++k) w_.emplace_back(grid, dt, spatial_order);
}

PotentialState PotentialStepper::step(const RealField& rho, const VectorField& j) {
  w_[0].step(rho);
  for (std::size_t k = 0; k < 3; ++k) w_[k + 1].step(j.row(static_cast<Eigen::Index>(k)).transpose().array());
  PotentialState p = PotentialState::zeros(static_cast<std::size_t>(rho.size()));
  p.V = w_[0].value();
  p.dtV = w_[0].time_derivative();
  for (std::size_t k = 0; k < 3; ++k) {
    p.A.row(static_cast<Eigen::Index>(k)) = w_[k + 1].value().matrix().transpose();
    p.dtA.row(static_cast<Eigen::Index>(k)) = w_[k + 1].time_derivative().matrix().transpose();
  }
  p.time = w_[0].time();
  return p;
}

VectorField dirac_current(const SpinorArray& psi) {
  const auto& m = dirac::dirac_matrices();
  VectorField j(3, psi.cols());
  for (Eigen::Index i = 0; i < psi.cols(); ++i)
    for (int a = 0; a < 3; ++a) j(a, i) = psi.col(i).dot(m.alpha[static_cast<std::size_t>(a)] * psi.col(i)).real();
  return j;
}

MeanSources mean_sources(const AmplitudePair& u0, const VectorField& grad_phi) {
  MeanSources s;
  s.rho = density(u0.plus) + density(u0.minus);
  s.j.resize(3, grad_phi.cols());
  for (Eigen::Index i = 0; i < grad_phi.cols(); ++i) {
    const Vec3 xi = grad_phi.col(i);
    s.j.col(i) = dirac::group_velocity(Band::Plus, xi) * s.rho(i);
  }
  return s;
}

PotentialState mean_potentials(const SourceHistory& rho, const std::array<SourceHistory, 3>& j, double t,
                               int spatial_order) {
  const GridSpec& g = rho.grid;
  PotentialState ps = PotentialState::zeros(g.size());
  ps.time = t;
  if (g.mode == DimMode::Full3d) {
    const double dt = rho.dt;
    const double t0 = std::max(0.0, t - dt);
    ps.V = retarded_convolve(rho, t, g);
    const RealField v0 = t0 < t ? retarded_convolve(rho, t0, g) : ps.V;
    if (t > t0) ps.dtV = (ps.V - v0) / (t - t0);
    for (int k = 0; k < 3; ++k) {
      const RealField a = retarded_convolve(j[static_cast<std::size_t>(k)], t, g);
      ps.A.row(k) = a.matrix().transpose();
      if (t > t0) {
        const RealField a0 = retarded_convolve(j[static_cast<std::size_t>(k)], t0, g);
        ps.dtA.row(k) = ((a - a0) / (t - t0)).matrix().transpose();
      }
    }
    return ps;
  }
  // Reduced mode: replay the leapfrog on the history's own time grid.
  const int steps = static_cast<int>(std::lround(t / rho.dt));
  if (std::abs(steps * rho.dt - t) > 1e-9 * std::max(1.0, t))
    throw Error(ErrorKind::InvalidArgument, "reduced-mode mean_potentials needs t on the history time grid");
  if (static_cast<std::size_t>(steps) >= rho.values.size() + 1)
    throw Error(ErrorKind::HistoryTooShort, "source history ends before t");
  WaveStepper<RealField> wv(g, rho.dt, spatial_order);
  std::array<WaveStepper<RealField>, 3> wa{WaveStepper<RealField>(g, rho.dt, spatial_order),
                                           WaveStepper<RealField>(g, rho.dt, spatial_order),
                                           WaveStepper<RealField>(g, rho.dt, spatial_order)};
  for (int s = 0; s < steps; ++s) {
    wv.step(rho.values[static_cast<std::size_t>(s)]);
    for (int k = 0; k < 3; ++k) wa[static_cast<std::size_t>(k)].step(j[static_cast<std::size_t>(k)].values[static_cast<std::size_t>(s)]);
  }
  ps.V = wv.value();
  if (steps > 0) ps.dtV = wv.time_derivative();
  for (int k = 0; k < 3; ++k) {
    ps.A.row(k) = wa[static_cast<std::size_t>(k)].value().matrix().transpose();
    if (steps > 0) ps.dtA.row(k) = wa[static_cast<std::size_t>(k)].time_derivative().matrix().transpose();
  }
  return ps;
}

ComplexVectorField zitter_source(const AmplitudePair& u0) {
  const auto& m = dirac::dirac_matrices();
  ComplexVectorField z(3, u0.plus.cols());
  for (int k = 0; k < 3; ++k) z.row(k) = (u0.plus.conjugate().array() * (m.alpha[k] * u0.minus).array()).colwise().sum();
  return z;
}

OscillatoryPotential oscillatory_amplitude(const ComplexVectorField& z_minus, const PhaseField& phase,
                                           std::size_t time_index) {
  if (time_index >= phase.time_count()) throw Error(ErrorKind::InvalidArgument, "time index out of range");
  const auto ok = noncharacteristic_check(phase);
  if (!ok[time_index].all()) {
    Eigen::Index bad = 0;
    (!ok[time_index]).maxCoeff(&bad);
    throw Error(ErrorKind::CharacteristicPhase, "phase is characteristic for the wave system at node " +
                                                    std::to_string(bad));
  }
  OscillatoryPotential p;
  p.amp_plus = z_minus.conjugate();
  p.amp_minus = -z_minus;
  return p;
}

RealField oscillatory_response_coefficient(const PhaseField& phase, std::size_t time_index) {
  if (time_index >= phase.time_count()) throw Error(ErrorKind::InvalidArgument, "time index out of range");
  const RealField d = phase.dt_phi[time_index].square() -
                      phase.grad_phi[time_index].colwise().squaredNorm().transpose().array();
  return -0.25 / d;
}

ThetaModes theta_modes(const AmplitudePair& u0, int samples) {
  if (samples < 8 || samples % 2 != 0) throw Error(ErrorKind::InvalidArgument, "samples must be even and >= 8");
  const auto& m = dirac::dirac_matrices();
  const int half = samples / 2;
  ThetaModes out;
  out.density.assign(static_cast<std::size_t>(half + 1), 0.0);
  out.current.assign(static_cast<std::size_t>(half + 1), 0.0);
  std::vector<double> dens(static_cast<std::size_t>(samples));
  std::vector<Vec3> cur(static_cast<std::size_t>(samples));
  for (Eigen::Index i = 0; i < u0.plus.cols(); ++i) {
    for (int s = 0; s < samples; ++s) {
      const cplx e = std::exp(kI * (2.0 * kPi * s / samples));
      const Spinor u = u0.plus.col(i) * e + u0.minus.col(i) * std::conj(e);
      dens[static_cast<std::size_t>(s)] = u.squaredNorm();
      for (int k = 0; k < 3; ++k) cur[static_cast<std::size_t>(s)](k) = u.dot(m.alpha[k] * u).real();
    }
    for (int mode = 0; mode <= half; ++mode) {
      cplx cd = 0.0;
      Eigen::Vector3cd cc = Eigen::Vector3cd::Zero();
      for (int s = 0; s < samples; ++s) {
        const cplx e = std::exp(-kI * (2.0 * kPi * mode * s / samples)) / static_cast<double>(samples);
        cd += dens[static_cast<std::size_t>(s)] * e;
        cc += cur[static_cast<std::size_t>(s)].cast<cplx>() * e;
      }
      auto& d = out.density[static_cast<std::size_t>(mode)];
      auto& c = out.current[static_cast<std::size_t>(mode)];
      d = std::max(d, std::abs(cd));
      c = std::max(c, cc.cwiseAbs().maxCoeff());
    }
  }
  return out;
}

AmplitudePair nonlinearity_N0(const AmplitudePair& u0, const RealField& V, const VectorField& A0,
                              const VectorField& grad_phi) {
  AmplitudePair out = u0;
  for (Eigen::Index i = 0; i < u0.plus.cols(); ++i) {
    const Vec3 xi = grad_phi.col(i);
    const double c = A0.col(i).dot(dirac::group_velocity(Band::Plus, xi)) - V(i);
    out.plus.col(i) *= c;
    out.minus.col(i) *= c;
  }
  return out;
}

}  // namespace mdwkb
