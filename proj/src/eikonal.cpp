#include "mdwkb/eikonal.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <Eigen/Eigenvalues>

namespace mdwkb {

double hamiltonian(PhaseBranch b, const Vec3& xi) { return time_sign(b) * std::sqrt(1.0 + xi.squaredNorm()); }

Vec3 ray_velocity(PhaseBranch b, const Vec3& xi) {
  return xi * (-time_sign(b) / std::sqrt(1.0 + xi.squaredNorm()));
}

Mat3 ray_velocity_jacobian(PhaseBranch b, const Vec3& xi) {
  const double l2 = 1.0 + xi.squaredNorm();
  const double l = std::sqrt(l2);
  return (Mat3::Identity() - xi * xi.transpose() / l2) * (-time_sign(b) / l);
}

InitialPhase InitialPhase::zero() {
  return {"zero", [](const Vec3&) { return 0.0; }, [](const Vec3&) -> Vec3 { return Vec3::Zero(); },
          [](const Vec3&) -> Mat3 { return Mat3::Zero(); }};
}

InitialPhase InitialPhase::plane(const Vec3& k) {
  return {"plane", [k](const Vec3& x) { return k.dot(x); }, [k](const Vec3&) -> Vec3 { return k; },
          [](const Vec3&) -> Mat3 { return Mat3::Zero(); }};
}

InitialPhase InitialPhase::quadratic(double a, const Vec3& k, const Vec3& c) {
  return {"quadratic", [a, k, c](const Vec3& x) { return 0.5 * a * (x - c).squaredNorm() + k.dot(x); },
          [a, k, c](const Vec3& x) -> Vec3 { return a * (x - c) + k; },
          [a](const Vec3&) -> Mat3 { return a * Mat3::Identity(); }};
}

InitialPhase InitialPhase::sampled(const GridSpec& grid, const RealField& samples) {
  grid.validate();
  if (static_cast<std::size_t>(samples.size()) != grid.size())
    throw Error(ErrorKind::DimMismatch, "sampled phase size does not match grid");
  if (!samples.allFinite()) throw Error(ErrorKind::NonFinitePhase, "sampled phase has non-finite values");
  struct Data {
    GridSpec grid;
    RealField f;
    std::array<RealField, 3> d1;
    std::array<std::array<RealField, 3>, 3> d2;
  };
  auto data = std::make_shared<Data>();
  data->grid = grid;
  data->f = samples;
  const int na = grid.active_axes();
  for (int a = 0; a < na; ++a) data->d1[a] = derivative(grid, samples, a);
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < na; ++b) data->d2[a][b] = derivative(grid, data->d1[a], b);
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < na; ++b)
      if (!data->d2[a][b].allFinite())
        throw Error(ErrorKind::NonFinitePhase, "sampled phase has non-finite second differences");
  InitialPhase p;
  p.name = "sampled";
  p.value = [data](const Vec3& x) { return interpolate(data->grid, data->f, x); };
  p.gradient = [data, na](const Vec3& x) -> Vec3 {
    Vec3 g = Vec3::Zero();
    for (int a = 0; a < na; ++a) g(a) = interpolate(data->grid, data->d1[a], x);
    return g;
  };
  p.hessian = [data, na](const Vec3& x) -> Mat3 {
    Mat3 h = Mat3::Zero();
    for (int a = 0; a < na; ++a)
      for (int b = 0; b < na; ++b) h(a, b) = interpolate(data->grid, data->d2[a][b], x);
    return 0.5 * (h + h.transpose());
  };
  return p;
}

Vec3 active(const GridSpec& grid, const Vec3& v) {
  Vec3 out = v;
  for (int a = grid.active_axes(); a < 3; ++a) out(a) = 0.0;
  return out;
}

Mat3 active_block(const GridSpec& grid, const Mat3& m) {
  Mat3 out = m;
  for (int a = grid.active_axes(); a < 3; ++a) {
    out.row(a).setZero();
    out.col(a).setZero();
  }
  return out;
}

namespace {

double spectral_norm(const Mat3& m) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// dx/dx0 restricted to the active block, identity elsewhere.
Mat3 ray_map_jacobian(const GridSpec& g, PhaseBranch b, const Vec3& xi, const Mat3& hess, double t) {
  Mat3 j = Mat3::Identity() + t * active_block(g, ray_velocity_jacobian(b, xi)) * active_block(g, hess);
  return j;
}

}  // namespace

double caustic_time(const InitialPhase& phase, const GridSpec& grid) {
  grid.validate();
  double max_h = 0.0, max_phi = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 x = grid.node(i);
    const double v = phase.value(x);
    const Vec3 xi = active(grid, phase.gradient(x));
    const Mat3 hs = active_block(grid, phase.hessian(x));
    if (!std::isfinite(v) || !xi.allFinite() || !hs.allFinite())
      throw Error(ErrorKind::NonFinitePhase, "initial phase not finite at grid node " + std::to_string(i));
    max_h = std::max(max_h, spectral_norm(active_block(grid, ray_velocity_jacobian(PhaseBranch::Electron, xi))));
    max_phi = std::max(max_phi, spectral_norm(hs));
  }
  if (max_phi == 0.0 || max_h == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (max_h * max_phi);
}

Vec3 RayBundle::position(std::size_t ray, double t) const {
  return seeds.col(static_cast<Eigen::Index>(ray)) + t * ray_velocity(branch, xi0.col(static_cast<Eigen::Index>(ray)));
}

double RayBundle::phase_at(std::size_t ray, double t) const {
  const Vec3 xi = xi0.col(static_cast<Eigen::Index>(ray));
  return phase0(static_cast<Eigen::Index>(ray)) + t * (hamiltonian(branch, xi) + xi.dot(ray_velocity(branch, xi)));
}

double RayBundle::jacobian(std::size_t ray, double t) const {
  return ray_map_jacobian(grid, branch, xi0.col(static_cast<Eigen::Index>(ray)), hessian0[ray], t).determinant();
}

double RayBundle::velocity_divergence(std::size_t ray, double t) const {
  const Vec3 xi = xi0.col(static_cast<Eigen::Index>(ray));
  const Mat3 dv = active_block(grid, ray_velocity_jacobian(branch, xi));
  const Mat3 m = ray_map_jacobian(grid, branch, xi, hessian0[ray], t);
  return (dv * hessian0[ray] * m.inverse()).trace();
}

RayBundle solve_rays(const InitialPhase& phase, const GridSpec& grid, double T, int n_steps, PhaseBranch branch) {
  grid.validate();
  if (n_steps < 1) throw Error(ErrorKind::InvalidArgument, "n_steps must be >= 1");
  if (!(T >= 0.0)) throw Error(ErrorKind::InvalidArgument, "T must be non-negative");
  const double tc = caustic_time(phase, grid);
  if (T >= tc)
    throw Error(ErrorKind::CausticExceeded,
                "T = " + std::to_string(T) + " is not below the caustic bound " + std::to_string(tc));
  RayBundle rb;
  rb.branch = branch;
  rb.grid = grid;
  rb.initial = phase;
  rb.caustic_bound = tc;
  const std::size_t n = grid.size();
  rb.seeds.resize(3, static_cast<Eigen::Index>(n));
  rb.xi0.resize(3, static_cast<Eigen::Index>(n));
  rb.phase0.resize(static_cast<Eigen::Index>(n));
  rb.hessian0.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 x = grid.node(i);
    const auto c = static_cast<Eigen::Index>(i);
    rb.seeds.col(c) = x;
    rb.xi0.col(c) = active(grid, phase.gradient(x));
    rb.phase0(c) = phase.value(x);
    rb.hessian0[i] = active_block(grid, phase.hessian(x));
  }
  for (int s = 0; s <= n_steps; ++s) {
    const double t = T * s / n_steps;
    rb.times.push_back(t);
    VectorField pos(3, static_cast<Eigen::Index>(n));
    RealField ph(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      pos.col(static_cast<Eigen::Index>(i)) = rb.position(i, t);
      ph(static_cast<Eigen::Index>(i)) = rb.phase_at(i, t);
    }
    rb.positions.push_back(std::move(pos));
    rb.phase.push_back(std::move(ph));
  }
  return rb;
}

bool foot_point(const InitialPhase& phase, const GridSpec& grid, PhaseBranch branch, const Vec3& x, double t,
                Vec3& x0) {
  const double tol = 1e-13 * (1.0 + x.norm());
  auto residual = [&](const Vec3& y, Vec3& xi) {
    xi = active(grid, phase.gradient(y));
    return active(grid, Vec3(y + t * ray_velocity(branch, xi) - x));
  };
  Vec3 xi;
  Vec3 f = residual(x0, xi);
  double fn = f.norm();
  for (int it = 0; it < 60; ++it) {
    if (!std::isfinite(fn)) return false;
    if (fn <= tol) return true;
    const Mat3 j = ray_map_jacobian(grid, branch, xi, active_block(grid, phase.hessian(x0)), t);
    Vec3 step = j.inverse() * f;
    // Halve the step until the residual drops.
    bool moved = false;
    for (int k = 0; k < 30 && !moved; ++k, step *= 0.5) {
      const Vec3 trial = x0 - step;
      Vec3 xt;
      const Vec3 ft = residual(trial, xt);
      const double tn = ft.norm();
      if (std::isfinite(tn) && tn < fn) {
        x0 = trial;
        xi = xt;
        f = ft;
        fn = tn;
        moved = true;
      }
    }
    if (!moved) return fn <= 1e3 * tol;
  }
  return false;
}

namespace {

// Marks nodes with at least one ray inside the surrounding 3^d block of cells at time t.
std::vector<char> ray_coverage(const RayBundle& rays, const GridSpec& g, double t) {
  const std::size_t n = g.size();
  const int na = g.active_axes();
  std::vector<char> hit(n, 0);
  for (std::size_t r = 0; r < rays.size(); ++r) {
    const Vec3 p = rays.position(r, t);
    std::array<int, 3> ijk{0, 0, 0};
    bool inside = true;
    for (int a = 0; a < na; ++a) {
      long i = std::lround((p(a) - g.lo[a]) / g.spacing(a));
      const long m = g.points[a];
      if (g.periodic[a]) {
        i = ((i % m) + m) % m;
      } else if (i < 0 || i >= m) {
        inside = false;
        break;
      }
      ijk[a] = static_cast<int>(i);
    }
    if (inside) hit[g.index(ijk[0], ijk[1], ijk[2])] = 1;
  }
  // Separable dilation by one cell per active axis.
  for (int a = 0; a < na; ++a) {
    std::vector<char> next(hit);
    for (std::size_t idx = 0; idx < n; ++idx) {
      if (hit[idx]) continue;
      auto ijk = g.unravel(idx);
      const int m = g.points[a];
      for (int off : {-1, 1}) {
        std::array<int, 3> q = ijk;
        q[a] += off;
        if (g.periodic[a]) {
          q[a] = (q[a] + m) % m;
        } else if (q[a] < 0 || q[a] >= m) {
          continue;
        }
        if (hit[g.index(q[0], q[1], q[2])]) next[idx] = 1;
      }
    }
    hit.swap(next);
  }
  return hit;
}

void finish_fields(PhaseField& pf, const RealField& phi, const VectorField& grad) {
  const GridSpec& g = pf.grid;
  RealField dt(grad.cols());
  VectorField omega(3, grad.cols());
  for (Eigen::Index i = 0; i < grad.cols(); ++i) {
    const Vec3 xi = grad.col(i);
    dt(i) = hamiltonian(pf.branch, xi);
    omega.col(i) = xi / std::sqrt(1.0 + xi.squaredNorm());
  }
  RealField div = divergence(g, omega);
  pf.phi.push_back(phi);
  pf.grad_phi.push_back(grad);
  pf.dt_phi.push_back(std::move(dt));
  pf.div_omega_minus.push_back(-div);
  pf.div_omega_plus.push_back(std::move(div));
}

}  // namespace

PhaseField phase_on_grid(const RayBundle& rays, const GridSpec& grid, const std::vector<double>& times) {
  grid.validate();
  PhaseField pf;
  pf.grid = grid;
  pf.branch = rays.branch;
  pf.caustic_bound = rays.caustic_bound;
  const std::size_t n = grid.size();
  for (const double t : times) {
    if (!(t >= 0.0) || t >= rays.caustic_bound)
      throw Error(ErrorKind::CausticExceeded, "requested time " + std::to_string(t) + " outside [0, caustic bound)");
    const std::vector<char> covered = ray_coverage(rays, grid, t);
    RealField phi(static_cast<Eigen::Index>(n));
    VectorField grad(3, static_cast<Eigen::Index>(n));
    VectorField feet(3, static_cast<Eigen::Index>(n));
    // 0 ok, 1 no ray, 2 Newton failure
    std::vector<char> bad(n, 0);
    parallel_for(n, default_threads(), [&](std::size_t b, std::size_t e) {
      for (std::size_t idx = b; idx < e; ++idx) {
        if (!covered[idx]) {
          bad[idx] = 1;
          continue;
        }
        // One fixed-point step from the node as Newton start.
        const Vec3 x = grid.node(idx);
        Vec3 x0 = x - t * ray_velocity(rays.branch, active(grid, rays.initial.gradient(x)));
        if (!foot_point(rays.initial, grid, rays.branch, x, t, x0)) {
          bad[idx] = 2;
          continue;
        }
        const Vec3 xi = active(grid, rays.initial.gradient(x0));
        phi(static_cast<Eigen::Index>(idx)) =
            rays.initial.value(x0) + t * (hamiltonian(rays.branch, xi) + xi.dot(ray_velocity(rays.branch, xi)));
        grad.col(static_cast<Eigen::Index>(idx)) = xi;
        feet.col(static_cast<Eigen::Index>(idx)) = x0;
      }
    });
    const auto first = std::find_if(bad.begin(), bad.end(), [](char c) { return c != 0; });
    if (first != bad.end())
      throw Error(ErrorKind::CoverageGap, std::string(*first == 2 ? "foot-point inversion failed" : "no ray") +
                                              " near grid node " + std::to_string(first - bad.begin()) +
                                              " at t = " + std::to_string(t));
    pf.times.push_back(t);
    pf.feet.push_back(std::move(feet));
    finish_fields(pf, phi, grad);
  }
  return pf;
}

PhaseField solve_hj_grid(const InitialPhase& phase, const GridSpec& grid, double T, double cfl, PhaseBranch branch) {
  grid.validate();
  if (!(cfl > 0.0 && cfl <= 1.0)) throw Error(ErrorKind::CFLViolation, "cfl must lie in (0, 1]");
  if (!(T >= 0.0)) throw Error(ErrorKind::InvalidArgument, "T must be non-negative");
  const std::size_t n = grid.size();
  const int na = grid.active_axes();
  RealField phi(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    phi(static_cast<Eigen::Index>(i)) = phase.value(grid.node(i));
    if (!std::isfinite(phi(static_cast<Eigen::Index>(i))))
      throw Error(ErrorKind::NonFinitePhase, "initial phase not finite at grid node " + std::to_string(i));
  }
  PhaseField pf;
  pf.grid = grid;
  pf.branch = branch;
  pf.caustic_bound = caustic_time(phase, grid);

  auto gradient_of = [&](const RealField& f) {
    VectorField g = VectorField::Zero(3, static_cast<Eigen::Index>(n));
    for (int a = 0; a < na; ++a) g.row(a) = derivative(grid, f, a).matrix().transpose();
    return g;
  };
  pf.times.push_back(0.0);
  finish_fields(pf, phi, gradient_of(phi));

  double hmin = grid.spacing(0);
  for (int a = 1; a < na; ++a) hmin = std::min(hmin, grid.spacing(a));
  // |dH/dp_a| < 1, so this step satisfies the CFL bound for every axis at once.
  const double dt_max = cfl * hmin / na;
  const double s = time_sign(branch);

  // Ghost-padded copy: one layer per active axis, quadratic extrapolation at
  // non-periodic edges, wrap on periodic ones. Corner ghosts are never read.
  std::array<int, 3> pn{1, 1, 1}, pad{0, 0, 0};
  for (int a = 0; a < na; ++a) {
    pn[a] = grid.points[a] + 2;
    pad[a] = 1;
  }
  const std::array<std::ptrdiff_t, 3> stride{1, pn[0], static_cast<std::ptrdiff_t>(pn[0]) * pn[1]};
  std::vector<double> buf(static_cast<std::size_t>(pn[0]) * pn[1] * pn[2]);
  auto padded = [&](int i, int j, int k) { return (i + pad[0]) * stride[0] + (j + pad[1]) * stride[1] + (k + pad[2]) * stride[2]; };
  auto fill = [&](const RealField& f) {
    const int nx = grid.points[0], ny = grid.points[1], nz = grid.points[2];
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j) {
        const std::size_t src = grid.index(0, j, k);
        std::copy_n(f.data() + src, nx, buf.data() + padded(0, j, k));
      }
    for (int a = 0; a < na; ++a) {
      const int m = grid.points[a];
      const std::ptrdiff_t st = stride[a];
      // Loop over the face ijk[a] == 0.
      std::array<int, 3> lim{nx, ny, nz};
      lim[a] = 1;
      for (int k = 0; k < lim[2]; ++k)
        for (int j = 0; j < lim[1]; ++j)
          for (int i = 0; i < lim[0]; ++i) {
            const std::ptrdiff_t base = padded(i, j, k);
            auto at = [&](int q) { return buf[static_cast<std::size_t>(base + q * st)]; };
            if (grid.periodic[a]) {
              buf[static_cast<std::size_t>(base - st)] = at(m - 1);
              buf[static_cast<std::size_t>(base + m * st)] = at(0);
            } else {
              buf[static_cast<std::size_t>(base - st)] = 3.0 * at(0) - 3.0 * at(1) + at(2);
              buf[static_cast<std::size_t>(base + m * st)] = 3.0 * at(m - 1) - 3.0 * at(m - 2) + at(m - 3);
            }
          }
    }
  };
  std::array<double, 3> inv_h{1, 1, 1};
  for (int a = 0; a < na; ++a) inv_h[a] = 1.0 / grid.spacing(a);

  double t = 0.0;
  RealField next(static_cast<Eigen::Index>(n));
  while (t < T) {
    const double dt = std::min(dt_max, T - t);
    fill(phi);
    // Parallel over z-y lines; each line walks x contiguously.
    const auto lines = static_cast<std::size_t>(grid.points[1]) * static_cast<std::size_t>(grid.points[2]);
    parallel_for(lines, default_threads(), [&](std::size_t b, std::size_t e) {
      for (std::size_t line = b; line < e; ++line) {
        const int j = static_cast<int>(line % static_cast<std::size_t>(grid.points[1]));
        const int k = static_cast<int>(line / static_cast<std::size_t>(grid.points[1]));
        std::ptrdiff_t q = padded(0, j, k);
        std::size_t idx = grid.index(0, j, k);
        for (int i = 0; i < grid.points[0]; ++i, ++q, ++idx) {
          const double c = buf[static_cast<std::size_t>(q)];
          double pm[3] = {0, 0, 0}, pp[3] = {0, 0, 0}, pb[3] = {0, 0, 0};
          double pb2 = 0.0;
          for (int a = 0; a < na; ++a) {
            pm[a] = (c - buf[static_cast<std::size_t>(q - stride[a])]) * inv_h[a];
            pp[a] = (buf[static_cast<std::size_t>(q + stride[a])] - c) * inv_h[a];
            pb[a] = 0.5 * (pm[a] + pp[a]);
            pb2 += pb[a] * pb[a];
          }
          // Local dissipation: |dH/dp_a| = |p_a| / lambda(p), bounded over the two one-sided slopes.
          double visc = 0.0;
          for (int a = 0; a < na; ++a) {
            const double mx = std::max(std::abs(pm[a]), std::abs(pp[a]));
            visc += 0.5 * mx / std::sqrt(1.0 + pb2 - pb[a] * pb[a] + mx * mx) * (pp[a] - pm[a]);
          }
          next(static_cast<Eigen::Index>(idx)) = c + dt * (s * std::sqrt(1.0 + pb2) + visc);
        }
      }
    });
    phi.swap(next);
    t += dt;
    if (T - t < 1e-14 * std::max(1.0, T)) t = T;
  }
  pf.times.push_back(T);
  finish_fields(pf, phi, gradient_of(phi));
  return pf;
}

Residual eikonal_residual(const PhaseField& phase) {
  Residual r;
  for (std::size_t k = 0; k < phase.time_count(); ++k) {
    RealField v = phase.dt_phi[k].square() - phase.grad_phi[k].colwise().squaredNorm().transpose().array() - 1.0;
    if (v.size() > 0) r.max = std::max(r.max, v.abs().maxCoeff());
    r.values.push_back(std::move(v));
  }
  return r;
}

Residual eikonal_residual_fd(const PhaseField& phase) {
  const std::size_t nt = phase.time_count();
  if (nt < 3) throw Error(ErrorKind::InvalidArgument, "finite-difference residual needs >= 3 stored times");
  const GridSpec& g = phase.grid;
  const std::size_t n = g.size();
  const int na = g.active_axes();
  Residual r;
  r.values.assign(nt, RealField());
  for (std::size_t k = 1; k + 1 < nt; ++k) {
    const double h1 = phase.times[k] - phase.times[k - 1];
    const double h2 = phase.times[k + 1] - phase.times[k];
    // Second-order three-point derivative on a non-uniform stencil.
    const double cm = -h2 / (h1 * (h1 + h2)), c0 = (h2 - h1) / (h1 * h2), cp = h1 / (h2 * (h1 + h2));
    const RealField& f = phase.phi[k];
    RealField v = RealField::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t idx = 0; idx < n; ++idx) {
      const auto ijk = g.unravel(idx);
      bool interior = true;
      Vec3 grad = Vec3::Zero();
      for (int a = 0; a < na && interior; ++a) {
        const int m = g.points[a];
        std::array<int, 3> lo = ijk, hi = ijk;
        lo[a] -= 1;
        hi[a] += 1;
        // The phase itself is not periodic, so seam stencils are skipped.
        if (lo[a] < 0 || hi[a] >= m) {
          interior = false;
          break;
        }
        grad(a) = (f(static_cast<Eigen::Index>(g.index(hi[0], hi[1], hi[2]))) -
                   f(static_cast<Eigen::Index>(g.index(lo[0], lo[1], lo[2])))) /
                  (2.0 * g.spacing(a));
      }
      if (!interior) continue;
      const auto i = static_cast<Eigen::Index>(idx);
      const double dt = cm * phase.phi[k - 1](i) + c0 * f(i) + cp * phase.phi[k + 1](i);
      v(i) = dt * dt - grad.squaredNorm() - 1.0;
      r.max = std::max(r.max, std::abs(v(i)));
    }
    r.values[k] = std::move(v);
  }
  return r;
}

double noncharacteristic_determinant(double dt_phi, const Vec3& grad_phi) {
  return 32.0 * dt_phi * dt_phi * dt_phi * (dt_phi * dt_phi - grad_phi.squaredNorm());
}

std::vector<Eigen::Array<bool, Eigen::Dynamic, 1>> noncharacteristic_check(const PhaseField& phase,
                                                                            double tolerance) {
  std::vector<Eigen::Array<bool, Eigen::Dynamic, 1>> out;
  for (std::size_t k = 0; k < phase.time_count(); ++k) {
    const auto n = phase.dt_phi[k].size();
    Eigen::Array<bool, Eigen::Dynamic, 1> ok(n);
    for (Eigen::Index i = 0; i < n; ++i)
      ok(i) = std::abs(noncharacteristic_determinant(phase.dt_phi[k](i), phase.grad_phi[k].col(i))) > tolerance;
    out.push_back(std::move(ok));
  }
  return out;
}

}  // namespace mdwkb
