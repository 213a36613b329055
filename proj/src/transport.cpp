#include "mdwkb/transport.hpp"

#include <algorithm>
#include <cmath>

#include "mdwkb/dirac.hpp"

namespace mdwkb {

namespace {

Eigen::Index col(std::size_t i) { return static_cast<Eigen::Index>(i); }

Matrix4c plus_projector(const Vec3& xi) { return dirac::projector(Band::Plus, xi); }
Matrix4c minus_projector(const Vec3& xi) { return dirac::projector(Band::Minus, Vec3(-xi)); }

Error at_step(const Error& e, std::size_t step) {
  const std::string what = e.what();
  const std::string kind(to_string(e.kind()));
  const std::string tail = what.rfind(kind + ": ", 0) == 0 ? what.substr(kind.size() + 2) : what;
  return Error(e.kind(), "step " + std::to_string(step) + ": " + tail);
}

}  // namespace

SpinorArray ThetaExpansion::evaluate(double theta, Eigen::Index points) const {
  SpinorArray out = SpinorArray::Zero(4, points);
  for (const auto& [m, v] : modes) out += v * std::exp(kI * (m * theta));
  return out;
}

ThetaExpansion ThetaExpansion::from_samples(const std::vector<SpinorArray>& samples, int max_mode) {
  ThetaExpansion e;
  const auto s = static_cast<int>(samples.size());
  if (s == 0) return e;
  for (int m = -max_mode; m <= max_mode; ++m) {
    SpinorArray v = SpinorArray::Zero(4, samples[0].cols());
    for (int k = 0; k < s; ++k) v += samples[static_cast<std::size_t>(k)] * std::exp(-kI * (2 * kPi * m * k / s));
    e.modes[m] = v / static_cast<double>(s);
  }
  return e;
}

ThetaExpansion project_P(const ThetaExpansion& v, const VectorField& grad_phi) {
  ThetaExpansion out;
  for (const auto& [m, f] : v.modes) {
    if (m != 1 && m != -1) continue;
    SpinorArray g(4, f.cols());
    for (Eigen::Index i = 0; i < f.cols(); ++i) {
      const Vec3 xi = grad_phi.col(i);
      g.col(i) = (m == 1 ? plus_projector(xi) : minus_projector(xi)) * f.col(i);
    }
    out.modes[m] = std::move(g);
  }
  return out;
}

ThetaExpansion project_Q(const ThetaExpansion& v, const VectorField& grad_phi) {
  ThetaExpansion out;
  for (const auto& [m, f] : v.modes) {
    if (m != 1 && m != -1) continue;
    SpinorArray g(4, f.cols());
    for (Eigen::Index i = 0; i < f.cols(); ++i) {
      const Vec3 xi = grad_phi.col(i);
      g.col(i) = (m == 1 ? dirac::partial_inverse(Band::Plus, xi) : dirac::partial_inverse(Band::Minus, Vec3(-xi))) *
                 f.col(i);
    }
    out.modes[m] = std::move(g);
  }
  return out;
}

AmplitudePair polarize_initial(const SpinorArray& chi0, const VectorField& grad_phi, BandSplit split) {
  AmplitudePair u = AmplitudePair::zeros(static_cast<std::size_t>(chi0.cols()));
  for (Eigen::Index i = 0; i < chi0.cols(); ++i) {
    const Vec3 xi = grad_phi.col(i);
    if (split != BandSplit::Minus) u.plus.col(i) = plus_projector(xi) * chi0.col(i);
    if (split != BandSplit::Plus) u.minus.col(i) = minus_projector(xi) * chi0.col(i);
  }
  return u;
}

double polarization_defect(const AmplitudePair& u, const VectorField& grad_phi) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const Vec3 xi = grad_phi.col(i);
    d = std::max(d, (dirac::projector(Band::Minus, xi) * u.plus.col(i)).norm());
    d = std::max(d, (dirac::projector(Band::Plus, Vec3(-xi)) * u.minus.col(i)).norm());
  }
  return d;
}

void reproject(AmplitudePair& u, const VectorField& grad_phi) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const Vec3 xi = grad_phi.col(i);
    const Spinor p = plus_projector(xi) * u.plus.col(i);
    const Spinor m = minus_projector(xi) * u.minus.col(i);
    d = std::max({d, (u.plus.col(i) - p).norm(), (u.minus.col(i) - m).norm()});
    u.plus.col(i) = p;
    u.minus.col(i) = m;
  }
  u.polarization_defect = d;
}

ComplexField gamma(const RealField& V, const VectorField& A0, const PhaseField& phase, std::size_t time_index,
                   Band) {
  const VectorField& grad = phase.grad_phi.at(time_index);
  const RealField& div = phase.div_omega_plus.at(time_index);
  ComplexField g(V.size());
  for (Eigen::Index i = 0; i < V.size(); ++i) {
    const Vec3 xi = grad.col(i);
    const double a = A0.col(i).dot(dirac::group_velocity(Band::Plus, xi));
    g(i) = kI * (a - V(i)) - 0.5 * div(i);
  }
  return g;
}

RayTransport::RayTransport(RayBundle rays, const AmplitudePair& initial)
    : rays_(std::move(rays)), seed_(initial), exponent_(ComplexField::Zero(initial.size())) {
  if (static_cast<std::size_t>(initial.size()) != rays_.size())
    throw Error(ErrorKind::InvalidArgument, "initial amplitudes do not match the ray count");
  if (rays_.branch != PhaseBranch::Electron)
    throw Error(ErrorKind::InvalidArgument, "amplitude transport runs on the electron branch");
}

ComplexField RayTransport::potential_rate(const PotentialState& p) const {
  const std::size_t n = rays_.size();
  ComplexField g(col(n));
  const GridSpec& grid = rays_.grid;
  parallel_for(n, default_threads(), [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      const Vec3 x = rays_.position(r, p.time);
      const Vec3 omega = dirac::group_velocity(Band::Plus, Vec3(rays_.xi0.col(col(r))));
      g(col(r)) = kI * (interpolate(grid, p.A, x).dot(omega) - interpolate(grid, p.V, x));
    }
  });
  return g;
}

void RayTransport::advance(const PotentialState& now, const PotentialState& next) {
  const double dt = next.time - now.time;
  if (std::abs(now.time - time_) > 1e-12 * (1.0 + std::abs(time_)) || !(dt > 0.0))
    throw Error(ErrorKind::InvalidArgument, "advance expects potentials at the current time and a later one");
  exponent_ += 0.5 * dt * (potential_rate(now) + potential_rate(next));
  time_ = next.time;
}

ComplexField RayTransport::propagator() const {
  ComplexField e(exponent_.size());
  for (Eigen::Index r = 0; r < e.size(); ++r)
    e(r) = std::exp(exponent_(r)) / std::sqrt(rays_.jacobian(static_cast<std::size_t>(r), time_));
  return e;
}

AmplitudePair RayTransport::on_rays() const {
  const ComplexField e = propagator();
  AmplitudePair u = seed_;
  u.plus = u.plus * e.matrix().asDiagonal();
  u.minus = u.minus * e.matrix().asDiagonal();
  u.time = time_;
  return u;
}

AmplitudePair RayTransport::to_grid(const VectorField& feet, const VectorField& grad_phi) const {
  const AmplitudePair r = on_rays();
  AmplitudePair u{pull_back(rays_.grid, r.plus, feet), pull_back(rays_.grid, r.minus, feet), time_, 0.0};
  reproject(u, grad_phi);
  return u;
}

SpinorArray pull_back(const GridSpec& grid, const SpinorArray& per_ray, const VectorField& feet) {
  SpinorArray out(4, feet.cols());
  parallel_for(static_cast<std::size_t>(feet.cols()), default_threads(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out.col(col(i)) = interpolate(grid, per_ray, Vec3(feet.col(col(i))));
  });
  return out;
}

SpinorArray sample_on_rays(const RayBundle& rays, const SpinorArray& field, double t) {
  SpinorArray out(4, col(rays.size()));
  parallel_for(rays.size(), default_threads(), [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) out.col(col(r)) = interpolate(rays.grid, field, rays.position(r, t));
  });
  return out;
}

std::size_t WKBSolution::time_index(double t) const {
  const double tol = 1e-9 * std::max(dt(), 1e-12);
  for (std::size_t k = 0; k < phase.times.size(); ++k)
    if (std::abs(phase.times[k] - t) <= tol) return k;
  throw Error(ErrorKind::InvalidArgument, "time " + std::to_string(t) + " is not a stored time");
}

double wkb_time_step(const GridSpec& grid, double T, double requested) {
  if (!(T > 0.0)) throw Error(ErrorKind::InvalidArgument, "T must be positive");
  double hmin = grid.spacing(0);
  for (int a = 1; a < grid.active_axes(); ++a) hmin = std::min(hmin, grid.spacing(a));
  const double target = requested > 0.0 ? requested : std::min(0.5 * hmin, T / 200.0);
  const double steps = std::ceil(T / target - 1e-9);
  return T / steps;
}

namespace {

double eikonal_defect(const PhaseField& pf, std::size_t k) {
  const RealField v = pf.dt_phi[k].square() - pf.grad_phi[k].colwise().squaredNorm().transpose().array() - 1.0;
  return v.size() ? v.abs().maxCoeff() : 0.0;
}

}  // namespace

WKBSolution run_wkb(const WkbOptions& o) {
  o.grid.validate();
  if (o.branch != PhaseBranch::Electron)
    throw Error(ErrorKind::InvalidArgument, "amplitude transport runs on the electron branch");
  const std::size_t n = o.grid.size();
  if (static_cast<std::size_t>(o.chi0.cols()) != n)
    throw Error(ErrorKind::InvalidArgument, "initial amplitude does not match the grid");
  const double dt = wkb_time_step(o.grid, o.T, o.dt);
  const auto steps = static_cast<std::size_t>(std::lround(o.T / dt));
  std::vector<double> times(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) times[k] = k == steps ? o.T : dt * static_cast<double>(k);

  WKBSolution s;
  s.grid = o.grid;
  s.coupling = o.coupling;
  s.potential_order = o.potential_order;
  s.charge_tolerance = o.charge_tolerance;
  s.defect_tolerance = o.defect_tolerance;
  s.rays = solve_rays(o.phase, o.grid, o.T, 1, o.branch);
  s.phase = phase_on_grid(s.rays, o.grid, times);

  if (o.chi0_minus.size() != 0 && static_cast<std::size_t>(o.chi0_minus.cols()) != n)
    throw Error(ErrorKind::InvalidArgument, "initial minus amplitude does not match the grid");
  AmplitudePair u0;
  if (o.chi0_minus.size() == 0) {
    u0 = polarize_initial(o.chi0, s.phase.grad_phi[0], o.split);
  } else {
    u0 = polarize_initial(o.chi0, s.phase.grad_phi[0], BandSplit::Plus);
    u0.minus = polarize_initial(o.chi0_minus, s.phase.grad_phi[0], BandSplit::Minus).minus;
  }
  RayTransport tr(s.rays, u0);
  std::optional<PotentialStepper> waves;
  if (o.coupling) waves.emplace(o.grid, dt, o.potential_order);

  PotentialState cur = PotentialState::zeros(n);
  double charge0 = 0.0, prev = 0.0;
  for (std::size_t k = 0; k <= steps; ++k) {
    try {
      AmplitudePair u = tr.to_grid(s.phase.feet[k], s.phase.grad_phi[k]);
      u.time = times[k];
      ConservationRecord rec;
      rec.time = times[k];
      rec.charge = norm2_squared(o.grid, u.plus) + norm2_squared(o.grid, u.minus);
      if (k == 0) charge0 = prev = rec.charge;
      rec.charge_drift = charge0 > 0.0 ? std::abs(rec.charge - charge0) / charge0 : 0.0;
      rec.polarization_defect = u.polarization_defect;
      rec.eikonal_residual = eikonal_defect(s.phase, k);
      if (charge0 > 0.0 && std::abs(rec.charge - prev) > 10.0 * o.charge_tolerance * charge0)
        throw Error(ErrorKind::ConservationBreach, "charge moved by " + std::to_string(std::abs(rec.charge - prev) / charge0) +
                                                       " (relative) in one step");
      prev = rec.charge;
      s.log.push_back(rec);
      s.exponents.push_back(tr.exponent());
      s.potentials.push_back(cur);
      if (k < steps) {
        PotentialState next = PotentialState::zeros(n);
        next.time = times[k + 1];
        if (waves) {
          const MeanSources src = mean_sources(u, s.phase.grad_phi[k]);
          next = waves->step(src.rho, src.j);
          next.time = times[k + 1];
        }
        tr.advance(cur, next);
        cur = std::move(next);
      }
      s.amplitudes.push_back(std::move(u));
    } catch (const Error& e) {
      throw at_step(e, k);
    }
  }
  if (o.corrector) s.corrector = first_corrector(s);
  return s;
}

namespace {

// i (alpha - omega).grad u + (alpha.A0) u on the grid, omega = omega_+(grad phi).
SpinorArray covariant_term(const GridSpec& g, const SpinorArray& u, const VectorField& A0, const VectorField& grad) {
  const auto& m = dirac::dirac_matrices();
  SpinorArray out(4, u.cols());
  for (Eigen::Index i = 0; i < u.cols(); ++i) out.col(i) = dirac::alpha_dot<double>(A0.col(i)) * u.col(i);
  for (int a = 0; a < g.active_axes(); ++a) {
    const SpinorArray du = derivative(g, u, a);
    out += kI * (m.alpha[static_cast<std::size_t>(a)] * du);
    for (Eigen::Index i = 0; i < u.cols(); ++i) {
      const Vec3 xi = grad.col(i);
      out.col(i) -= kI * (xi(a) / dirac::lambda(xi)) * du.col(i);
    }
  }
  return out;
}

SpinorArray alpha_grad(const GridSpec& g, const SpinorArray& u) {
  const auto& m = dirac::dirac_matrices();
  SpinorArray out = SpinorArray::Zero(4, u.cols());
  for (int a = 0; a < g.active_axes(); ++a) out += m.alpha[static_cast<std::size_t>(a)] * derivative(g, u, a);
  return out;
}

// Second-order time derivative of a uniformly stored sequence.
SpinorArray time_derivative(const std::vector<SpinorArray>& f, std::size_t k, double dt) {
  const std::size_t last = f.size() - 1;
  if (last == 0) return SpinorArray::Zero(4, f[0].cols());
  if (last == 1) return (f[1] - f[0]) / dt;
  if (k == 0) return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2 * dt);
  if (k == last) return (3.0 * f[last] - 4.0 * f[last - 1] + f[last - 2]) / (2 * dt);
  return (f[k + 1] - f[k - 1]) / (2 * dt);
}

}  // namespace

CorrectorTrajectory first_corrector(const WKBSolution& s) {
  const GridSpec& g = s.grid;
  const std::size_t nt = s.time_count();
  const std::size_t n = g.size();
  const double dt = s.dt();
  CorrectorTrajectory c;
  if (nt == 0) return c;

  // Non-propagating parts; d_t u0 = -omega.grad u0 + Gamma u0 removes the time derivative.
  std::vector<SpinorArray> np(nt), nm(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    const AmplitudePair& u = s.amplitudes[k];
    const VectorField& grad = s.phase.grad_phi[k];
    const SpinorArray wp = covariant_term(g, u.plus, s.potentials[k].A, grad);
    const SpinorArray wm = covariant_term(g, u.minus, s.potentials[k].A, grad);
    np[k].resize(4, col(n));
    nm[k].resize(4, col(n));
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 xi = grad.col(col(i));
      const double l = dirac::lambda(xi);
      np[k].col(col(i)) = -(dirac::projector(Band::Minus, xi) * wp.col(col(i))) / (2 * l);
      nm[k].col(col(i)) = (dirac::projector(Band::Plus, Vec3(-xi)) * wm.col(col(i))) / (2 * l);
    }
  }

  // Source r of the propagating part at step k given the corrector potentials there.
  auto source = [&](std::size_t k, const PotentialState& p2) {
    const AmplitudePair& u = s.amplitudes[k];
    const PotentialState& p0 = s.potentials[k];
    const VectorField& grad = s.phase.grad_phi[k];
    const SpinorArray fp = time_derivative(np, k, dt) + alpha_grad(g, np[k]);
    const SpinorArray fm = time_derivative(nm, k, dt) + alpha_grad(g, nm[k]);
    AmplitudePair r = AmplitudePair::zeros(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = col(i);
      const Vec3 xi = grad.col(ii);
      const Matrix4c pp = plus_projector(xi), pm = minus_projector(xi);
      const Matrix4c pot = Matrix4c::Identity() * p0.V(ii) - dirac::alpha_dot<double>(p0.A.col(ii));
      const cplx lin = p2.V(ii) - p2.A.col(ii).dot(dirac::group_velocity(Band::Plus, xi));
      r.plus.col(ii) = -pp * (fp.col(ii) + kI * (pot * np[k].col(ii))) - kI * lin * u.plus.col(ii);
      r.minus.col(ii) = -pm * (fm.col(ii) + kI * (pot * nm[k].col(ii))) - kI * lin * u.minus.col(ii);
    }
    return r;
  };

  std::optional<PotentialStepper> waves;
  if (s.coupling) waves.emplace(g, dt, s.potential_order);
  PotentialState p2 = PotentialState::zeros(n);
  AmplitudePair rays_p = AmplitudePair::zeros(n);
  AmplitudePair r_now = source(0, p2);
  SpinorArray rp = sample_on_rays(s.rays, r_now.plus, 0.0), rm = sample_on_rays(s.rays, r_now.minus, 0.0);

  for (std::size_t k = 0; k < nt; ++k) {
    const double t = s.phase.times[k];
    AmplitudePair p{pull_back(g, rays_p.plus, s.phase.feet[k]), pull_back(g, rays_p.minus, s.phase.feet[k]), t, 0.0};
    reproject(p, s.phase.grad_phi[k]);
    if (k + 1 == nt) {
      c.propagating.push_back(std::move(p));
      c.nonpropagating.push_back({np[k], nm[k], t, 0.0});
      break;
    }
    PotentialState next = PotentialState::zeros(n);
    if (waves) {
      // Mean part of 2 Re <u0, u2> and 2 Re <u0, alpha u2>.
      const AmplitudePair& u = s.amplitudes[k];
      const SpinorArray qp = p.plus + np[k], qm = p.minus + nm[k];
      RealField rho(col(n));
      VectorField j(3, col(n));
      const auto& m = dirac::dirac_matrices();
      for (std::size_t i = 0; i < n; ++i) {
        const auto ii = col(i);
        rho(ii) = 2.0 * (u.plus.col(ii).dot(qp.col(ii)) + u.minus.col(ii).dot(qm.col(ii))).real();
        for (int a = 0; a < 3; ++a) {
          const auto& al = m.alpha[static_cast<std::size_t>(a)];
          j(a, ii) = 2.0 * (u.plus.col(ii).dot(al * qp.col(ii)) + u.minus.col(ii).dot(al * qm.col(ii))).real();
        }
      }
      next = waves->step(rho, j);
    }
    next.time = s.phase.times[k + 1];
    const AmplitudePair r_next = source(k + 1, next);
    const SpinorArray rp1 = sample_on_rays(s.rays, r_next.plus, next.time);
    const SpinorArray rm1 = sample_on_rays(s.rays, r_next.minus, next.time);
    for (std::size_t r = 0; r < n; ++r) {
      const auto rr = col(r);
      const cplx ratio = std::exp(s.exponents[k + 1](rr) - s.exponents[k](rr)) *
                         std::sqrt(s.rays.jacobian(r, t) / s.rays.jacobian(r, next.time));
      const Vec3 xi = s.rays.xi0.col(rr);
      rays_p.plus.col(rr) =
          plus_projector(xi) * (ratio * (rays_p.plus.col(rr) + 0.5 * dt * rp.col(rr)) + 0.5 * dt * rp1.col(rr));
      rays_p.minus.col(rr) =
          minus_projector(xi) * (ratio * (rays_p.minus.col(rr) + 0.5 * dt * rm.col(rr)) + 0.5 * dt * rm1.col(rr));
    }
    rp = rp1;
    rm = rm1;
    c.propagating.push_back(std::move(p));
    c.nonpropagating.push_back({np[k], nm[k], t, 0.0});
    p2 = std::move(next);
  }
  return c;
}

SpinorArray synthesize(const WKBSolution& s, double eps, std::size_t k, bool with_corrector) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
  if (k >= s.time_count()) throw Error(ErrorKind::InvalidArgument, "time index out of range");
  const AmplitudePair& u = s.amplitudes[k];
  const RealField& phi = s.phase.phi[k];
  const bool corr = with_corrector && s.corrector.has_value();
  const double a = std::sqrt(eps), b = eps * a;
  SpinorArray psi(4, u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const cplx e = std::exp(kI * (phi(i) / eps));
    Spinor v = a * (u.plus.col(i) * e + u.minus.col(i) * std::conj(e));
    if (corr) {
      const auto ki = static_cast<std::size_t>(k);
      const Spinor cp = s.corrector->propagating[ki].plus.col(i) + s.corrector->nonpropagating[ki].plus.col(i);
      const Spinor cm = s.corrector->propagating[ki].minus.col(i) + s.corrector->nonpropagating[ki].minus.col(i);
      v += b * (cp * e + cm * std::conj(e));
    }
    psi.col(i) = v;
  }
  return psi;
}

SpinorArray synthesize_at(const WKBSolution& s, double eps, double t, bool with_corrector) {
  return synthesize(s, eps, s.time_index(t), with_corrector);
}

}  // namespace mdwkb
