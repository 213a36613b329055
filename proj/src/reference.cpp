#include "mdwkb/reference.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>

#include "mdwkb/dirac.hpp"
#include "mdwkb/transport.hpp"

namespace mdwkb {

void kinetic_step(const Spectral& sp, SpinorArray& psi, double eps, double dt) {
  if (dt == 0.0) return;
  sp.forward(psi);
  for (Eigen::Index i = 0; i < psi.cols(); ++i) {
    const Vec3 xi = eps * sp.wavevector(static_cast<std::size_t>(i));
    const double l = dirac::lambda(xi);
    const double c = std::cos(dt * l / eps), s = std::sin(dt * l / eps);
    // cos - i sin D/lambda
    Matrix4c m = dirac::symbol(xi) * cplx(0.0, -s / l);
    m.diagonal().array() += c;
    psi.col(i) = m * psi.col(i);
  }
  sp.inverse(psi);
}

void potential_step(SpinorArray& psi, const RealField& V, const VectorField& A, double eps, double dt) {
  for (Eigen::Index i = 0; i < psi.cols(); ++i) {
    const Vec3 a = A.col(i);
    const double n = a.norm();
    const cplx phase = std::exp(cplx(0.0, -dt * V(i) / eps));
    if (n == 0.0) {
      psi.col(i) *= phase;
      continue;
    }
    const double th = dt * n / eps;
    Matrix4c m = dirac::alpha_dot<double>(a / n) * cplx(0.0, std::sin(th));
    m.diagonal().array() += std::cos(th);
    psi.col(i) = phase * (m * psi.col(i));
  }
}

double max_spacing(double eps) { return 2 * kPi * eps / 8.0; }

namespace {

PotentialState lerp(const PotentialState& a, const PotentialState& b, double s) {
  PotentialState p = a;
  p.V = (1 - s) * a.V + s * b.V;
  p.A = (1 - s) * a.A + s * b.A;
  p.time = (1 - s) * a.time + s * b.time;
  return p;
}

double field_energy(const GridSpec& g, const RealField& u, const RealField& dtu) {
  RealField e = dtu.square();
  for (int a = 0; a < g.active_axes(); ++a) e += derivative(g, u, a).square();
  return 0.5 * integrate(g, e);
}

}  // namespace

ReferenceTrajectory run_reference(const ReferenceOptions& o, const SpinorArray& psi0) {
  const GridSpec& g = o.grid;
  g.validate();
  if (!(o.epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
  if (static_cast<std::size_t>(psi0.cols()) != g.size())
    throw Error(ErrorKind::InvalidArgument, "initial spinor does not match the grid");
  for (int a = 0; a < g.active_axes(); ++a)
    if (g.spacing(a) > max_spacing(o.epsilon) * (1 + 1e-12))
      throw Error(ErrorKind::ResolutionInsufficient,
                  "spacing " + std::to_string(g.spacing(a)) + " exceeds 2 pi eps / 8 = " + std::to_string(max_spacing(o.epsilon)));
  if (o.substeps < 1) throw Error(ErrorKind::InvalidArgument, "substeps must be >= 1");
  const Spectral sp(g);
  const double dt = wkb_time_step(g, o.T, o.dt);
  const auto steps = static_cast<std::size_t>(std::lround(o.T / dt));
  const std::size_t n = g.size();

  std::optional<PotentialStepper> waves;
  if (o.coupling) waves.emplace(g, dt, o.potential_order);

  std::vector<std::size_t> keep;
  for (double t : o.store_times) keep.push_back(static_cast<std::size_t>(std::clamp<long>(std::lround(t / dt), 0, static_cast<long>(steps))));
  keep.push_back(steps);

  ReferenceTrajectory tr;
  SpinorArray psi = psi0;
  PotentialState cur = PotentialState::zeros(n);
  const double h = dt / o.substeps;
  for (std::size_t k = 0;; ++k) {
    const double t = k == steps ? o.T : dt * static_cast<double>(k);
    cur.time = t;
    ReferenceLogEntry e;
    e.time = t;
    e.charge = norm2_squared(g, psi);
    if (o.coupling) {
      e.field_energy_V = field_energy(g, cur.V, cur.dtV);
      for (int a = 0; a < 3; ++a)
        e.field_energy_A += field_energy(g, cur.A.row(a).transpose().array(), cur.dtA.row(a).transpose().array());
    }
    tr.log.push_back(e);
    if (std::find(keep.begin(), keep.end(), k) != keep.end()) tr.states.push_back({psi, cur, o.epsilon, t});
    if (k == steps) break;

    PotentialState next = PotentialState::zeros(n);
    if (waves) {
      next = waves->step(density(psi), dirac_current(psi));
    }
    next.time = k + 1 == steps ? o.T : dt * static_cast<double>(k + 1);
    for (int s = 0; s < o.substeps; ++s) {
      if (o.coupling) {
        const PotentialState a = lerp(cur, next, double(s) / o.substeps);
        potential_step(psi, a.V, a.A, o.epsilon, 0.5 * h);
      }
      kinetic_step(sp, psi, o.epsilon, h);
      if (o.coupling) {
        const PotentialState b = lerp(cur, next, double(s + 1) / o.substeps);
        potential_step(psi, b.V, b.A, o.epsilon, 0.5 * h);
      }
    }
    cur = std::move(next);
  }
  return tr;
}

void write_log_csv(std::ostream& out, const std::vector<ReferenceLogEntry>& log) {
  out << "time,charge,field_energy_V,field_energy_A\n";
  out.precision(17);
  for (const auto& e : log) out << e.time << ',' << e.charge << ',' << e.field_energy_V << ',' << e.field_energy_A << '\n';
}

}  // namespace mdwkb
