#include "doctest.h"

#include <cmath>
#include <random>

#include "mdwkb/dirac.hpp"
#include "mdwkb/transport.hpp"

using namespace mdwkb;

namespace {

Spinor random_spinor(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Spinor s;
  for (int i = 0; i < 4; ++i) s(i) = cplx(n(rng), n(rng));
  return s;
}

SpinorArray random_field(std::mt19937_64& rng, Eigen::Index n) {
  SpinorArray f(4, n);
  for (Eigen::Index i = 0; i < n; ++i) f.col(i) = random_spinor(rng);
  return f;
}

VectorField random_momenta(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(-3, 3);
  VectorField v(3, n);
  for (Eigen::Index i = 0; i < n; ++i) v.col(i) = Vec3(u(rng), u(rng), u(rng));
  return v;
}

double max_diff(const ThetaExpansion& a, const ThetaExpansion& b) {
  double d = 0;
  for (const auto& [m, f] : a.modes) {
    const auto it = b.modes.find(m);
    d = std::max(d, it == b.modes.end() ? f.cwiseAbs().maxCoeff() : (f - it->second).cwiseAbs().maxCoeff());
  }
  for (const auto& [m, f] : b.modes)
    if (!a.modes.count(m)) d = std::max(d, f.cwiseAbs().maxCoeff());
  return d;
}

// Electron Gaussian packet on the quadratic phase 0.5 x + 0.25 x^2.
WkbOptions packet(int n, bool coupling, BandSplit split = BandSplit::Plus) {
  WkbOptions o;
  o.grid = GridSpec::reduced_1d(-4, 4, n);
  o.phase = InitialPhase::quadratic(0.5, Vec3(0.5, 0, 0));
  o.T = 0.5;
  o.coupling = coupling;
  o.split = split;
  o.chi0 = SpinorArray::Zero(4, n);
  for (int i = 0; i < n; ++i) {
    const double x = o.grid.node(i, 0, 0)(0);
    o.chi0(0, i) = 2 * std::exp(-x * x / 0.32);
    if (split != BandSplit::Plus) o.chi0(2, i) = std::exp(-(x - 0.3) * (x - 0.3) / 0.32);
  }
  return o;
}

}  // namespace

TEST_CASE("theta expansion projectors") {
  std::mt19937_64 rng(3);
  const Eigen::Index n = 50;
  const VectorField xi = random_momenta(rng, n);

  ThetaExpansion only0;
  only0.modes[0] = random_field(rng, n);
  CHECK(project_P(only0, xi).modes.empty());

  ThetaExpansion pol;
  pol.modes[1] = random_field(rng, n);
  for (Eigen::Index i = 0; i < n; ++i)
    pol.modes[1].col(i) = dirac::projector(Band::Plus, Vec3(xi.col(i))) * pol.modes[1].col(i);
  CHECK(max_diff(project_P(pol, xi), pol) < 1e-14);
  CHECK(project_Q(pol, xi).modes.at(1).cwiseAbs().maxCoeff() < 1e-14);

  ThetaExpansion v;
  for (int m = -3; m <= 3; ++m) v.modes[m] = random_field(rng, n);
  const ThetaExpansion pv = project_P(v, xi);
  CHECK(max_diff(project_P(pv, xi), pv) < 1e-13);
  for (const auto& [m, f] : project_Q(pv, xi).modes) CHECK(f.cwiseAbs().maxCoeff() < 1e-13);

  // Lambda_+ D w = (Id - Pi_+) w at a point.
  ThetaExpansion dw, w;
  w.modes[1] = random_field(rng, n);
  dw.modes[1] = w.modes[1];
  for (Eigen::Index i = 0; i < n; ++i) dw.modes[1].col(i) = dirac::symbol(Vec3(xi.col(i))) * w.modes[1].col(i);
  const ThetaExpansion q = project_Q(dw, xi);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Spinor expect = w.modes[1].col(i) - dirac::projector(Band::Plus, Vec3(xi.col(i))) * w.modes[1].col(i);
    CHECK((q.modes.at(1).col(i) - expect).norm() < 1e-13);
  }
  CHECK(project_Q(ThetaExpansion{}, xi).modes.empty());

  // Sampling and evaluation are inverse on band-limited data.
  std::vector<SpinorArray> samples;
  for (int s = 0; s < 16; ++s) samples.push_back(v.evaluate(2 * kPi * s / 16, n));
  CHECK(max_diff(ThetaExpansion::from_samples(samples, 3), v) < 1e-13);
}

TEST_CASE("polarize_initial") {
  std::mt19937_64 rng(5);
  const Eigen::Index n = 20;
  const VectorField xi = random_momenta(rng, n);
  SpinorArray chi = random_field(rng, n);
  for (Eigen::Index i = 0; i < n; ++i) chi.col(i) = dirac::projector(Band::Plus, Vec3(xi.col(i))) * chi.col(i);
  const AmplitudePair a = polarize_initial(chi, xi, BandSplit::Plus);
  CHECK((a.plus - chi).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(a.minus.cwiseAbs().maxCoeff() == 0.0);

  SpinorArray e1 = SpinorArray::Zero(4, 1);
  e1(0, 0) = 1.0;
  const AmplitudePair b = polarize_initial(e1, VectorField::Zero(3, 1), BandSplit::Both);
  CHECK((b.plus - e1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.minus.cwiseAbs().maxCoeff() == 0.0);

  const SpinorArray r = random_field(rng, n);
  const AmplitudePair c = polarize_initial(r, VectorField::Zero(3, n), BandSplit::Both);
  CHECK((c.plus + c.minus - r).cwiseAbs().maxCoeff() < 1e-14);
  const AmplitudePair d = polarize_initial(r, xi, BandSplit::Both);
  CHECK(polarization_defect(d, xi) < 1e-14);
  // The minus amplitude rides Pi_-(-xi) = beta Pi_-(xi) beta.
  const Matrix4c beta = dirac::dirac_matrices().beta;
  for (Eigen::Index i = 0; i < n; ++i)
    CHECK((d.minus.col(i) - beta * dirac::projector(Band::Minus, Vec3(xi.col(i))) * beta * r.col(i)).norm() < 1e-13);
}

TEST_CASE("gamma coefficient") {
  const GridSpec g = GridSpec::reduced_1d(-2, 2, 64);
  const RayBundle plane = solve_rays(InitialPhase::plane(Vec3(0.7, 0, 0)), g, 0.1, 1);
  const PhaseField pp = phase_on_grid(plane, g, {0.0});
  const RealField zero = RealField::Zero(64);
  const VectorField a0 = VectorField::Zero(3, 64);
  CHECK(gamma(zero, a0, pp, 0, Band::Plus).abs().maxCoeff() < 1e-15);
  const ComplexField gv = gamma(RealField::Ones(64), a0, pp, 0, Band::Minus);
  CHECK((gv - cplx(0, -1)).abs().maxCoeff() < 1e-15);

  // -div(omega)/2 for |x|^2/2 against d/dx (x / sqrt(1 + x^2)) = (1 + x^2)^{-3/2}.
  auto err = [](int n) {
    const GridSpec q = GridSpec::reduced_1d(-1, 1, n + 1, false);
    const PhaseField pf = phase_on_grid(solve_rays(InitialPhase::quadratic(1.0), q, 0.1, 1), q, {0.0});
    const ComplexField g0 = gamma(RealField::Zero(n + 1), VectorField::Zero(3, n + 1), pf, 0, Band::Plus);
    double e = 0;
    for (int i = 1; i < n; ++i) {
      const double x = q.node(i, 0, 0)(0);
      e = std::max(e, std::abs(g0(i) + 0.5 * std::pow(1 + x * x, -1.5)));
    }
    return e;
  };
  const double e1 = err(32), e2 = err(64);
  CHECK(e1 < 1e-3);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("ray transport steps") {
  const GridSpec g = GridSpec::reduced_1d(-2, 2, 32);
  const RayBundle rb = solve_rays(InitialPhase::plane(Vec3(0.4, 0, 0)), g, 0.5, 1);
  std::mt19937_64 rng(11);
  const VectorField xi = rb.xi0;
  const AmplitudePair u0 = polarize_initial(random_field(rng, 32), xi, BandSplit::Both);
  RayTransport tr(rb, u0);
  PotentialState a = PotentialState::zeros(32), b = PotentialState::zeros(32);
  b.time = 0.1;
  tr.advance(a, b);
  CHECK((tr.on_rays().plus - u0.plus).cwiseAbs().maxCoeff() < 1e-15);

  // V = 1: pure rotation e^{-i dt}.
  PotentialState c = PotentialState::zeros(32), d = PotentialState::zeros(32);
  c.V.setOnes();
  d.V.setOnes();
  c.time = 0.1;
  d.time = 0.35;
  tr.advance(c, d);
  const AmplitudePair u = tr.on_rays();
  CHECK((u.plus - u0.plus * std::exp(cplx(0, -0.25))).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((u.minus.colwise().norm() - u0.minus.colwise().norm()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(tr.advance(a, b), Error);
}

TEST_CASE("uncoupled run matches the ray oracle") {
  const WkbOptions o = packet(512, false);
  const WKBSolution s = run_wkb(o);
  CHECK(s.log.back().charge_drift < 1e-6);
  CHECK(s.potentials.back().V.abs().maxCoeff() == 0.0);

  // Rays only: chi(x0) Pi_+(xi0) J^{-1/2}, J = 1 + t a / lambda^3.
  RayTransport tr(s.rays, polarize_initial(o.chi0, s.phase.grad_phi[0], BandSplit::Plus));
  PotentialState p0 = PotentialState::zeros(512), p1 = PotentialState::zeros(512);
  p1.time = o.T;
  tr.advance(p0, p1);
  const AmplitudePair r = tr.on_rays();
  double err = 0;
  for (int i = 0; i < 512; ++i) {
    const double x0 = o.grid.node(i, 0, 0)(0);
    const Vec3 xi(0.5 + 0.5 * x0, 0, 0);
    const double l = std::sqrt(1 + xi.squaredNorm());
    Spinor e1 = Spinor::Zero();
    e1(0) = 2 * std::exp(-x0 * x0 / 0.32);
    const Spinor expect = dirac::projector(Band::Plus, xi) * e1 / std::sqrt(1 + o.T * 0.5 / (l * l * l));
    err = std::max(err, (r.plus.col(i) - expect).norm());
  }
  CHECK(err < 1e-10);

  // On the grid the same oracle at the foot points, up to cubic interpolation.
  double gerr = 0;
  const AmplitudePair& ug = s.amplitudes.back();
  for (int i = 0; i < 512; ++i) {
    const double x = o.grid.node(i, 0, 0)(0);
    double x0 = x;
    for (int it = 0; it < 50; ++it) {
      const double k = 0.5 + 0.5 * x0, l = std::sqrt(1 + k * k);
      const double f = x0 + o.T * k / l - x, df = 1 + o.T * 0.5 / (l * l * l);
      x0 -= f / df;
    }
    const Vec3 xi(0.5 + 0.5 * x0, 0, 0);
    const double l = std::sqrt(1 + xi.squaredNorm());
    Spinor e1 = Spinor::Zero();
    e1(0) = 2 * std::exp(-x0 * x0 / 0.32);
    const Spinor expect = dirac::projector(Band::Plus, xi) * e1 / std::sqrt(1 + o.T * 0.5 / (l * l * l));
    gerr = std::max(gerr, (ug.plus.col(i) - expect).norm());
  }
  MESSAGE("grid vs oracle " << gerr);
  CHECK(gerr < 1e-6);
}

TEST_CASE("coupled electron packet conserves charge and polarization") {
  const WKBSolution s = run_wkb(packet(1024, true));
  double drift = 0, defect = 0;
  for (const auto& r : s.log) {
    drift = std::max(drift, r.charge_drift);
    defect = std::max(defect, r.polarization_defect);
    CHECK(r.eikonal_residual < 1e-12);
  }
  MESSAGE("drift " << drift << " defect " << defect);
  CHECK(drift < 1e-6);
  CHECK(defect < 1e-8);
  CHECK(s.potentials.back().V.maxCoeff() > 0.1);
  // The potentials turn the phase; the modulus follows the uncoupled run.
  const WKBSolution f = run_wkb(packet(1024, false));
  CHECK((s.amplitudes.back().plus - f.amplitudes.back().plus).cwiseAbs().maxCoeff() > 1e-3);
  CHECK((s.amplitudes.back().plus.colwise().norm() - f.amplitudes.back().plus.colwise().norm()).cwiseAbs().maxCoeff() <
        1e-6);
}

TEST_CASE("zero data and errors") {
  WkbOptions o = packet(128, true);
  o.chi0.setZero();
  o.corrector = true;
  const WKBSolution s = run_wkb(o);
  for (const auto& u : s.amplitudes) CHECK(u.plus.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& p : s.potentials) CHECK(p.V.abs().maxCoeff() == 0.0);
  for (const auto& p : s.corrector->propagating) CHECK(p.plus.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& p : s.corrector->nonpropagating) CHECK(p.plus.cwiseAbs().maxCoeff() == 0.0);

  WkbOptions late = packet(128, false);
  late.T = 2.5;
  CHECK_THROWS_AS(run_wkb(late), Error);
  WkbOptions pos = packet(128, false);
  pos.branch = PhaseBranch::Positron;
  CHECK_THROWS_AS(run_wkb(pos), Error);
}

TEST_CASE("corrector structure") {
  WkbOptions o = packet(256, true);
  o.corrector = true;
  const WKBSolution s = run_wkb(o);
  REQUIRE(s.corrector.has_value());
  const auto& c = *s.corrector;
  CHECK(c.propagating.size() == s.time_count());
  // Single band: the corrector stays on the e^{+i phi/eps} mode.
  for (std::size_t k = 0; k < s.time_count(); ++k) {
    CHECK(c.propagating[k].minus.cwiseAbs().maxCoeff() == 0.0);
    CHECK(c.nonpropagating[k].minus.cwiseAbs().maxCoeff() == 0.0);
  }
  // Zero initial propagating part; the non-propagating part lies in the other band.
  CHECK(c.propagating[0].plus.cwiseAbs().maxCoeff() == 0.0);
  CHECK(c.propagating.back().plus.cwiseAbs().maxCoeff() > 0.0);
  const std::size_t k = s.time_count() / 2;
  for (Eigen::Index i = 0; i < 256; ++i) {
    const Vec3 xi = s.phase.grad_phi[k].col(i);
    CHECK((dirac::projector(Band::Plus, xi) * c.nonpropagating[k].plus.col(i)).norm() < 1e-12);
    CHECK((dirac::projector(Band::Minus, xi) * c.propagating[k].plus.col(i)).norm() < 1e-12);
  }
}

TEST_CASE("synthesis") {
  WkbOptions o = packet(256, false);
  const WKBSolution s = run_wkb(o);
  const double n2 = norm2_squared(o.grid, s.amplitudes.back().plus);
  for (double eps : {1.0 / 16, 1.0 / 32}) {
    const SpinorArray psi = synthesize(s, eps, s.time_count() - 1);
    CHECK(norm2_squared(o.grid, psi) == doctest::Approx(eps * n2).epsilon(1e-13));
  }
  CHECK_THROWS_AS(synthesize(s, 0.0, 0), Error);
  CHECK_THROWS_AS(synthesize_at(s, 0.1, 0.123456), Error);
  CHECK((synthesize_at(s, 0.1, o.T) - synthesize(s, 0.1, s.time_count() - 1)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("full-3d smoke run") {
  WkbOptions o;
  o.grid = GridSpec::full_3d(-2, 2, 24, false);
  o.phase = InitialPhase::quadratic(0.3, Vec3(0.2, 0.1, 0));
  o.T = 0.1;
  o.dt = 0.01;
  o.charge_tolerance = 1e-4;
  o.corrector = true;
  o.chi0 = SpinorArray::Zero(4, static_cast<Eigen::Index>(o.grid.size()));
  for (std::size_t i = 0; i < o.grid.size(); ++i) o.chi0(0, static_cast<Eigen::Index>(i)) = std::exp(-2 * o.grid.node(i).squaredNorm());
  const WKBSolution s = run_wkb(o);
  // Interpolation-limited on 24^3; the stored amplitudes are re-projected.
  CHECK(s.log.back().charge_drift < 1e-3);
  CHECK(s.log.back().polarization_defect < 1e-3);
  CHECK(polarization_defect(s.amplitudes.back(), s.phase.grad_phi.back()) < 1e-13);
  CHECK(s.corrector->propagating.size() == s.time_count());
}
