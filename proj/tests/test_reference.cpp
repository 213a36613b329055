#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "mdwkb/dirac.hpp"
#include "mdwkb/reference.hpp"
#include "mdwkb/transport.hpp"

using namespace mdwkb;

namespace {

SpinorArray random_field(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> d;
  SpinorArray f(4, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int c = 0; c < 4; ++c) f(c, i) = cplx(d(rng), d(rng));
  return f;
}

// Pi_+(xi) v e^{i xi x / eps} on a periodic grid of length 2 pi.
SpinorArray plane_wave(const GridSpec& g, double xi1, double eps) {
  Spinor v;
  v << 1.0, cplx(0.2, 0.1), 0.3, cplx(0, -0.4);
  const Spinor p = dirac::projector(Band::Plus, Vec3(xi1, 0, 0)) * v;
  SpinorArray f(4, static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i)
    f.col(static_cast<Eigen::Index>(i)) = p * std::exp(cplx(0, xi1 * g.node(i)(0) / eps));
  return f;
}

// Gaussian electron packet on the quadratic phase, sampled for eps.
SpinorArray packet_psi(const GridSpec& g, double eps, WKBSolution* wkb = nullptr, bool coupling = false) {
  WkbOptions o;
  o.grid = g;
  o.phase = InitialPhase::quadratic(0.5, Vec3(0.5, 0, 0));
  o.T = 0.25;
  o.coupling = coupling;
  o.chi0 = SpinorArray::Zero(4, static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.node(i)(0);
    o.chi0(0, static_cast<Eigen::Index>(i)) = 2 * std::exp(-x * x / 0.32);
  }
  WKBSolution s = run_wkb(o);
  SpinorArray psi = synthesize(s, eps, 0);
  if (wkb) *wkb = std::move(s);
  return psi;
}

}  // namespace

TEST_CASE("kinetic step") {
  const double eps = 1.0 / 16;
  const GridSpec g = GridSpec::reduced_1d(-kPi, kPi, 128);
  const Spectral sp(g);
  const SpinorArray w = plane_wave(g, 0.5, eps);  // wave number 8
  SpinorArray a = w;
  kinetic_step(sp, a, eps, 0.013);
  CHECK((a - w * std::exp(cplx(0, -0.013 * dirac::lambda(Vec3(0.5, 0, 0)) / eps))).cwiseAbs().maxCoeff() < 1e-12);

  std::mt19937_64 rng(1);
  const SpinorArray r = random_field(rng, 128);
  SpinorArray b = r;
  kinetic_step(sp, b, eps, 0.0);
  CHECK((b - r).cwiseAbs().maxCoeff() == 0.0);
  kinetic_step(sp, b, eps, 0.07);
  CHECK(std::abs(norm2_squared(g, b) / norm2_squared(g, r) - 1) < 1e-13);
}

TEST_CASE("potential step") {
  std::mt19937_64 rng(2);
  const Eigen::Index n = 40;
  const SpinorArray r = random_field(rng, n);
  const double eps = 0.05, dt = 0.01;
  RealField V = RealField::LinSpaced(n, -1, 2);

  SpinorArray a = r;
  potential_step(a, V, VectorField::Zero(3, n), eps, dt);
  for (Eigen::Index i = 0; i < n; ++i)
    CHECK((a.col(i) - r.col(i) * std::exp(cplx(0, -dt * V(i) / eps))).norm() < 1e-14);

  // V = 0, A = (0, 0, a): exp(i dt a alpha^3 / eps), and (alpha.A^)^2 = Id.
  VectorField A = VectorField::Zero(3, n);
  A.row(2).setConstant(0.7);
  SpinorArray b = r;
  potential_step(b, RealField::Zero(n), A, eps, dt);
  const Matrix4c a3 = dirac::dirac_matrices().alpha[2];
  CHECK((a3 * a3 - Matrix4c::Identity()).norm() < 1e-15);
  // Power series of the exponential as an independent check.
  const Matrix4c x = a3 * cplx(0, dt * 0.7 / eps);
  Matrix4c e = Matrix4c::Identity(), term = Matrix4c::Identity();
  for (int k = 1; k < 40; ++k) {
    term = term * x / double(k);
    e += term;
  }
  for (Eigen::Index i = 0; i < n; ++i) CHECK((b.col(i) - e * r.col(i)).norm() < 1e-13);
  CHECK(std::abs(norm2_squared(GridSpec::reduced_1d(0, 1, int(n)), b) /
                     norm2_squared(GridSpec::reduced_1d(0, 1, int(n)), r) - 1) < 1e-13);

  // Continuity as |A| -> 0.
  VectorField tiny = VectorField::Zero(3, n);
  tiny.row(0).setConstant(1e-14);
  SpinorArray c = r, d = r;
  potential_step(c, V, tiny, eps, dt);
  potential_step(d, V, VectorField::Zero(3, n), eps, dt);
  CHECK((c - d).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("run_reference errors") {
  ReferenceOptions o;
  o.grid = GridSpec::reduced_1d(-4, 4, 256);  // h = 1/32 > 2 pi / 512
  o.epsilon = 1.0 / 64;
  CHECK_THROWS_AS(run_reference(o, SpinorArray::Zero(4, 256)), Error);
  try {
    run_reference(o, SpinorArray::Zero(4, 256));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ResolutionInsufficient);
  }
  o.epsilon = 1.0 / 8;
  CHECK_THROWS_AS(run_reference(o, SpinorArray::Zero(4, 100)), Error);
  o.dt = 1.0;  // far beyond the wave CFL bound
  CHECK_THROWS_AS(run_reference(o, SpinorArray::Zero(4, 256)), Error);
}

TEST_CASE("free plane wave over 100 steps") {
  const double eps = 1.0 / 16;
  const GridSpec g = GridSpec::reduced_1d(-kPi, kPi, 128);
  ReferenceOptions o;
  o.grid = g;
  o.epsilon = eps;
  o.coupling = false;
  o.T = 0.5;
  o.dt = 0.005;
  o.substeps = 1;
  const SpinorArray w = plane_wave(g, 0.5, eps);
  const ReferenceTrajectory tr = run_reference(o, w);
  CHECK(tr.log.size() == 101);
  const SpinorArray expect = w * std::exp(cplx(0, -0.5 * dirac::lambda(Vec3(0.5, 0, 0)) / eps));
  CHECK((tr.states.back().psi - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("linear run against WKB transport") {
  const GridSpec g = GridSpec::reduced_1d(-4, 4, 1024);
  WKBSolution s;
  std::vector<double> err;
  for (double eps : {1.0 / 16, 1.0 / 32}) {
    ReferenceOptions o;
    o.grid = g;
    o.epsilon = eps;
    o.coupling = false;
    o.T = 0.25;
    const SpinorArray psi0 = packet_psi(g, eps, &s);
    const SpinorArray ref = run_reference(o, psi0).states.back().psi;
    const SpinorArray w = synthesize(s, eps, s.time_count() - 1);
    err.push_back(std::sqrt(norm2_squared(g, ref - w) / norm2_squared(g, ref)));
  }
  MESSAGE("relative errors " << err[0] << " " << err[1]);
  CHECK(err[0] < 0.1);
  // At least O(sqrt eps).
  CHECK(err[0] / err[1] > std::sqrt(2.0));
}

TEST_CASE("coupled run") {
  const double eps = 1.0 / 32;
  const GridSpec g = GridSpec::reduced_1d(-4, 4, 512);
  const SpinorArray psi0 = packet_psi(g, eps);
  ReferenceOptions o;
  o.grid = g;
  o.epsilon = eps;
  o.T = 0.25;
  o.store_times = {0.0, 0.125};
  const ReferenceTrajectory tr = run_reference(o, psi0);
  CHECK(tr.states.size() == 3);
  double drift = 0;
  for (const auto& e : tr.log) drift = std::max(drift, std::abs(e.charge / tr.log[0].charge - 1));
  CHECK(drift < 1e-8);
  CHECK(tr.log.back().field_energy_V > 0.0);
  CHECK(tr.states.back().potentials.V.maxCoeff() > 0.0);

  // Splitting self-convergence at fixed macro step.
  auto final_psi = [&](int substeps) {
    ReferenceOptions q = o;
    q.substeps = substeps;
    q.store_times.clear();
    return run_reference(q, psi0).states.back().psi;
  };
  const SpinorArray p1 = final_psi(1), p2 = final_psi(2), p8 = final_psi(8);
  const double e1 = std::sqrt(norm2_squared(g, p1 - p8)), e2 = std::sqrt(norm2_squared(g, p2 - p8));
  MESSAGE("self errors " << e1 << " " << e2);
  // Richardson-corrected ratio for a second-order method against p8.
  CHECK((e1 / e2) * (1 - 1.0 / 64) / (1 - 1.0 / 16) == doctest::Approx(4.0).epsilon(0.15));

  std::ostringstream csv;
  write_log_csv(csv, tr.log);
  CHECK(csv.str().rfind("time,charge,field_energy_V,field_energy_A\n", 0) == 0);
}
