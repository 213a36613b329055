// Acceptance run: one PASS/FAIL line per criterion, details and timing inline.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "mdwkb/dirac.hpp"
#include "mdwkb/experiments.hpp"

using namespace mdwkb;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;
std::set<int> selected;  // empty: all

void criterion(int id, const char* name, const std::function<Verdict()>& body) {
  if (!selected.empty() && !selected.count(id)) return;
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  failures += !v.pass;
  std::printf("criterion %2d %s %s: %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", name, v.detail.c_str(), s);
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char b[64];
  std::snprintf(b, sizeof b, f, a);
  return b;
}

const RunConfig& gauss1d() {
  static const RunConfig c = parse_config(gauss1d_config_text());
  return c;
}

// gauss1d with the corrector, shared by the transport, comparison and residual criteria.
const WKBSolution& gauss1d_wkb() {
  static const WKBSolution s = run_wkb(wkb_options(gauss1d()));
  return s;
}

Verdict algebra() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = dirac::verify_identities(1000, 20240611);
  const double t = seconds_since(t0);
  const double worst = std::max(r.max_exact(), r.reflection);
  std::ostringstream d;
  d << "max exact identity " << fmt("%.2e", r.max_exact()) << ", reflection Pi(-xi)=Pi_opp(xi) "
    << fmt("%.2e", r.reflection) << " (parity form " << fmt("%.2e", r.parity) << ")";
  return {worst < 1e-12 && t < 1.0, d.str()};
}

Verdict eikonal() {
  const auto t0 = std::chrono::steady_clock::now();
  // Plane phase on both branches, exact along straight rays.
  const Vec3 k(0.7, -0.2, 0.4);
  const GridSpec gp = GridSpec::full_3d(-1, 1, 16, true);
  double plane = 0;
  for (PhaseBranch b : {PhaseBranch::Electron, PhaseBranch::Positron}) {
    const PhaseField pf = phase_on_grid(solve_rays(InitialPhase::plane(k), gp, 0.5, 4, b), gp, {0.0, 0.25, 0.5});
    for (std::size_t n = 0; n < pf.times.size(); ++n)
      for (std::size_t i = 0; i < gp.size(); ++i)
        plane = std::max(plane, std::abs(pf.phi[n](static_cast<Eigen::Index>(i)) -
                                         (k.dot(gp.node(i)) + time_sign(b) * pf.times[n] * dirac::lambda(k))));
  }
  // Quadratic phase in 3d, finite-difference residual at h = 1/64 and 1/128.
  auto quad = [](int cells) {
    const GridSpec g = GridSpec::full_3d(-0.25, 0.25, cells + 1, false);
    const double h = g.spacing(0);
    const PhaseField pf = phase_on_grid(solve_rays(InitialPhase::quadratic(1.0), g, 0.3 + h, 1), g, {0.3 - h, 0.3, 0.3 + h});
    return eikonal_residual_fd(pf).max;
  };
  const double r64 = quad(32), r128 = quad(64);
  // Lax-Friedrichs grid solver against rays; first order, so the gap must shrink on refinement.
  auto gap = [](int cells) {
    const GridSpec g = GridSpec::reduced_1d(-1, 1, cells + 1, false);
    const PhaseField hj = solve_hj_grid(InitialPhase::quadratic(1.0), g, 0.3, 0.9);
    const PhaseField ray = phase_on_grid(solve_rays(InitialPhase::quadratic(1.0), g, 0.3, 1), g, {0.3});
    return (hj.phi[1] - ray.phi[0]).abs().maxCoeff();
  };
  const double g64 = gap(128), g128 = gap(256);
  const GridSpec g3 = GridSpec::full_3d(-0.5, 0.5, 33, false);
  const PhaseField hj3 = solve_hj_grid(InitialPhase::quadratic(1.0), g3, 0.3, 0.9);
  const PhaseField ray3 = phase_on_grid(solve_rays(InitialPhase::quadratic(1.0), g3, 0.3, 1), g3, {0.3});
  const double g3d = (hj3.phi[1] - ray3.phi[0]).abs().maxCoeff();
  const double t = seconds_since(t0);
  std::ostringstream d;
  d << "plane " << fmt("%.1e", plane) << ", quadratic residual " << fmt("%.2e", r64) << " (h=1/64) -> "
    << fmt("%.2e", r128) << " (x" << fmt("%.2f", r64 / r128) << "), hj-vs-rays 1d " << fmt("%.1e", g64) << " -> "
    << fmt("%.1e", g128) << ", 3d h=1/32 " << fmt("%.1e", g3d);
  const bool ok = plane < 1e-10 && r64 < 1e-3 && r64 / r128 >= 3 && g64 < 5e-3 && g128 < g64 && g3d < 1e-2 && t < 10;
  return {ok, d.str()};
}

Verdict potentials() {
  const auto t0 = std::chrono::steady_clock::now();
  const GridSpec g = GridSpec::full_3d(-1.05, 1.05, 64, false);
  const double h = g.spacing(0), T = 0.5;
  const int steps = static_cast<int>(std::ceil(T / (0.25 * h)));
  const double dt = T / steps;
  SourceHistory s;
  s.grid = g;
  s.dt = dt;
  RealField blob(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r2 = g.node(i).squaredNorm() / 0.25;
    blob(static_cast<Eigen::Index>(i)) = r2 < 1 ? std::pow(1 - r2, 4) : 0.0;
  }
  for (int n = 0; n <= steps; ++n) s.push(blob * std::cos(3 * n * dt));
  const RealField fd = wave_fdtd(s, steps, dt / h, 4, steps).values.back();
  const RealField q = retarded_convolve(s, T, g, ShellQuadrature{8, 0});
  const double rel = std::sqrt((fd - q).square().sum() / q.square().sum());

  // Unit ball indicator (cell volume fractions), constant in time: value 1/2 at the centre.
  const GridSpec gb = GridSpec::full_3d(-1.25, 1.25, 64, false);
  const double hb = gb.spacing(0);
  RealField ball(static_cast<Eigen::Index>(gb.size()));
  for (std::size_t i = 0; i < gb.size(); ++i) {
    const Vec3 x = gb.node(i);
    if (std::abs(x.norm() - 1) > hb) {
      ball(static_cast<Eigen::Index>(i)) = x.norm() <= 1 ? 1 : 0;
      continue;
    }
    const int m = 8;
    int c = 0;
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q)
        for (int r = 0; r < m; ++r)
          c += (x + hb * Vec3((p + 0.5) / m - 0.5, (q + 0.5) / m - 0.5, (r + 0.5) / m - 0.5)).norm() <= 1;
    ball(static_cast<Eigen::Index>(i)) = double(c) / (m * m * m);
  }
  SourceHistory sb;
  sb.grid = gb;
  sb.dt = 1.5;
  sb.push(ball);
  sb.push(ball);
  const double centre = retarded_convolve_at(sb, 1.5, Vec3::Zero());
  const double t = seconds_since(t0);
  std::ostringstream d;
  d << "quadrature vs fdtd relative L2 " << fmt("%.2e", rel) << " at 64^3, unit ball " << fmt("%.6f", centre);
  return {rel < 1e-3 && std::abs(centre - 0.5) < 1e-3 && t < 60, d.str()};
}

Verdict structure() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2, 2);
  std::normal_distribution<double> nd;
  const int n = 1000;
  AmplitudePair w = AmplitudePair::zeros(n);
  for (int i = 0; i < n; ++i) {
    const Vec3 xi(u(rng), u(rng), u(rng));
    Spinor a, b;
    for (int c = 0; c < 4; ++c) {
      a(c) = cplx(nd(rng), nd(rng));
      b(c) = cplx(nd(rng), nd(rng));
    }
    w.plus.col(i) = dirac::projector(Band::Plus, xi) * a;
    w.minus.col(i) = dirac::projector(Band::Minus, Vec3(-xi)) * b;
  }
  const ThetaModes tm = theta_modes(w, 16);
  double dens = 0, odd = 0;
  for (std::size_t m = 1; m < tm.density.size(); ++m) dens = std::max(dens, tm.density[m]);
  for (std::size_t m = 1; m < tm.current.size(); ++m)
    if (m != 2) odd = std::max(odd, tm.current[m]);
  std::ostringstream d;
  d << "density modes m!=0 " << fmt("%.2e", dens) << " (m=2: " << fmt("%.2e", tm.density[2]) << "), current |m|!=0,2 "
    << fmt("%.2e", odd) << ", current m=2 " << fmt("%.2e", tm.current[2]);
  return {dens < 1e-12 && odd < 1e-12 && tm.current[2] > 0, d.str()};
}

Verdict conservation() {
  const auto t0 = std::chrono::steady_clock::now();
  const WKBSolution& s = gauss1d_wkb();
  const double t = seconds_since(t0);
  double drift = 0, defect = 0;
  for (const auto& r : s.log) {
    drift = std::max(drift, r.charge_drift);
    defect = std::max(defect, r.polarization_defect);
  }
  std::ostringstream d;
  d << "gauss1d coupled, T=" << s.phase.times.back() << ": charge drift " << fmt("%.2e", drift) << ", polarization defect "
    << fmt("%.2e", defect);
  return {drift < 1e-6 && defect < 1e-8 && t < 60, d.str()};
}

Verdict reference() {
  // Free plane wave, exact multiplier phase.
  const double eps = 1.0 / 16;
  const GridSpec gp = GridSpec::reduced_1d(-kPi, kPi, 128);
  Spinor v;
  v << 1.0, cplx(0.2, 0.1), 0.3, cplx(0, -0.4);
  const Vec3 xi(0.5, 0, 0);
  const Spinor p = dirac::projector(Band::Plus, xi) * v;
  SpinorArray w(4, 128);
  for (std::size_t i = 0; i < gp.size(); ++i) w.col(static_cast<Eigen::Index>(i)) = p * std::exp(cplx(0, xi(0) * gp.node(i)(0) / eps));
  ReferenceOptions fo;
  fo.grid = gp;
  fo.epsilon = eps;
  fo.coupling = false;
  fo.T = 0.5;
  fo.dt = 0.005;
  fo.substeps = 1;
  const SpinorArray expect = w * std::exp(cplx(0, -fo.T * dirac::lambda(xi) / eps));
  const double plane = (run_reference(fo, w).states.back().psi - expect).cwiseAbs().maxCoeff();

  // Coupled gauss1d packet at eps = 1/32: per-step charge and splitting order.
  const RunConfig& c = gauss1d();
  const GridSpec g = GridSpec::reduced_1d(-4, 4, 1024);
  WkbOptions wo = wkb_options(c);
  wo.grid = g;
  wo.chi0 = make_amplitudes([&] {
    RunConfig cc = c;
    cc.grid = g;
    return cc;
  }()).plus;
  wo.corrector = false;
  wo.T = 0.25;
  const SpinorArray psi0 = synthesize(run_wkb(wo), 1.0 / 32, 0);
  ReferenceOptions o;
  o.grid = g;
  o.epsilon = 1.0 / 32;
  o.T = 0.25;
  auto run = [&](int substeps) {
    ReferenceOptions q = o;
    q.substeps = substeps;
    return run_reference(q, psi0);
  };
  const ReferenceTrajectory base = run(1);
  double step = 0;
  for (std::size_t n = 1; n < base.log.size(); ++n)
    step = std::max(step, std::abs(base.log[n].charge / base.log[n - 1].charge - 1));
  const SpinorArray fine = run(32).states.back().psi;
  std::vector<double> dts, errs;
  for (int m : {1, 2, 4}) {
    const SpinorArray pm = m == 1 ? base.states.back().psi : run(m).states.back().psi;
    // Error against the 32-substep run, with its own O(dt^2) share restored.
    const double r = double(m) / 32;
    dts.push_back(1.0 / m);
    errs.push_back(std::sqrt(norm2_squared(g, pm - fine)) / (1 - r * r));
  }
  const OrderFit f = fit_order(dts, errs);
  std::ostringstream d;
  d << "plane wave " << fmt("%.1e", plane) << " after 100 steps, per-step charge " << fmt("%.1e", step)
    << ", Strang order " << fmt("%.3f", f.order);
  return {plane < 1e-10 && step < 1e-12 && std::abs(f.order - 2) <= 0.2, d.str()};
}

Verdict theorem() {
  const auto t0 = std::chrono::steady_clock::now();
  CompareOptions co;
  co.substeps = gauss1d().substeps;
  co.with_corrector = true;
  const ConvergenceTable t = compare(gauss1d_wkb(), gauss1d().epsilons, co);
  const double sec = seconds_since(t0);
  std::ostringstream d;
  d << "errors";
  for (const auto& r : t.rows) d << ' ' << fmt("%.3e", r.error);
  d << "; order " << fmt("%.3f", t.fit.order) << " (fit residual " << fmt("%.1e", t.fit.residual) << "), with corrector "
    << fmt("%.3f", t.fit_corrected.order) << " (gain " << fmt("%.2f", t.fit_corrected.order - t.fit.order) << ")";
  return {t.fit.order >= 0.4 && t.fit.residual < 0.1 && t.fit_corrected.order - t.fit.order >= 0.3 && sec < 900, d.str()};
}

Verdict residual() {
  std::vector<double> r0, r1;
  for (double eps : gauss1d().epsilons) {
    r0.push_back(residual_meter(gauss1d_wkb(), eps).max());
    r1.push_back(residual_meter(gauss1d_wkb(), eps, true).max());
  }
  const OrderFit f = fit_order(gauss1d().epsilons, r0), f1 = fit_order(gauss1d().epsilons, r1);
  std::ostringstream d;
  d << "residuals";
  for (double r : r0) d << ' ' << fmt("%.2e", r);
  d << "; order " << fmt("%.3f", f.order) << " (corrected synthesis " << fmt("%.3f", f1.order) << ")";
  return {std::abs(f.order - 1.5) <= 0.25, d.str()};
}

Verdict positrons() {
  // Electron-only data on the gauss1d setup; the reference produces the minus band.
  WkbOptions wo = wkb_options(gauss1d());
  wo.corrector = false;
  const WKBSolution s = run_wkb(wo);
  const std::vector<double> eps{1.0 / 32, 1.0 / 64, 1.0 / 128};
  std::vector<double> minus, fraction;
  for (double e : eps) {
    ReferenceOptions o;
    o.grid = s.grid;
    o.epsilon = e;
    o.T = s.phase.times.back();
    o.dt = s.dt();
    o.substeps = gauss1d().substeps;
    const SpinorArray psi = run_reference(o, synthesize(s, e, 0)).states.back().psi;
    const BandCharges b = band_content(s.grid, psi, e);
    minus.push_back(b.minus);
    fraction.push_back(b.minus / (b.plus + b.minus));
  }
  const OrderFit f = fit_order(eps, minus), ff = fit_order(eps, fraction);
  std::ostringstream d;
  d << "minus-band charge";
  for (double m : minus) d << ' ' << fmt("%.2e", m);
  d << ", order " << fmt("%.3f", f.order) << " (as a fraction of the charge: order " << fmt("%.3f", ff.order) << ")";
  return {std::abs(f.order - 3) <= 0.5, d.str()};
}

Verdict wigner() {
  RunConfig c = gauss1d();
  c.profiles.push_back(NamedForm::parse("gaussian(0.3, 0.4, minus)"));
  WkbOptions wo = wkb_options(c);
  wo.corrector = false;
  const WKBSolution s = run_wkb(wo);
  const double eps = 1.0 / 64;
  const std::size_t k = s.time_count() - 1;
  const WignerField w = wigner_transform(s.grid, synthesize(s, eps, k), eps);
  const WignerConcentration con = wigner_concentration(w, s.phase.grad_phi[k]);
  const double up = norm2_squared(s.grid, s.amplitudes[k].plus), um = norm2_squared(s.grid, s.amplitudes[k].minus);
  const double dp = std::abs(con.plus / eps / up - 1), dm = std::abs(con.minus / eps / um - 1);
  std::ostringstream d;
  d << "mass within 3 dxi " << fmt("%.4f", con.fraction()) << ", plus weight " << fmt("%.4f", con.plus / eps) << " vs "
    << fmt("%.4f", up) << " (" << fmt("%.1f", 100 * dp) << "%), minus " << fmt("%.4f", con.minus / eps) << " vs "
    << fmt("%.4f", um) << " (" << fmt("%.1f", 100 * dm) << "%)";
  return {con.fraction() >= 0.9 && dp <= 0.05 && dm <= 0.05, d.str()};
}

Verdict oscillatory() {
  const OscillatoryStudy st = oscillatory_response_study();
  std::ostringstream d;
  for (const auto& r : st.runs) {
    const cplx c = r.coefficient.back();
    const double e = st.epsilons.back();
    d << r.points_per_wavelength << " pts/wavelength: order " << fmt("%.3f", r.fit.order) << ", c/eps^2 "
      << fmt("%.4f", c.real() / (e * e)) << "; ";
  }
  d << "spread " << fmt("%.3f", st.order_spread) << ", two-scale prediction eps^2 * " << st.predicted;
  return {st.reproducible, d.str()};
}

}  // namespace

// Optional arguments restrict the run to the listed criterion numbers.
int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  criterion(1, "algebra", algebra);
  criterion(2, "eikonal", eikonal);
  criterion(3, "potentials", potentials);
  criterion(4, "density/current structure", structure);
  criterion(5, "transport conservation", conservation);
  criterion(6, "reference solver", reference);
  criterion(7, "WKB convergence", theorem);
  criterion(8, "residual meter", residual);
  criterion(9, "positron generation", positrons);
  criterion(10, "Wigner concentration", wigner);
  criterion(11, "oscillatory response", oscillatory);
  std::printf("%d of %zu criteria failed\n", failures, selected.empty() ? std::size_t{11} : selected.size());
  return failures == 0 ? 0 : 1;
}
