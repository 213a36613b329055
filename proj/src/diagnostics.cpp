#include "mdwkb/diagnostics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <unsupported/Eigen/FFT>

#include "mdwkb/dirac.hpp"
#include "mdwkb/spectral.hpp"

namespace mdwkb {

double WignerField::trace_mass() const {
  double s = 0;
  for (const auto& w : values) s += w.trace().real();
  return s * dx * dxi;
}

WignerField wigner_transform(const GridSpec& g, const SpinorArray& psi, double eps, const WignerOptions& opt) {
  g.validate();
  if (g.active_axes() != 1) throw Error(ErrorKind::ModeMismatch, "wigner_transform needs a reduced-1d grid");
  if (!(eps > 0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
  if (static_cast<std::size_t>(psi.cols()) != g.size()) throw Error(ErrorKind::InvalidArgument, "field does not match the grid");
  const double h = g.spacing(0);
  if (h > max_spacing(eps) * (1 + 1e-12)) throw Error(ErrorKind::ResolutionInsufficient, "fewer than 8 points per 2 pi eps");
  int M = opt.lags;
  if (M == 0) {
    M = 8;
    while (M < std::sqrt(kPi * eps) / h) M *= 2;
  }
  if (M < 8 || M % 2) throw Error(ErrorKind::ResolutionInsufficient, "need an even number of at least 8 lags");
  const auto n = static_cast<long>(g.size());
  const int stride = opt.stride > 0 ? opt.stride : static_cast<int>(std::max<long>(1, n / 1024));

  WignerField w;
  w.epsilon = eps;
  w.dx = stride * h;
  w.dxi = kPi * eps / (M * h);
  for (int q = -M / 2; q < M / 2; ++q) w.xi.push_back(q * w.dxi);
  for (long j = 0; j < n; j += stride) {
    w.nodes.push_back(static_cast<std::size_t>(j));
    w.x.push_back(g.node(static_cast<std::size_t>(j))(0));
  }
  w.values.assign(w.nodes.size() * static_cast<std::size_t>(M), Matrix4c::Zero());

  const bool periodic = g.periodic[0];
  auto at = [&](long i) -> Spinor {
    if (periodic) return psi.col(((i % n) + n) % n);
    if (i < 0 || i >= n) return Spinor::Zero();
    return psi.col(i);
  };
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<std::vector<cplx>> lag(16, std::vector<cplx>(static_cast<std::size_t>(M)));
  std::vector<cplx> spec(static_cast<std::size_t>(M));
  const double scale = h / (kPi * eps);
  for (std::size_t ix = 0; ix < w.nodes.size(); ++ix) {
    const long j = static_cast<long>(w.nodes[ix]);
    for (int m = -M / 2; m < M / 2; ++m) {
      // Hann window, zero at m = -M/2 so the sum stays symmetric in m.
      const double c = std::cos(kPi * m / M);
      const Matrix4c prod = (c * c) * at(j + m) * at(j - m).adjoint();
      const auto slot = static_cast<std::size_t>((m + M) % M);
      for (int e = 0; e < 16; ++e) lag[static_cast<std::size_t>(e)][slot] = prod(e % 4, e / 4);
    }
    for (int e = 0; e < 16; ++e) {
      fft.fwd(spec, lag[static_cast<std::size_t>(e)]);
      for (int q = -M / 2; q < M / 2; ++q)
        w.values[ix * static_cast<std::size_t>(M) + static_cast<std::size_t>(q + M / 2)](e % 4, e / 4) =
            scale * spec[static_cast<std::size_t>((q + M) % M)];
    }
  }
  return w;
}

WignerConcentration wigner_concentration(const WignerField& w, const VectorField& grad_phi, double radius_bins) {
  WignerConcentration c;
  const double r = radius_bins * w.dxi;
  for (std::size_t ix = 0; ix < w.x.size(); ++ix) {
    const double k = grad_phi(0, static_cast<Eigen::Index>(w.nodes[ix]));
    for (std::size_t q = 0; q < w.xi.size(); ++q) {
      const double m = w.at(ix, q).trace().real() * w.dx * w.dxi;
      c.total += m;
      const double dp = std::abs(w.xi[q] - k), dm = std::abs(w.xi[q] + k);
      if (std::min(dp, dm) > r) continue;
      (dp <= dm ? c.plus : c.minus) += m;
    }
  }
  return c;
}

double wigner_cross_band(const WignerField& w) {
  Matrix4c cross = Matrix4c::Zero();
  double tr = 0;
  for (std::size_t ix = 0; ix < w.x.size(); ++ix)
    for (std::size_t q = 0; q < w.xi.size(); ++q) {
      const Vec3 xi(w.xi[q], 0, 0);
      const Matrix4c& m = w.at(ix, q);
      cross += dirac::projector(Band::Plus, xi) * m * dirac::projector(Band::Minus, xi);
      tr += m.trace().real();
    }
  return tr != 0 ? cross.norm() / std::abs(tr) : 0.0;
}

BandCharges band_content(const GridSpec& g, const SpinorArray& psi, double eps) {
  const Spectral sp(g);
  SpinorArray f = psi;
  sp.forward(f);
  const auto n = static_cast<double>(g.size());
  const double weight = integrate(g, RealField::Ones(psi.cols())) / n;
  BandCharges b;
  for (Eigen::Index i = 0; i < f.cols(); ++i) {
    const Vec3 xi = eps * sp.wavevector(static_cast<std::size_t>(i));
    b.plus += (dirac::projector(Band::Plus, xi) * f.col(i)).squaredNorm();
    b.minus += (dirac::projector(Band::Minus, xi) * f.col(i)).squaredNorm();
  }
  b.plus *= weight / n;
  b.minus *= weight / n;
  return b;
}

double ResidualSeries::max() const { return residual.empty() ? 0.0 : *std::max_element(residual.begin(), residual.end()); }

namespace {

// Fourth-order first derivative at sample k of a uniform series.
template <typename F>
F ddt(const std::vector<F>& f, std::size_t k, double dt) {
  const std::size_t n = f.size();
  if (k >= 2 && k + 2 < n) return (f[k - 2] - 8 * f[k - 1] + 8 * f[k + 1] - f[k + 2]) / (12 * dt);
  if (k == 0) return (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * dt);
  if (k == 1) return (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * dt);
  if (k == n - 1) return (25 * f[n - 1] - 48 * f[n - 2] + 36 * f[n - 3] - 16 * f[n - 4] + 3 * f[n - 5]) / (12 * dt);
  return (3 * f[n - 1] + 10 * f[n - 2] - 18 * f[n - 3] + 6 * f[n - 4] - f[n - 5]) / (12 * dt);
}

}  // namespace

ResidualSeries residual_meter(const WKBSolution& s, double eps, bool with_corrector) {
  if (!(eps > 0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
  if (with_corrector && !s.corrector) throw Error(ErrorKind::InvalidArgument, "solution has no corrector");
  const std::size_t K = s.time_count();
  if (K < 5) throw Error(ErrorKind::InvalidArgument, "residual meter needs at least 5 stored times");
  const GridSpec& g = s.grid;
  const Spectral sp(g);
  const double dt = s.dt();
  const auto n = static_cast<Eigen::Index>(g.size());
  const auto& dm = dirac::dirac_matrices();

  // Demodulated amplitudes per band.
  std::vector<SpinorArray> ap(K), am(K);
  for (std::size_t k = 0; k < K; ++k) {
    ap[k] = s.amplitudes[k].plus;
    am[k] = s.amplitudes[k].minus;
    if (with_corrector) {
      ap[k] += eps * (s.corrector->propagating[k].plus + s.corrector->nonpropagating[k].plus);
      am[k] += eps * (s.corrector->propagating[k].minus + s.corrector->nonpropagating[k].minus);
    }
  }

  ResidualSeries out;
  out.epsilon = eps;
  out.with_corrector = with_corrector;
  std::optional<PotentialStepper> waves;
  if (s.coupling) waves.emplace(g, dt, s.potential_order);
  PotentialState pot = PotentialState::zeros(g.size());
  const double se = std::sqrt(eps);
  for (std::size_t k = 0; k < K; ++k) {
    const SpinorArray psi = synthesize(s, eps, k, with_corrector);
    const RealField phit = ddt(s.phase.phi, k, dt);
    const SpinorArray dp = ddt(ap, k, dt), dmn = ddt(am, k, dt);
    // i eps d_t psi
    SpinorArray r(4, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const cplx e = std::exp(cplx(0, s.phase.phi[k](i) / eps));
      r.col(i) = se * ((kI * eps * dp.col(i) - phit(i) * ap[k].col(i)) * e +
                       (kI * eps * dmn.col(i) + phit(i) * am[k].col(i)) * std::conj(e));
    }
    // + i eps alpha.grad psi
    for (int a = 0; a < g.active_axes(); ++a) {
      SpinorArray d = psi;
      sp.forward(d);
      for (Eigen::Index i = 0; i < n; ++i) d.col(i) *= kI * sp.wavevector(static_cast<std::size_t>(i))(a);
      sp.inverse(d);
      r += kI * eps * (dm.alpha[static_cast<std::size_t>(a)] * d);
    }
    // - beta psi - (V - alpha.A) psi
    for (Eigen::Index i = 0; i < n; ++i) {
      const Matrix4c m = dm.beta + pot.V(i) * Matrix4c::Identity() - dirac::alpha_dot<double>(pot.A.col(i));
      r.col(i) -= m * psi.col(i);
    }
    out.times.push_back(s.phase.times[k]);
    out.residual.push_back(std::sqrt(norm2_squared(g, r)));
    if (waves && k + 1 < K) pot = waves->step(density(psi), dirac_current(psi));
  }
  return out;
}

OrderFit fit_order(const std::vector<double>& eps, const std::vector<double>& err) {
  if (eps.size() != err.size() || eps.size() < 2) throw Error(ErrorKind::InvalidArgument, "order fit needs matching series of >= 2 points");
  const auto n = static_cast<double>(eps.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0) || !(err[i] > 0) || !std::isfinite(err[i]))
      throw Error(ErrorKind::InvalidArgument, "order fit needs positive finite values");
    const double x = std::log(eps[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  OrderFit f;
  f.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.log_constant = (sy - f.order * sx) / n;
  double ss = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double d = std::log(err[i]) - f.order * std::log(eps[i]) - f.log_constant;
    ss += d * d;
  }
  f.residual = std::sqrt(ss / n);
  f.resolved = eps.size() >= 4 && f.residual <= 0.1;
  return f;
}

ConvergenceTable compare(const WKBSolution& wkb, const std::vector<double>& epsilons, const CompareOptions& opt) {
  if (epsilons.empty()) throw Error(ErrorKind::InvalidArgument, "no epsilons given");
  for (std::size_t i = 0; i < epsilons.size(); ++i)
    if (!(epsilons[i] > 0) || (i > 0 && !(epsilons[i] < epsilons[i - 1])))
      throw Error(ErrorKind::InvalidArgument, "epsilons must be positive and strictly decreasing");
  if (opt.with_corrector && !wkb.corrector) throw Error(ErrorKind::InvalidArgument, "solution has no corrector");
  const std::size_t last = wkb.time_count() - 1;

  ConvergenceTable t;
  t.linear = !wkb.coupling;
  t.has_corrector = opt.with_corrector;
  for (double eps : epsilons) {
    ReferenceOptions ro;
    ro.grid = wkb.grid;
    ro.epsilon = eps;
    ro.T = wkb.phase.times.back();
    ro.dt = wkb.dt();
    ro.substeps = opt.substeps;
    ro.coupling = wkb.coupling;
    ro.potential_order = wkb.potential_order;
    auto error_of = [&](bool corr) {
      const SpinorArray ref = run_reference(ro, synthesize(wkb, eps, 0, corr)).states.back().psi;
      return std::sqrt(norm2_squared(wkb.grid, ref - synthesize(wkb, eps, last, corr)) / norm2_squared(wkb.grid, ref));
    };
    ConvergenceRow row;
    row.epsilon = eps;
    const auto t0 = std::chrono::steady_clock::now();
    row.error = error_of(false);
    if (opt.with_corrector) row.error_corrected = error_of(true);
    row.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    t.rows.push_back(row);
  }
  if (epsilons.size() >= 2) {
    std::vector<double> e, a, b;
    for (const auto& r : t.rows) {
      e.push_back(r.epsilon);
      a.push_back(r.error);
      b.push_back(r.error_corrected);
    }
    t.fit = fit_order(e, a);
    if (opt.with_corrector) t.fit_corrected = fit_order(e, b);
  }
  return t;
}

void write_csv(std::ostream& out, const ConvergenceTable& t) {
  out.precision(10);
  out << "epsilon,error,error_corrected,runtime_s\n";
  for (const auto& r : t.rows) out << r.epsilon << ',' << r.error << ',' << r.error_corrected << ',' << r.runtime_seconds << '\n';
  auto fit = [&](const char* name, const OrderFit& f) {
    out << "# " << name << " order=" << f.order << " residual=" << f.residual << (f.resolved ? "" : " unresolved") << '\n';
  };
  if (t.rows.size() >= 2) {
    fit("fit", t.fit);
    if (t.has_corrector) fit("fit_corrected", t.fit_corrected);
  }
  if (t.linear) out << "# coupling off: linear WKB, the order reflects the linear expansion and discretization\n";
}

void write_csv(std::ostream& out, const ResidualSeries& s) {
  out.precision(12);
  out << "time,residual\n";
  for (std::size_t i = 0; i < s.times.size(); ++i) out << s.times[i] << ',' << s.residual[i] << '\n';
}

}  // namespace mdwkb
