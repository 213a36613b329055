// mdwkb: command-line driver for the WKB construction and its validation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mdwkb/dirac.hpp"
#include "mdwkb/experiments.hpp"
#include "mdwkb/field_io.hpp"
#include "mdwkb/scaling.hpp"

using namespace mdwkb;

namespace {

// Validation failure: an invariant or tolerance did not hold.
struct Breach {
  std::string what;
};

struct Globals {
  std::string config_path;
  std::string out;
  int threads = 1;
  int seed = 1;
};

RunConfig need_config(const Globals& g) {
  if (g.config_path.empty()) throw Error(ErrorKind::InvalidArgument, "--config is required");
  return load_config(g.config_path);
}

std::string out_dir(const Globals& g, const RunConfig& c) {
  const std::string d = g.out.empty() ? c.output_dir : g.out;
  std::filesystem::create_directories(d);
  return d;
}

std::string sci(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3e", v);
  return b;
}

std::string join(const std::string& dir, const std::string& name) { return (std::filesystem::path(dir) / name).string(); }

Manifest base_manifest(const std::string& cmd, const Globals& g, const RunConfig& c) {
  Manifest m;
  m.command = cmd;
  m.config = &c;
  m.grid = c.grid;
  m.time = c.T;
  m.epsilons = c.epsilons;
  m.seed = g.seed;
  m.threads = g.threads;
  return m;
}

void finish(const std::string& dir, const Manifest& m) { write_text(join(dir, "manifest.json"), manifest_json(m)); }

double pick_eps(const RunConfig& c, const std::string& given) {
  if (!given.empty()) return parse_number(given);
  return c.epsilons.empty() ? 1.0 / 64 : c.epsilons.front();
}

int cmd_symbol_check(const Globals& g, std::size_t samples) {
  const auto r = dirac::verify_identities(samples, static_cast<std::uint64_t>(g.seed));
  std::printf("samples=%zu seed=%d\n", r.samples, g.seed);
  const std::pair<const char*, double> rows[] = {
      {"anticommutation", r.anticommutation}, {"hermiticity", r.hermiticity}, {"idempotence", r.idempotence},
      {"orthogonality", r.orthogonality},     {"completeness", r.completeness}, {"decomposition", r.decomposition},
      {"parity", r.parity},                   {"m1", r.m1},                     {"m2", r.m2},
      {"m3", r.m3},                           {"partial_inverse", r.partial_inverse},
      {"group_velocity_fd", r.group_velocity_fd}, {"reflection_as_printed", r.reflection}};
  for (const auto& [name, v] : rows) std::printf("%-22s %.3e\n", name, v);
  std::printf("max_exact=%.3e\n", r.max_exact());
  if (!(r.max_exact() < 1e-12)) throw Breach{"identity deviation " + sci(r.max_exact()) + " >= 1e-12"};
  return 0;
}

int cmd_eikonal(const Globals& g, int frames) {
  const RunConfig c = need_config(g);
  const std::string dir = out_dir(g, c);
  const InitialPhase ph = make_phase(c.phase_init);
  const double tc = caustic_time(ph, c.grid);
  std::vector<double> times;
  for (int i = 0; i <= frames; ++i) times.push_back(c.T * i / frames);
  const PhaseField pf = phase_on_grid(solve_rays(ph, c.grid, c.T, std::max(1, frames)), c.grid, times);
  const Residual exact = eikonal_residual(pf), fd = eikonal_residual_fd(pf);
  std::printf("caustic_time=%.6g T=%.6g\neikonal_residual=%.3e\neikonal_residual_fd=%.3e\n", tc, c.T, exact.max, fd.max);
  save_field(join(dir, "phi_T.mdwkb"), to_raw(pf.phi.back()));
  Manifest m = base_manifest("eikonal", g, c);
  m.files = {"phi_T.mdwkb"};
  m.metrics = {{"caustic_time", tc}, {"eikonal_residual", exact.max}, {"eikonal_residual_fd", fd.max}};
  finish(dir, m);
  if (!(exact.max < 1e-10)) throw Breach{"eikonal residual " + sci(exact.max)};
  return 0;
}

int cmd_wkb(const Globals& g) {
  const RunConfig c = need_config(g);
  const std::string dir = out_dir(g, c);
  WKBSolution s = run_wkb(wkb_options(c));
  s.config_hash = c.hash();
  double drift = 0, defect = 0;
  for (const auto& r : s.log) {
    drift = std::max(drift, r.charge_drift);
    defect = std::max(defect, r.polarization_defect);
  }
  std::printf("steps=%zu dt=%.6g\ncharge_drift=%.3e\npolarization_defect=%.3e\n", s.time_count() - 1, s.dt(), drift, defect);
  Manifest m = base_manifest("wkb", g, c);
  m.files = save_wkb(s, dir);
  m.metrics = {{"charge_drift", drift}, {"polarization_defect", defect}};
  finish(dir, m);
  if (drift > c.charge_tolerance) throw Breach{"charge drift " + sci(drift)};
  if (defect > c.defect_tolerance) throw Breach{"polarization defect " + sci(defect)};
  return 0;
}

int cmd_reference(const Globals& g, const std::string& eps_text) {
  const RunConfig c = need_config(g);
  const std::string dir = out_dir(g, c);
  const double eps = pick_eps(c, eps_text);
  WkbOptions wo = wkb_options(c);
  wo.corrector = false;
  const WKBSolution s = run_wkb(wo);
  ReferenceOptions ro;
  ro.grid = c.grid;
  ro.epsilon = eps;
  ro.T = c.T;
  ro.dt = s.dt();
  ro.substeps = c.substeps;
  ro.coupling = c.coupling;
  ro.potential_order = c.potential_order;
  const ReferenceTrajectory tr = run_reference(ro, synthesize(s, eps, 0));
  double drift = 0;
  for (const auto& e : tr.log) drift = std::max(drift, std::abs(e.charge / tr.log.front().charge - 1));
  std::printf("eps=%.6g steps=%zu\ncharge_drift=%.3e\n", eps, tr.log.size() - 1, drift);
  const MDState& f = tr.states.back();
  save_field(join(dir, "psi_T.mdwkb"), to_raw(f.psi));
  save_field(join(dir, "V_T.mdwkb"), to_raw(f.potentials.V));
  save_field(join(dir, "A_T.mdwkb"), to_raw(f.potentials.A));
  std::ostringstream csv;
  write_log_csv(csv, tr.log);
  write_text(join(dir, "reference_log.csv"), csv.str());
  Manifest m = base_manifest("reference", g, c);
  m.epsilons = {eps};
  m.files = {"psi_T.mdwkb", "V_T.mdwkb", "A_T.mdwkb", "reference_log.csv"};
  m.metrics = {{"charge_drift", drift}};
  finish(dir, m);
  if (drift > c.charge_tolerance) throw Breach{"reference charge drift " + sci(drift)};
  return 0;
}

int cmd_compare(const Globals& g, const std::string& eps_text) {
  const RunConfig c = need_config(g);
  const std::string dir = out_dir(g, c);
  const std::vector<double> eps = eps_text.empty() ? c.epsilons : parse_number_list(eps_text);
  if (eps.empty()) throw Error(ErrorKind::InvalidArgument, "no epsilons (use --epsilons or run.epsilons)");
  const WKBSolution s = run_wkb(wkb_options(c));
  CompareOptions co;
  co.substeps = c.substeps;
  co.with_corrector = c.corrector;
  const ConvergenceTable t = compare(s, eps, co);
  std::ostringstream csv;
  write_csv(csv, t);
  write_text(join(dir, "convergence.csv"), csv.str());
  std::cout << csv.str();
  Manifest m = base_manifest("compare", g, c);
  m.epsilons = eps;
  m.files = {"convergence.csv"};
  if (eps.size() >= 2) {
    m.metrics["order"] = t.fit.order;
    m.metrics["fit_residual"] = t.fit.residual;
    if (t.has_corrector) m.metrics["order_corrected"] = t.fit_corrected.order;
  }
  finish(dir, m);
  return 0;
}

int cmd_wigner(const Globals& g, const std::string& eps_text, int lags, bool reference) {
  const RunConfig c = need_config(g);
  const std::string dir = out_dir(g, c);
  const double eps = pick_eps(c, eps_text);
  WkbOptions wo = wkb_options(c);
  wo.corrector = false;
  const WKBSolution s = run_wkb(wo);
  const std::size_t k = s.time_count() - 1;
  SpinorArray psi = synthesize(s, eps, k);
  if (reference) {
    ReferenceOptions ro;
    ro.grid = c.grid;
    ro.epsilon = eps;
    ro.T = c.T;
    ro.dt = s.dt();
    ro.substeps = c.substeps;
    ro.coupling = c.coupling;
    ro.potential_order = c.potential_order;
    psi = run_reference(ro, synthesize(s, eps, 0)).states.back().psi;
  }
  WignerOptions opt;
  opt.lags = lags;
  const WignerField w = wigner_transform(c.grid, psi, eps, opt);
  const WignerConcentration con = wigner_concentration(w, s.phase.grad_phi[k]);
  const double up = norm2_squared(c.grid, s.amplitudes[k].plus), um = norm2_squared(c.grid, s.amplitudes[k].minus);
  std::printf("eps=%.6g lags=%zu dxi=%.4g\nconcentrated_fraction=%.4f\nweight_plus=%.6g predicted=%.6g\nweight_minus=%.6g predicted=%.6g\n"
              "cross_band=%.3e\n",
              eps, w.xi.size(), w.dxi, con.fraction(), con.plus / eps, up, con.minus / eps, um, wigner_cross_band(w));
  RawField tr;
  tr.dims = {w.x.size(), w.xi.size()};
  RealField vals(static_cast<Eigen::Index>(w.values.size()));
  for (std::size_t i = 0; i < w.values.size(); ++i) vals(static_cast<Eigen::Index>(i)) = w.values[i].trace().real();
  tr.payload = to_raw(vals).payload;
  save_field(join(dir, "wigner_trace.mdwkb"), tr);
  std::ostringstream csv;
  csv.precision(10);
  csv << "x,xi,trace\n";
  for (std::size_t ix = 0; ix < w.x.size(); ++ix)
    for (std::size_t q = 0; q < w.xi.size(); ++q) csv << w.x[ix] << ',' << w.xi[q] << ',' << w.at(ix, q).trace().real() << '\n';
  write_text(join(dir, "wigner_trace.csv"), csv.str());
  Manifest m = base_manifest("wigner", g, c);
  m.epsilons = {eps};
  m.files = {"wigner_trace.mdwkb", "wigner_trace.csv"};
  m.metrics = {{"concentrated_fraction", con.fraction()}, {"weight_plus", con.plus / eps}, {"weight_minus", con.minus / eps}};
  finish(dir, m);
  return 0;
}

int cmd_residual(const Globals& g, const std::string& eps_text) {
  const RunConfig c = need_config(g);
  const std::string dir = out_dir(g, c);
  const std::vector<double> eps = eps_text.empty() ? c.epsilons : parse_number_list(eps_text);
  if (eps.empty()) throw Error(ErrorKind::InvalidArgument, "no epsilons (use --epsilons or run.epsilons)");
  const WKBSolution s = run_wkb(wkb_options(c));
  Manifest m = base_manifest("residual", g, c);
  m.epsilons = eps;
  std::vector<double> r0, r1;
  std::printf("epsilon,residual_u0,residual_corrected\n");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const ResidualSeries a = residual_meter(s, eps[i]);
    r0.push_back(a.max());
    std::ostringstream csv;
    write_csv(csv, a);
    const std::string name = "residual_" + std::to_string(i) + ".csv";
    write_text(join(dir, name), csv.str());
    m.files.push_back(name);
    if (s.corrector) {
      const ResidualSeries b = residual_meter(s, eps[i], true);
      r1.push_back(b.max());
      std::ostringstream cb;
      write_csv(cb, b);
      const std::string nb = "residual_corrected_" + std::to_string(i) + ".csv";
      write_text(join(dir, nb), cb.str());
      m.files.push_back(nb);
    }
    if (s.corrector)
      std::printf("%.6g,%.6e,%.6e\n", eps[i], r0.back(), r1.back());
    else
      std::printf("%.6g,%.6e,\n", eps[i], r0.back());
  }
  if (eps.size() >= 2) {
    const OrderFit f = fit_order(eps, r0);
    std::printf("# order=%.4f residual=%.3g%s\n", f.order, f.residual, f.resolved ? "" : " unresolved");
    m.metrics["order"] = f.order;
    if (s.corrector) {
      const OrderFit f1 = fit_order(eps, r1);
      std::printf("# order_corrected=%.4f residual=%.3g\n", f1.order, f1.residual);
      m.metrics["order_corrected"] = f1.order;
    }
  }
  finish(dir, m);
  return 0;
}

int cmd_scale(const std::string& preset, const std::optional<double> over[5]) {
  if (preset != "electron") throw Error(ErrorKind::InvalidArgument, "unknown preset '" + preset + "'");
  PhysicalConstants k = PhysicalConstants::electron();
  double* fields[5] = {&k.hbar, &k.c, &k.eps0, &k.m, &k.e};
  for (int i = 0; i < 5; ++i)
    if (over[i]) *fields[i] = *over[i];
  const PhysicalScaling s = physical_to_dimensionless(k);
  std::printf("delta=%.6g\ndelta_quoted=%.6g\nybar_m=%.6e\nsbar_s=%.6e\nlambda_A=%.6e\nkappa_V=%.6e\n", s.delta,
              kQuotedElectronDelta, s.ybar, s.sbar, s.lambda_A, s.kappa_V);
  return 0;
}

void error_line(const char* kind, const std::string& what) {
  std::string w = what;
  for (auto& ch : w)
    if (ch == '"' || ch == '\n') ch = '\'';
  std::fprintf(stderr, "error kind=%s message=\"%s\"\n", kind, w.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WKB approximation of the semiclassical Maxwell-Dirac system and its validation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Run configuration file");
  app.add_option("--out", g.out, "Output directory (default: output.dir of the config)");
  app.add_option("--threads", g.threads, "Data-parallel width")->check(CLI::Range(1, 1024));
  app.add_option("--seed", g.seed, "Random seed");

  std::size_t samples = 1000;
  int frames = 4, lags = 0;
  std::string eps_text, epsilons_text, preset = "electron";
  bool from_reference = false;
  std::optional<double> over[5];

  auto* sym = app.add_subcommand("symbol-check", "Dirac symbol identity suite");
  sym->add_option("--samples", samples, "Random momenta in [-5,5]^3")->check(CLI::PositiveNumber);
  auto* eik = app.add_subcommand("eikonal", "Phase solve and eikonal residual report");
  eik->add_option("--frames", frames, "Stored times in [0, T]")->check(CLI::Range(2, 100000));
  auto* wkb = app.add_subcommand("wkb", "Amplitude transport with self-consistent potentials");
  auto* ref = app.add_subcommand("reference", "Direct Maxwell-Dirac solve from the WKB initial data");
  ref->add_option("--eps", eps_text, "Semiclassical parameter (default: first of run.epsilons)");
  auto* cmp = app.add_subcommand("compare", "WKB vs reference convergence study");
  cmp->add_option("--epsilons", epsilons_text, "Comma separated, e.g. 1/16,1/32");
  auto* wig = app.add_subcommand("wigner", "Wigner transform and band concentration at T");
  wig->add_option("--eps", eps_text, "Semiclassical parameter");
  wig->add_option("--lags", lags, "Lag count (0: automatic)");
  wig->add_flag("--reference", from_reference, "Transform the reference solution instead of the WKB field");
  auto* res = app.add_subcommand("residual", "PDE residual of the synthesized field");
  res->add_option("--epsilons", epsilons_text, "Comma separated");
  auto* sc = app.add_subcommand("scale", "Physical constants to the dimensionless parameter");
  sc->add_option("--preset", preset, "Constant set (electron)");
  const char* names[5] = {"--hbar", "--c", "--eps0", "--m", "--e"};
  for (int i = 0; i < 5; ++i) sc->add_option(names[i], over[i], "Override (SI)");
  for (auto* s : {sym, eik, wkb, ref, cmp, wig, res, sc}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_line("Usage", e.what());
    return 2;
  }

  set_default_threads(g.threads);
  try {
    if (*sym) return cmd_symbol_check(g, samples);
    if (*eik) return cmd_eikonal(g, frames);
    if (*wkb) return cmd_wkb(g);
    if (*ref) return cmd_reference(g, eps_text);
    if (*cmp) return cmd_compare(g, epsilons_text);
    if (*wig) return cmd_wigner(g, eps_text, lags, from_reference);
    if (*res) return cmd_residual(g, epsilons_text);
    if (*sc) return cmd_scale(preset, over);
  } catch (const Breach& b) {
    error_line("ValidationFailure", b.what);
    return 1;
  } catch (const Error& e) {
    const ErrorKind k = e.kind();
    error_line(std::string(to_string(k)).c_str(), e.what());
    return k == ErrorKind::InvalidArgument || k == ErrorKind::InvalidConfig || k == ErrorKind::Io ? 2 : 1;
  } catch (const std::exception& e) {
    error_line("Internal", e.what());
    return 1;
  }
  return 2;
}
