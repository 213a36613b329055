#include "mdwkb/experiments.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mdwkb/field_io.hpp"

namespace mdwkb {

const std::string& gauss1d_config_text() {
  static const std::string text =
      "; Electron Gaussian packet on a focusing quadratic phase.\n"
      "[grid]\n"
      "mode = reduced_1d\n"
      "lo = -4\n"
      "hi = 4\n"
      "n = 2048\n"
      "periodic = on\n"
      "\n"
      "[phase]\n"
      "initial = quadratic(0.5, 0.5)\n"
      "\n"
      "[amplitude]\n"
      "profiles = gaussian(0, 0.4, plus, 2)\n"
      "\n"
      "[run]\n"
      "T = 0.5\n"
      "epsilons = 1/16, 1/32, 1/64, 1/128\n"
      "coupling = on\n"
      "corrector = on\n"
      "substeps = 8\n"
      "\n"
      "[backend]\n"
      "potentials = leapfrog2\n"
      "\n"
      "[output]\n"
      "dir = out/gauss1d\n";
  return text;
}

OscillatoryStudy oscillatory_response_study(const OscillatoryStudyOptions& o) {
  OscillatoryStudy st;
  st.epsilons = o.epsilons;
  const double lambda = std::sqrt(1 + o.k * o.k);
  for (int ppw : o.points_per_wavelength) {
    OscillatoryRun run;
    run.points_per_wavelength = ppw;
    std::vector<double> mag;
    for (double eps : o.epsilons) {
      // The forcing e^{2ikx/eps} has wavelength pi eps / k.
      const double h = kPi * eps / (o.k * ppw);
      const int n = static_cast<int>(std::ceil(2 * o.half_length / h)) + 1;
      const GridSpec g = GridSpec::reduced_1d(-o.half_length, o.half_length, n, false);
      const double dt0 = o.cfl * g.spacing(0);
      const auto steps = static_cast<long>(std::ceil(o.T / dt0));
      const double dt = o.T / static_cast<double>(steps);
      WaveStepper<ComplexField> w(g, dt, o.spatial_order);
      ComplexField b(n), mode(n);
      for (int i = 0; i < n; ++i) {
        const double x = g.node(i, 0, 0)(0);
        b(i) = std::exp(-x * x / (2 * o.width * o.width));
      }
      auto phase = [&](double t, int i) { return std::exp(cplx(0, 2 * (o.k * g.node(i, 0, 0)(0) - lambda * t) / eps)); };
      for (long s = 0; s < steps; ++s) {
        const double t = dt * static_cast<double>(s);
        for (int i = 0; i < n; ++i) mode(i) = b(i) * phase(t, i);
        w.step(mode);
      }
      for (int i = 0; i < n; ++i) mode(i) = b(i) * phase(o.T, i);
      const cplx c = (mode.conjugate() * w.value()).sum() / mode.abs2().sum();
      run.coefficient.push_back(c);
      mag.push_back(std::abs(c));
    }
    run.fit = fit_order(o.epsilons, mag);
    run.amplitude = std::exp(run.fit.log_constant);
    st.runs.push_back(run);
  }
  double lo = 1e300, hi = -1e300;
  for (const auto& r : st.runs) {
    lo = std::min(lo, r.fit.order);
    hi = std::max(hi, r.fit.order);
  }
  st.order_spread = st.runs.empty() ? 0.0 : hi - lo;
  st.reproducible = st.runs.size() >= 2 && st.order_spread <= 0.2;
  return st;
}

std::string manifest_json(const Manifest& m) {
  nlohmann::ordered_json j;
  j["producer"] = "mdwkb 1.0";
  j["command"] = m.command;
  j["grid"] = {{"mode", m.grid.mode == DimMode::Reduced1d ? "reduced_1d" : "full_3d"},
               {"lo", m.grid.lo},
               {"hi", m.grid.hi},
               {"points", m.grid.points},
               {"periodic", m.grid.periodic}};
  j["time"] = m.time;
  j["epsilon"] = m.epsilons;
  j["seed"] = m.seed;
  j["threads"] = m.threads;
  if (m.config) {
    j["config_hash"] = m.config->hash();
    j["config"] = m.config->text;
  }
  j["files"] = m.files;
  j["metrics"] = m.metrics;
  return j.dump(2) + "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

void write_conservation_csv(std::ostream& out, const std::vector<ConservationRecord>& log) {
  out.precision(17);
  out << "time,charge,charge_drift,polarization_defect,eikonal_residual\n";
  for (const auto& r : log)
    out << r.time << ',' << r.charge << ',' << r.charge_drift << ',' << r.polarization_defect << ',' << r.eikonal_residual
        << '\n';
}

std::vector<std::string> save_wkb(const WKBSolution& s, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::size_t k = s.time_count() - 1;
  std::vector<std::string> files;
  auto put = [&](const std::string& name, const RawField& f) {
    save_field((std::filesystem::path(dir) / name).string(), f);
    files.push_back(name);
  };
  put("phi_T.mdwkb", to_raw(s.phase.phi[k]));
  put("u_plus_T.mdwkb", to_raw(s.amplitudes[k].plus));
  put("u_minus_T.mdwkb", to_raw(s.amplitudes[k].minus));
  put("V_T.mdwkb", to_raw(s.potentials[k].V));
  put("A_T.mdwkb", to_raw(s.potentials[k].A));
  if (s.corrector) {
    put("u2_prop_plus_T.mdwkb", to_raw(s.corrector->propagating[k].plus));
    put("u2_nonprop_plus_T.mdwkb", to_raw(s.corrector->nonpropagating[k].plus));
  }
  std::ostringstream csv;
  write_conservation_csv(csv, s.log);
  write_text((std::filesystem::path(dir) / "conservation.csv").string(), csv.str());
  files.push_back("conservation.csv");
  return files;
}

}  // namespace mdwkb
