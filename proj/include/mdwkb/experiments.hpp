#pragma once

// Shared experiment setups and run artifacts (manifest, saved fields).

#include <map>
#include <string>
#include <vector>

#include "mdwkb/config.hpp"
#include "mdwkb/diagnostics.hpp"

namespace mdwkb {

/// Electron Gaussian packet on the phase 0.5 x + 0.25 x^2, reduced-1d, T = 0.5.
/// Same text as runs/gauss1d.cfg.
const std::string& gauss1d_config_text();

/// Leading response of box a = b(x) e^{2i phi/eps} with zero data, phi = k x - lambda t
/// on an eikonal plane phase: a(T) projected on b e^{2i phi(T)/eps}, fitted as C eps^p.
struct OscillatoryStudyOptions {
  std::vector<double> epsilons{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
  std::vector<int> points_per_wavelength{16, 32};
  double k = 0.5;
  double width = 0.25;
  double T = 1.5;
  double half_length = 3.0;
  double cfl = 0.125;
  int spatial_order = 4;
};

struct OscillatoryRun {
  int points_per_wavelength = 0;
  std::vector<cplx> coefficient;  // per eps
  OrderFit fit;
  double amplitude = 0.0;  // exp(log_constant): |coefficient| ~ amplitude eps^order
};

struct OscillatoryStudy {
  std::vector<double> epsilons;
  std::vector<OscillatoryRun> runs;
  double predicted = -0.25;  // two-scale coefficient c of a ~ c eps^2 b e^{2i phi/eps}
  double order_spread = 0.0;
  bool reproducible = false;  // order spread <= 0.2
};

OscillatoryStudy oscillatory_response_study(const OscillatoryStudyOptions& options = {});

/// Run description written next to every output set.
struct Manifest {
  std::string command;
  const RunConfig* config = nullptr;
  GridSpec grid;
  double time = 0.0;
  std::vector<double> epsilons;
  int seed = 0;
  int threads = 1;
  std::vector<std::string> files;
  std::map<std::string, double> metrics;
};
std::string manifest_json(const Manifest& m);

void write_text(const std::string& path, const std::string& text);

/// Final-time phase, amplitudes and potentials as field files plus the
/// conservation log as CSV; returns the file names written into `dir`.
std::vector<std::string> save_wkb(const WKBSolution& s, const std::string& dir);

void write_conservation_csv(std::ostream& out, const std::vector<ConservationRecord>& log);

}  // namespace mdwkb
