#pragma once

// Run configuration: flat key = value lines under [section] headers.
//
//   [grid]       mode = reduced_1d | full_3d, lo, hi, n, periodic
//   [phase]      initial = zero | plane(k1[, k2, k3]) | quadratic(a[, k1, k2, k3])
//   [amplitude]  profiles = gaussian(center, width, band[, weight]); ...
//                (center is x or cx, cy, cz; band is plus or minus)
//   [run]        T, epsilons (fractions allowed, comma separated), coupling,
//                corrector, dt, substeps, charge_tolerance, defect_tolerance
//   [backend]    potentials = leapfrog2 | leapfrog4
//   [output]     dir

#include <string>
#include <vector>

#include "mdwkb/transport.hpp"

namespace mdwkb {

/// name(arg, ...) with numeric or bare-word arguments.
struct NamedForm {
  std::string name;
  std::vector<std::string> args;

  static NamedForm parse(const std::string& text);
  double number(std::size_t i) const;
};

struct RunConfig {
  GridSpec grid;
  NamedForm phase_init{"zero", {}};
  std::vector<NamedForm> profiles;
  double T = 0.5;
  std::vector<double> epsilons;
  bool coupling = true;
  bool corrector = false;
  double dt = 0.0;
  int substeps = 8;
  double charge_tolerance = 1e-6;
  double defect_tolerance = 1e-8;
  int potential_order = 2;
  std::string output_dir = "out";
  std::string text;  // verbatim source

  /// SHA-256 of the verbatim text, hex.
  std::string hash() const;
};

/// InvalidConfig with the offending key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// "1/64" or "0.015625".
double parse_number(const std::string& text);
std::vector<double> parse_number_list(const std::string& text);

InitialPhase make_phase(const NamedForm& form);

/// chi for each band: gaussian profiles times e1 (plus) or e3 (minus).
struct InitialAmplitudes {
  SpinorArray plus;
  SpinorArray minus;
  bool has_minus = false;
};
InitialAmplitudes make_amplitudes(const RunConfig& config);

WkbOptions wkb_options(const RunConfig& config);

std::string sha256_hex(const std::string& data);

}  // namespace mdwkb
