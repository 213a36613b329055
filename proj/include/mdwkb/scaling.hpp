#pragma once

// Physical units to the dimensionless Maxwell-Dirac system.

namespace mdwkb {

/// SI values.
struct PhysicalConstants {
  double hbar = 1.054571817e-34;
  double c = 2.99792458e8;
  double eps0 = 8.8541878128e-12;
  double m = 9.1093837015e-31;
  double e = 1.602176634e-19;

  static PhysicalConstants electron() { return {}; }
};

struct PhysicalScaling {
  PhysicalConstants constants;
  double delta = 0.0;     // hbar c eps0 / e^2
  double ybar = 0.0;      // e^2 / (m c^2 eps0), length
  double sbar = 0.0;      // ybar / c, time
  double lambda_A = 0.0;  // m c / e
  double kappa_V = 0.0;   // c lambda_A
};

/// The value quoted for electrons in the source of the scaling.
inline constexpr double kQuotedElectronDelta = 13.0;

/// NonPositiveConstant names the first offending constant.
PhysicalScaling physical_to_dimensionless(const PhysicalConstants& k);

}  // namespace mdwkb
