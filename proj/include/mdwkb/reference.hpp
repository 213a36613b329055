#pragma once

// Direct solver of the scaled Maxwell-Dirac system on a periodic grid:
//   i eps d_t psi = -i eps alpha.grad psi + beta psi + (V - alpha.A) psi,
//   box V = |psi|^2,  box A_k = <psi, alpha^k psi>,
// zero Cauchy data for the potentials.

#include <iosfwd>
#include <vector>

#include "mdwkb/potentials.hpp"
#include "mdwkb/spectral.hpp"

namespace mdwkb {

struct MDState {
  SpinorArray psi;
  PotentialState potentials;
  double epsilon = 0.0;
  double time = 0.0;
};

/// Exact free flow over dt: multiplier e^{-i dt h_+(xi)/eps} Pi_+(xi) + e^{-i dt h_-(xi)/eps} Pi_-(xi), xi = eps k.
void kinetic_step(const Spectral& spectral, SpinorArray& psi, double eps, double dt);
/// Pointwise e^{-i dt (V - alpha.A)/eps}.
void potential_step(SpinorArray& psi, const RealField& V, const VectorField& A, double eps, double dt);

struct ReferenceOptions {
  GridSpec grid;
  double epsilon = 1.0 / 64;
  double T = 0.5;
  /// Wave (macro) step; 0 selects the transport default min(h/2, T/200).
  double dt = 0.0;
  /// Strang steps per macro step, potentials linear in time in between.
  int substeps = 8;
  bool coupling = true;
  int potential_order = 2;
  /// States kept at these times (nearest macro step); the final state is always kept.
  std::vector<double> store_times;
};

struct ReferenceLogEntry {
  double time = 0.0;
  double charge = 0.0;
  double field_energy_V = 0.0;
  double field_energy_A = 0.0;
};

struct ReferenceTrajectory {
  std::vector<MDState> states;
  std::vector<ReferenceLogEntry> log;
};

/// Macro step n -> n+1: the leapfrog potentials at t_{n+1} from the sources of
/// psi^n, then `substeps` Strang steps (half potential, kinetic, half
/// potential) with potentials interpolated linearly between t_n and t_{n+1}.
/// ResolutionInsufficient below 8 points per 2 pi eps; CFLViolation from the wave step.
ReferenceTrajectory run_reference(const ReferenceOptions& options, const SpinorArray& psi0);

/// Largest grid spacing allowed for eps (8 points per wavelength 2 pi eps).
double max_spacing(double eps);

void write_log_csv(std::ostream& out, const std::vector<ReferenceLogEntry>& log);

}  // namespace mdwkb
