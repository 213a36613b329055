#pragma once

// Phase-space and convergence diagnostics: matrix Wigner transform, band
// content, PDE residual of a synthesized field, and the WKB-vs-reference study.

#include <iosfwd>
#include <vector>

#include "mdwkb/reference.hpp"
#include "mdwkb/transport.hpp"

namespace mdwkb {

/// W(x, xi) = (2 pi)^-1 int psi(x + eps y/2) psi^*(x - eps y/2) e^{-i xi y} dy on
/// a subsampled set of nodes of a reduced-1d grid; 4x4 hermitian per point.
struct WignerField {
  double epsilon = 0.0;
  double dx = 0.0;   // spacing of the x samples
  double dxi = 0.0;
  std::vector<std::size_t> nodes;  // grid indices of the x samples
  std::vector<double> x;
  std::vector<double> xi;
  std::vector<Matrix4c> values;  // values[ix * xi.size() + iq]

  const Matrix4c& at(std::size_t ix, std::size_t iq) const { return values[ix * xi.size() + iq]; }
  /// sum tr W dx dxi, approximately the squared L2 norm.
  double trace_mass() const;
};

struct WignerOptions {
  /// Number of lags (power of two); 0 picks about sqrt(pi eps) / h.
  int lags = 0;
  /// Keep every stride-th node; 0 keeps about 1024 samples.
  int stride = 0;
};

/// Shifted products psi_{j+m} psi_{j-m}^* under a Hann lag window, FFT over m:
/// xi_q = q pi eps / (M h). ResolutionInsufficient unless reduced-1d with
/// h <= 2 pi eps / 8 and at least 8 lags.
WignerField wigner_transform(const GridSpec& grid, const SpinorArray& psi, double eps, const WignerOptions& options = {});

/// Trace mass near xi = +grad phi and xi = -grad phi (nearest set wins).
struct WignerConcentration {
  double plus = 0.0;
  double minus = 0.0;
  double total = 0.0;
  double fraction() const { return total != 0.0 ? (plus + minus) / total : 0.0; }
};
WignerConcentration wigner_concentration(const WignerField& w, const VectorField& grad_phi, double radius_bins = 3.0);

/// ||sum Pi_+(xi) W Pi_-(xi)|| over all samples relative to the trace mass: the
/// interband part tested against a constant, which vanishes weakly as eps -> 0.
double wigner_cross_band(const WignerField& w);

struct BandCharges {
  double plus = 0.0;
  double minus = 0.0;
};
/// ||Pi_+-(eps D) psi||^2 via the spectral multiplier; periodic grids only.
BandCharges band_content(const GridSpec& grid, const SpinorArray& psi, double eps);

struct ResidualSeries {
  double epsilon = 0.0;
  bool with_corrector = false;
  std::vector<double> times;
  std::vector<double> residual;  // ||i eps d_t psi - D_A psi||_2
  double max() const;
};

/// Residual of the synthesized field. d_t acts on the demodulated amplitudes
/// and the phase by finite differences in time, grad is spectral, and V, A are
/// recomputed from the synthesized field with the leapfrog backend.
ResidualSeries residual_meter(const WKBSolution& solution, double eps, bool with_corrector = false);

/// Least squares of ln e against ln eps; residual is the RMS of the ln misfit.
struct OrderFit {
  double order = 0.0;
  double log_constant = 0.0;
  double residual = 0.0;
  bool resolved = false;  // at least 4 points and residual <= 0.1
};
OrderFit fit_order(const std::vector<double>& epsilons, const std::vector<double>& errors);

struct ConvergenceRow {
  double epsilon = 0.0;
  double error = 0.0;
  double error_corrected = -1.0;  // negative when not measured
  double runtime_seconds = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  OrderFit fit;
  OrderFit fit_corrected;
  /// Coupling off: the error is linear WKB plus discretization, not the nonlinear statement.
  bool linear = false;
  bool has_corrector = false;
};

struct CompareOptions {
  int substeps = 8;
  bool with_corrector = false;
};

/// Per eps: reference run from synthesize(wkb, eps, 0) on the WKB grid with the
/// WKB time step, relative L2 error at T; with_corrector adds a second run
/// started from the corrected data. Epsilons must be strictly decreasing.
ConvergenceTable compare(const WKBSolution& wkb, const std::vector<double>& epsilons, const CompareOptions& options = {});

void write_csv(std::ostream& out, const ConvergenceTable& table);
void write_csv(std::ostream& out, const ResidualSeries& series);

}  // namespace mdwkb
