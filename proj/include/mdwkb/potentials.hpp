#pragma once

// Self-consistent potentials: retarded solutions of box u = f with zero
// Cauchy data (box = d_t^2 - Laplacian), by light-cone quadrature in 3d or
// by leapfrog finite differences on any grid.

#include <array>
#include <vector>

#include "mdwkb/amplitude.hpp"
#include "mdwkb/eikonal.hpp"

namespace mdwkb {

/// Source samples at times 0, dt, 2 dt, ...
template <typename Field>
struct BasicSourceHistory {
  GridSpec grid;
  double dt = 0.0;
  std::vector<Field> values;

  void push(Field f) { values.push_back(std::move(f)); }
  double last_time() const { return values.empty() ? -1.0 : dt * static_cast<double>(values.size() - 1); }
  /// Linear interpolation in time; zero before t = 0 (causality).
  /// Throws HistoryTooShort beyond the last stored sample.
  Field at(double t) const;
  /// Same into a caller-owned buffer.
  void at(double t, Field& out) const;
};

using SourceHistory = BasicSourceHistory<RealField>;
using ComplexSourceHistory = BasicSourceHistory<ComplexField>;

struct PotentialState {
  RealField V;
  VectorField A;
  RealField dtV;
  VectorField dtA;
  double time = 0.0;

  static PotentialState zeros(std::size_t n);
};

/// Discrete Laplacian, second or fourth order; zero ghosts on non-periodic axes.
template <typename Field>
Field laplacian(const GridSpec& grid, const Field& f, int order = 2);

/// Explicit leapfrog for box u = f with u(0) = d_t u(0) = 0:
///   u^1 = dt^2/2 f^0,  u^{n+1} = 2u^n - u^{n-1} + dt^2 (Lap u^n + f^n).
template <typename Field>
class WaveStepper {
 public:
  WaveStepper(const GridSpec& grid, double dt, int spatial_order = 2);

  /// Largest stable dt / h for the given active dimension count and order.
  static double max_cfl(int dims, int spatial_order);

  /// Advances from t_n to t_{n+1} with the source sampled at t_n.
  void step(const Field& f);

  const Field& value() const { return u_; }
  const Field& previous() const { return prev_; }
  /// Backward difference (u^n - u^{n-1}) / dt.
  Field time_derivative() const;
  double time() const { return dt_ * steps_; }
  int steps() const { return steps_; }
  double dt() const { return dt_; }
  const GridSpec& grid() const { return grid_; }

 private:
  GridSpec grid_;
  double dt_;
  int order_;
  int steps_ = 0;
  Field u_, prev_;
};

template <typename Field>
struct WaveTrajectory {
  std::vector<double> times;
  std::vector<Field> values;
};

/// Leapfrog for V and the three components of A side by side.
class PotentialStepper {
 public:
  PotentialStepper(const GridSpec& grid, double dt, int spatial_order = 2);
  /// Takes the sources at the current time and returns the state one step later.
  PotentialState step(const RealField& rho, const VectorField& j);
  double dt() const { return w_.front().dt(); }

 private:
  std::vector<WaveStepper<RealField>> w_;
};

/// Leapfrog solve with dt = cfl * min spacing, source read from the history by
/// linear interpolation. Stores every `store_every`-th step (and the last).
/// Throws CFLViolation if cfl exceeds the stability bound of the chosen order.
WaveTrajectory<RealField> wave_fdtd(const SourceHistory& source, int n_steps, double cfl, int spatial_order = 2,
                                    int store_every = 1);
WaveTrajectory<ComplexField> wave_fdtd(const ComplexSourceHistory& source, int n_steps, double cfl,
                                       int spatial_order = 2, int store_every = 1);

/// Radial midpoint rule with step `radial_step` (0 selects h/2) times a
/// Gauss-Legendre (cos theta) x uniform (azimuth) product rule on each shell.
struct ShellQuadrature {
  int n_theta = 12;
  double radial_step = 0.0;
};

/// (1/4 pi) int_{|x-y|<=t} f(t - |x-y|, y) / |x-y| dy on every node of `grid`.
/// Source values between nodes by tricubic interpolation, in time linearly.
/// ModeMismatch unless both grids are full-3d; HistoryTooShort if t is past the history.
RealField retarded_convolve(const SourceHistory& source, double t, const GridSpec& grid,
                            const ShellQuadrature& q = {});
double retarded_convolve_at(const SourceHistory& source, double t, const Vec3& x, const ShellQuadrature& q = {});

/// j_k = <psi, alpha^k psi> pointwise.
VectorField dirac_current(const SpinorArray& psi);

/// Non-oscillating sources of the principal term: rho = |u+|^2 + |u-|^2 and
/// j = omega_+(grad phi) rho (both amplitudes travel with omega_+(grad phi)).
struct MeanSources {
  RealField rho;
  VectorField j;
};
MeanSources mean_sources(const AmplitudePair& u0, const VectorField& grad_phi);

/// V and A_0 at time t from stored source histories: light-cone quadrature in
/// full-3d, leapfrog replay (order `spatial_order`) in reduced-1d.
PotentialState mean_potentials(const SourceHistory& rho, const std::array<SourceHistory, 3>& j, double t,
                               int spatial_order = 2);

/// Z^-_k = <u+, alpha^k u->, the coefficient of e^{-2i phi/eps} in the current.
/// The e^{+2i phi/eps} coefficient is its complex conjugate.
ComplexVectorField zitter_source(const AmplitudePair& u0);

/// Order-1 oscillatory potential amplitudes, with the mode pairing of
/// the Zitterbewegung source: amp_plus = +conj(Z^-), amp_minus = -Z^-.
struct OscillatoryPotential {
  int order = 1;
  ComplexVectorField amp_plus;
  ComplexVectorField amp_minus;
};

/// Throws CharacteristicPhase if the phase fails noncharacteristic_check at `time_index`.
OscillatoryPotential oscillatory_amplitude(const ComplexVectorField& z_minus, const PhaseField& phase,
                                           std::size_t time_index);

/// Leading two-scale response to box a = b e^{+-2i phi/eps}: a ~ eps^2 c b e^{+-2i phi/eps}
/// with c = -1 / (4 ((d_t phi)^2 - |grad phi|^2)); -1/4 on any eikonal solution.
RealField oscillatory_response_coefficient(const PhaseField& phase, std::size_t time_index);

/// Largest |Fourier coefficient| over grid points of theta -> |u0(theta)|^2 and
/// theta -> <u0(theta), alpha^k u0(theta)>, u0(theta) = u+ e^{i theta} + u- e^{-i theta},
/// for modes m = 0 .. samples/2.
struct ThetaModes {
  std::vector<double> density;
  std::vector<double> current;
};
ThetaModes theta_modes(const AmplitudePair& u0, int samples = 16);

/// Projected nonlinearity coefficients ((A_0 . omega_+(grad phi)) - V) u0,+-.
AmplitudePair nonlinearity_N0(const AmplitudePair& u0, const RealField& V, const VectorField& A0,
                              const VectorField& grad_phi);

}  // namespace mdwkb
