#pragma once

// Principal amplitudes u0,+- along the rays of the electron phase, the
// self-consistent mean potentials they generate, and the first corrector.
//
// Both amplitudes travel with omega_+(grad phi) and see the same
// Gamma = i A0.omega - i V - div(omega)/2, so every ray carries one scalar
// propagator J^{-1/2} exp(int i (A0.omega - V) dt) shared by the two bands.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdwkb/amplitude.hpp"
#include "mdwkb/eikonal.hpp"
#include "mdwkb/potentials.hpp"

namespace mdwkb {

/// Fourier modes in the fast variable theta, one spinor field per mode.
struct ThetaExpansion {
  std::map<int, SpinorArray> modes;

  /// sum_m v_m e^{i m theta} on `points` grid points.
  SpinorArray evaluate(double theta, Eigen::Index points) const;
  /// Modes |m| <= max_mode from uniform samples theta_s = 2 pi s / S.
  static ThetaExpansion from_samples(const std::vector<SpinorArray>& samples, int max_mode);
};

/// Keeps m = +1 times Pi_+(grad phi) and m = -1 times Pi_-(-grad phi).
ThetaExpansion project_P(const ThetaExpansion& v, const VectorField& grad_phi);
/// m = +1 times Lambda_+(grad phi), m = -1 times Lambda_-(-grad phi); other modes dropped.
ThetaExpansion project_Q(const ThetaExpansion& v, const VectorField& grad_phi);

enum class BandSplit { Plus, Minus, Both };

/// u+ = Pi_+(grad phi_I) chi0 and/or u- = Pi_-(-grad phi_I) chi0.
AmplitudePair polarize_initial(const SpinorArray& chi0, const VectorField& grad_phi, BandSplit split);

/// max over nodes of |Pi_-(xi) u+| and |Pi_+(-xi) u-|.
double polarization_defect(const AmplitudePair& u, const VectorField& grad_phi);

/// Applies Pi_+(xi) to u+ and Pi_-(-xi) to u-, recording the removed part.
void reproject(AmplitudePair& u, const VectorField& grad_phi);

/// Gamma on the grid at phase.times[time_index]. The minus amplitude rides
/// Pi_-(-grad phi), whose group velocity is omega_+(grad phi), so `band` does
/// not change the result.
ComplexField gamma(const RealField& V, const VectorField& A0, const PhaseField& phase, std::size_t time_index,
                   Band band);

/// Amplitudes carried by rays seeded at the grid nodes.
class RayTransport {
 public:
  RayTransport(RayBundle rays, const AmplitudePair& initial);

  double time() const { return time_; }
  const RayBundle& rays() const { return rays_; }
  /// int_0^t i (A0.omega - V) along each ray.
  const ComplexField& exponent() const { return exponent_; }

  /// i (A0.omega - V) at the ray positions at time p.time.
  ComplexField potential_rate(const PotentialState& p) const;

  /// Exponential Heun step from now.time (= time()) to next.time.
  void advance(const PotentialState& now, const PotentialState& next);

  /// J^{-1/2} e^{S} per ray at the current time.
  ComplexField propagator() const;
  /// Amplitudes at the ray positions.
  AmplitudePair on_rays() const;
  /// Amplitudes on the grid nodes whose feet are given, re-projected.
  AmplitudePair to_grid(const VectorField& feet, const VectorField& grad_phi) const;

 private:
  RayBundle rays_;
  AmplitudePair seed_;
  ComplexField exponent_;
  double time_ = 0.0;
};

/// Values known at the ray seeds pulled back to grid nodes through their feet.
SpinorArray pull_back(const GridSpec& grid, const SpinorArray& per_ray, const VectorField& feet);
/// Grid field sampled at the ray positions at time t.
SpinorArray sample_on_rays(const RayBundle& rays, const SpinorArray& field, double t);

struct ConservationRecord {
  double time = 0.0;
  double charge = 0.0;
  double charge_drift = 0.0;  // relative to t = 0
  double polarization_defect = 0.0;
  double eikonal_residual = 0.0;
};

/// u2 = P u2 + (Id - P) u2, per band, on the grid at every stored time.
struct CorrectorTrajectory {
  std::vector<AmplitudePair> propagating;
  std::vector<AmplitudePair> nonpropagating;
};

struct WkbOptions {
  GridSpec grid;
  InitialPhase phase = InitialPhase::zero();
  PhaseBranch branch = PhaseBranch::Electron;
  SpinorArray chi0;
  BandSplit split = BandSplit::Plus;
  /// When non-empty, u- is polarized from this field and chi0 feeds u+ only (split ignored).
  SpinorArray chi0_minus;
  double T = 0.5;
  /// 0 selects min(h/2, T/200).
  double dt = 0.0;
  bool coupling = true;
  bool corrector = false;
  int potential_order = 2;
  double charge_tolerance = 1e-6;
  double defect_tolerance = 1e-8;
};

struct WKBSolution {
  GridSpec grid;
  RayBundle rays;
  PhaseField phase;                        // every step
  std::vector<AmplitudePair> amplitudes;   // every step
  std::vector<PotentialState> potentials;  // every step (zero when uncoupled)
  std::vector<ComplexField> exponents;     // ray exponent S every step
  std::optional<CorrectorTrajectory> corrector;
  std::vector<double> epsilons;
  std::vector<ConservationRecord> log;
  bool coupling = true;
  int potential_order = 2;
  double charge_tolerance = 1e-6;
  double defect_tolerance = 1e-8;
  std::string config_hash;

  std::size_t time_count() const { return phase.times.size(); }
  double dt() const { return phase.times.size() > 1 ? phase.times[1] - phase.times[0] : 0.0; }
  /// Index of the stored time equal to t (within 1e-9 dt); InvalidArgument otherwise.
  std::size_t time_index(double t) const;
};

/// dt with n_steps = ceil(T / min(h/2, T/200)) equal steps, or the requested one.
double wkb_time_step(const GridSpec& grid, double T, double requested = 0.0);

/// Eikonal, causal potential marching and amplitude transport. Errors carry
/// the step index. ConservationBreach if one step moves the charge by more
/// than 10x the tolerance.
WKBSolution run_wkb(const WkbOptions& options);

/// Non-propagating part -Q(f) with the partial inverse of the mode operator
/// (-Pi_-(xi)/(2 lambda) on m = +1, +Pi_+(-xi)/(2 lambda) on m = -1) applied to
/// f = i(d_t + alpha.grad)u0 - (V - alpha.A0)u0; propagating part transported
/// with source r and the linearized mean-field coupling, zero initial data.
CorrectorTrajectory first_corrector(const WKBSolution& solution);

/// psi = sqrt(eps) (u+ e^{i phi/eps} + u- e^{-i phi/eps}) + eps^{3/2} (u2,+ e^{i phi/eps} + u2,- e^{-i phi/eps}),
/// the corrector term only if requested and present.
SpinorArray synthesize(const WKBSolution& solution, double eps, std::size_t time_index, bool with_corrector = false);
SpinorArray synthesize_at(const WKBSolution& solution, double eps, double t, bool with_corrector = false);

}  // namespace mdwkb
