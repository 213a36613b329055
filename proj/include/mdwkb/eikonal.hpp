#pragma once

// Relativistic Hamilton-Jacobi equation d_t phi = H(grad phi) solved by
// straight characteristics, plus an independent Lax-Friedrichs grid solver.

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mdwkb/grid.hpp"

namespace mdwkb {

/// Which root of the eikonal equation (d_t phi)^2 - |grad phi|^2 = 1 is taken.
///
/// With psi ~ e^{i phi/eps}, the time frequency is -d_t phi, so
///   Electron: d_t phi = -lambda(grad phi); e^{i phi/eps} modes lie in range Pi_+(grad phi)
///             and rays move with omega_+(grad phi).
///   Positron: d_t phi = +lambda(grad phi); rays move with -omega_+(grad phi).
enum class PhaseBranch { Electron, Positron };

/// Sign s of d_t phi = s * lambda(grad phi).
constexpr double time_sign(PhaseBranch b) { return b == PhaseBranch::Electron ? -1.0 : 1.0; }

double hamiltonian(PhaseBranch b, const Vec3& xi);
/// Characteristic speed -grad_xi H(xi).
Vec3 ray_velocity(PhaseBranch b, const Vec3& xi);
Mat3 ray_velocity_jacobian(PhaseBranch b, const Vec3& xi);

/// Initial phase phi_I with its first and second derivatives.
struct InitialPhase {
  std::string name;
  std::function<double(const Vec3&)> value;
  std::function<Vec3(const Vec3&)> gradient;
  std::function<Mat3(const Vec3&)> hessian;

  static InitialPhase zero();
  static InitialPhase plane(const Vec3& k);
  /// a |x - c|^2 / 2 + k.x
  static InitialPhase quadratic(double a, const Vec3& k = Vec3::Zero(), const Vec3& center = Vec3::Zero());
  /// Samples on `grid`; derivatives by centered differences, cubic interpolation between nodes.
  static InitialPhase sampled(const GridSpec& grid, const RealField& samples);
};

/// Restricts a 3-vector (or a Hessian, as a block) to the grid's active axes.
Vec3 active(const GridSpec& grid, const Vec3& v);
Mat3 active_block(const GridSpec& grid, const Mat3& m);

struct RayBundle {
  PhaseBranch branch = PhaseBranch::Electron;
  GridSpec grid;
  InitialPhase initial;
  VectorField seeds;          // x0 per ray
  VectorField xi0;            // grad phi_I(x0), constant along the ray
  RealField phase0;           // phi_I(x0)
  std::vector<Mat3> hessian0;  // D^2 phi_I(x0) (active block)
  std::vector<double> times;
  std::vector<VectorField> positions;  // per stored time
  std::vector<RealField> phase;        // per stored time
  double caustic_bound = std::numeric_limits<double>::infinity();

  std::size_t size() const { return static_cast<std::size_t>(seeds.cols()); }
  Vec3 position(std::size_t ray, double t) const;
  double phase_at(std::size_t ray, double t) const;
  /// det(dx/dx0) along the ray.
  double jacobian(std::size_t ray, double t) const;
  /// div_x of the ray velocity field at the ray's position.
  double velocity_divergence(std::size_t ray, double t) const;
};

struct PhaseField {
  GridSpec grid;
  PhaseBranch branch = PhaseBranch::Electron;
  std::vector<double> times;
  std::vector<RealField> phi;
  std::vector<VectorField> grad_phi;
  std::vector<RealField> dt_phi;
  std::vector<RealField> div_omega_plus;
  std::vector<RealField> div_omega_minus;
  /// Foot point of the ray through each node (ray solver only; empty for the grid solver).
  std::vector<VectorField> feet;
  double caustic_bound = std::numeric_limits<double>::infinity();

  std::size_t time_count() const { return times.size(); }
};

/// 1 / (max_x ||D^2 H(grad phi_I)|| * max_x ||D^2 phi_I||), spectral norms over grid nodes.
double caustic_time(const InitialPhase& phase, const GridSpec& grid);

RayBundle solve_rays(const InitialPhase& phase, const GridSpec& grid, double T, int n_steps,
                     PhaseBranch branch = PhaseBranch::Electron);

/// Foot point x0 with x0 + t v(grad phi_I(x0)) = x, by Newton starting from the
/// value passed in `x0`. Returns false if Newton does not converge.
bool foot_point(const InitialPhase& phase, const GridSpec& grid, PhaseBranch branch, const Vec3& x, double t,
                Vec3& x0);

PhaseField phase_on_grid(const RayBundle& rays, const GridSpec& grid, const std::vector<double>& times);

/// Local Lax-Friedrichs marching of d_t phi = H(grad phi); returns snapshots at 0 and T.
PhaseField solve_hj_grid(const InitialPhase& phase, const GridSpec& grid, double T, double cfl,
                         PhaseBranch branch = PhaseBranch::Electron);

struct Residual {
  std::vector<RealField> values;  // per time (empty fields where not evaluated)
  double max = 0.0;
};

/// (d_t phi)^2 - |grad phi|^2 - 1 from the stored fields.
Residual eikonal_residual(const PhaseField& phase);

/// Same expression with d_t phi and grad phi replaced by second-order centered
/// differences of phi (interior stored times and interior nodes; the phase is not
/// periodic even on a periodic grid, so seam stencils are skipped).
Residual eikonal_residual_fd(const PhaseField& phase);

/// 32 (d_t phi)^3 ((d_t phi)^2 - |grad phi|^2), the determinant of the wave
/// system's symbol at the doubled phase (up to sign).
double noncharacteristic_determinant(double dt_phi, const Vec3& grad_phi);

/// Per time, true where |determinant| exceeds `tolerance`.
std::vector<Eigen::Array<bool, Eigen::Dynamic, 1>> noncharacteristic_check(const PhaseField& phase,
                                                                            double tolerance = 1e-8);

}  // namespace mdwkb
