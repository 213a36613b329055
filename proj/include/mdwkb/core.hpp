#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace mdwkb {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Matrix4c = Eigen::Matrix<cplx, 4, 4>;
using Spinor = Eigen::Matrix<cplx, 4, 1>;

// Column-per-grid-point storage for fields.
using RealField = Eigen::ArrayXd;
using ComplexField = Eigen::ArrayXcd;
using VectorField = Eigen::Matrix3Xd;
using ComplexVectorField = Eigen::Matrix3Xcd;
using SpinorArray = Eigen::Matrix<cplx, 4, Eigen::Dynamic>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

/// Energy band of the free Dirac symbol. Plus carries h_+ = +lambda (electrons).
enum class Band { Plus, Minus };

constexpr double sign_of(Band b) { return b == Band::Plus ? 1.0 : -1.0; }
constexpr Band opposite(Band b) { return b == Band::Plus ? Band::Minus : Band::Plus; }

enum class ErrorKind {
  CausticExceeded,
  NonFinitePhase,
  CoverageGap,
  CFLViolation,
  ModeMismatch,
  HistoryTooShort,
  CharacteristicPhase,
  ConservationBreach,
  ResolutionInsufficient,
  MissingOscillatoryPotential,
  BadMagic,
  DimMismatch,
  TruncatedPayload,
  NonPositiveConstant,
  InvalidConfig,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception; `kind` is stable and machine-readable.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mdwkb
