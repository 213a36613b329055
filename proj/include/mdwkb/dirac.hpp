#pragma once

// Algebra of the free Dirac symbol D(xi) = alpha.xi + beta.
//
// Everything here is a pure function of its arguments and templated on the
// real scalar type; the `double` instantiation is what the field modules use.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mdwkb/core.hpp"

namespace mdwkb::dirac {

template <typename Scalar>
using Matrix4 = Eigen::Matrix<std::complex<Scalar>, 4, 4>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
struct DiracMatrices {
  std::array<Matrix4<Scalar>, 3> alpha;
  Matrix4<Scalar> beta;
};

template <typename Scalar = double>
const DiracMatrices<Scalar>& dirac_matrices() {
  static const DiracMatrices<Scalar> m = [] {
    using C = std::complex<Scalar>;
    const C o{0, 0}, one{1, 0}, i{0, 1};
    // Pauli matrices.
    Eigen::Matrix<C, 2, 2> s1, s2, s3;
    s1 << o, one, one, o;
    s2 << o, -i, i, o;
    s3 << one, o, o, -one;
    DiracMatrices<Scalar> d;
    const std::array<Eigen::Matrix<C, 2, 2>, 3> sigma{s1, s2, s3};
    for (int k = 0; k < 3; ++k) {
      d.alpha[k].setZero();
      d.alpha[k].template block<2, 2>(0, 2) = sigma[k];
      d.alpha[k].template block<2, 2>(2, 0) = sigma[k];
    }
    d.beta.setZero();
    d.beta.diagonal() << one, one, -one, -one;
    return d;
  }();
  return m;
}

/// lambda(xi) = sqrt(|xi|^2 + 1).
template <typename Scalar>
Scalar lambda(const Vector3<Scalar>& xi) {
  return std::sqrt(xi.squaredNorm() + Scalar(1));
}

/// alpha.v for a real or complex 3-vector.
template <typename Scalar, typename Derived>
Matrix4<Scalar> alpha_dot(const Eigen::MatrixBase<Derived>& v) {
  const auto& m = dirac_matrices<Scalar>();
  Matrix4<Scalar> out = Matrix4<Scalar>::Zero();
  for (int k = 0; k < 3; ++k) out += m.alpha[k] * std::complex<Scalar>(v(k));
  return out;
}

template <typename Scalar>
Matrix4<Scalar> symbol(const Vector3<Scalar>& xi) {
  return alpha_dot<Scalar>(xi) + dirac_matrices<Scalar>().beta;
}

template <typename Scalar>
Scalar eigenvalue(Band band, const Vector3<Scalar>& xi) {
  return Scalar(sign_of(band)) * lambda(xi);
}

template <typename Scalar>
Matrix4<Scalar> projector(Band band, const Vector3<Scalar>& xi) {
  const Scalar s = Scalar(sign_of(band)) / lambda(xi);
  Matrix4<Scalar> p = symbol(xi) * std::complex<Scalar>(s);
  p.diagonal().array() += std::complex<Scalar>(1);
  return p * std::complex<Scalar>(Scalar(0.5));
}

/// Lambda_b = Pi_{-b} / h_{-b}: satisfies Lambda_b Pi_b = 0 and
/// Lambda_b D X = (Id - Pi_b) X.
template <typename Scalar>
Matrix4<Scalar> partial_inverse(Band band, const Vector3<Scalar>& xi) {
  const Band other = opposite(band);
  return projector(other, xi) / std::complex<Scalar>(eigenvalue(other, xi));
}

/// omega_b = grad_xi h_b = +-xi / lambda(xi).
template <typename Scalar>
Vector3<Scalar> group_velocity(Band band, const Vector3<Scalar>& xi) {
  return xi * (Scalar(sign_of(band)) / lambda(xi));
}

/// d omega_b / d xi = +-(Id - xi xi^T / lambda^2) / lambda, the Hessian of h_b.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> group_velocity_jacobian(Band band, const Vector3<Scalar>& xi) {
  const Scalar l = lambda(xi);
  Eigen::Matrix<Scalar, 3, 3> j = Eigen::Matrix<Scalar, 3, 3>::Identity() - xi * xi.transpose() / (l * l);
  return j * (Scalar(sign_of(band)) / l);
}

/// Per-identity maxima of the absolute entrywise deviation.
struct IdentityReport {
  std::size_t samples = 0;
  double anticommutation = 0;  // alpha^k alpha^l + alpha^l alpha^k = 2 delta, alpha^k beta + beta alpha^k = 0
  double hermiticity = 0;
  double idempotence = 0;      // Pi_b^2 = Pi_b
  double orthogonality = 0;    // Pi_+ Pi_- = 0
  double completeness = 0;     // Pi_+ + Pi_- = Id
  double decomposition = 0;    // D = h_+ Pi_+ + h_- Pi_-
  double reflection = 0;       // Pi_b(-xi) = Pi_{-b}(xi); not an identity of the massive symbol
  double parity = 0;           // Pi_b(-xi) = beta Pi_b(xi) beta
  double m1 = 0;               // Pi_b D = h_b Pi_b
  double m2 = 0;               // Pi_b alpha^k Pi_b = omega_{b,k} Pi_b
  double m3 = 0;               // alpha^k Pi_b = Pi_{-b} alpha^k + omega_{b,k} Id
  double partial_inverse = 0;  // Lambda_b Pi_b = 0, Lambda_b D X = (Id - Pi_b) X
  double group_velocity_fd = 0;  // omega_b vs centered differences of h_b (O(step^2))

  /// Largest deviation over the identities that hold exactly (all but `reflection`).
  double max_exact() const;
};

/// Evaluates every identity at `samples` random xi drawn uniformly from [-5,5]^3.
IdentityReport verify_identities(std::size_t samples, std::uint64_t seed);

/// Same suite at caller-supplied momenta.
IdentityReport verify_identities_at(const std::vector<Vec3>& momenta, std::uint64_t seed = 1);

}  // namespace mdwkb::dirac
