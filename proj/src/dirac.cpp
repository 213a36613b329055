#include "mdwkb/dirac.hpp"

#include <algorithm>
#include <random>

namespace mdwkb::dirac {

namespace {

double dev(const Matrix4c& a, const Matrix4c& b) { return (a - b).cwiseAbs().maxCoeff(); }

void accumulate(IdentityReport& r, const Vec3& xi, std::mt19937_64& rng) {
  const auto& m = dirac_matrices();
  const Matrix4c id = Matrix4c::Identity();
  const Matrix4c d = symbol(xi);

  std::normal_distribution<double> gauss;
  Spinor x;
  for (int i = 0; i < 4; ++i) x(i) = cplx(gauss(rng), gauss(rng));

  for (Band b : {Band::Plus, Band::Minus}) {
    const Matrix4c p = projector(b, xi);
    const Matrix4c q = projector(opposite(b), xi);
    const Vec3 w = group_velocity(b, xi);
    const double h = eigenvalue(b, xi);

    r.hermiticity = std::max(r.hermiticity, dev(p, p.adjoint()));
    r.idempotence = std::max(r.idempotence, dev(p * p, p));
    r.m1 = std::max(r.m1, dev(p * d, p * cplx(h)));
    r.reflection = std::max(r.reflection, dev(projector(b, Vec3(-xi)), q));
    r.parity = std::max(r.parity, dev(projector(b, Vec3(-xi)), m.beta * p * m.beta));
    for (int k = 0; k < 3; ++k) {
      r.m2 = std::max(r.m2, dev(p * m.alpha[k] * p, p * cplx(w(k))));
      r.m3 = std::max(r.m3, dev(m.alpha[k] * p, q * m.alpha[k] + id * cplx(w(k))));
    }
    const Matrix4c lam = partial_inverse(b, xi);
    r.partial_inverse = std::max(r.partial_inverse, dev(lam * p, Matrix4c::Zero()));
    r.partial_inverse = std::max(r.partial_inverse, ((lam * d * x) - (id - p) * x).cwiseAbs().maxCoeff());

    // Centered differences of h_b; truncation ~ step^2 |d^3 h| / 6.
    const double step = 1e-4;
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e(k) = step;
      const double fd = (eigenvalue(b, Vec3(xi + e)) - eigenvalue(b, Vec3(xi - e))) / (2 * step);
      r.group_velocity_fd = std::max(r.group_velocity_fd, std::abs(fd - w(k)));
    }
  }
  const Matrix4c pp = projector(Band::Plus, xi), pm = projector(Band::Minus, xi);
  r.orthogonality = std::max(r.orthogonality, dev(pp * pm, Matrix4c::Zero()));
  r.completeness = std::max(r.completeness, dev(pp + pm, id));
  r.decomposition = std::max(
      r.decomposition, dev(d, pp * cplx(eigenvalue(Band::Plus, xi)) + pm * cplx(eigenvalue(Band::Minus, xi))));
  ++r.samples;
}

IdentityReport matrix_identities() {
  IdentityReport r;
  const auto& m = dirac_matrices();
  const Matrix4c id = Matrix4c::Identity();
  for (int k = 0; k < 3; ++k) {
    r.hermiticity = std::max(r.hermiticity, dev(m.alpha[k], m.alpha[k].adjoint()));
    r.anticommutation = std::max(r.anticommutation, dev(m.alpha[k] * m.beta + m.beta * m.alpha[k], Matrix4c::Zero()));
    for (int l = 0; l < 3; ++l) {
      const Matrix4c target = (k == l) ? Matrix4c(2.0 * id) : Matrix4c::Zero();
      r.anticommutation =
          std::max(r.anticommutation, dev(m.alpha[k] * m.alpha[l] + m.alpha[l] * m.alpha[k], target));
    }
  }
  r.hermiticity = std::max(r.hermiticity, dev(m.beta, m.beta.adjoint()));
  r.anticommutation = std::max(r.anticommutation, dev(m.beta * m.beta, id));
  return r;
}

}  // namespace

double IdentityReport::max_exact() const {
  return std::max({anticommutation, hermiticity, idempotence, orthogonality, completeness, decomposition,
                   parity, m1, m2, m3, partial_inverse});
}

IdentityReport verify_identities(std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorKind::InvalidArgument, "verify_identities needs samples >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<Vec3> momenta(samples);
  for (auto& xi : momenta) xi = Vec3(u(rng), u(rng), u(rng));
  return verify_identities_at(momenta, seed + 1);
}

IdentityReport verify_identities_at(const std::vector<Vec3>& momenta, std::uint64_t seed) {
  if (momenta.empty()) throw Error(ErrorKind::InvalidArgument, "verify_identities needs samples >= 1");
  std::mt19937_64 rng(seed);
  IdentityReport r = matrix_identities();
  for (const Vec3& xi : momenta) accumulate(r, xi, rng);
  return r;
}

}  // namespace mdwkb::dirac
