#include "doctest.h"

#include <cmath>

#include "mdwkb/grid.hpp"
#include "mdwkb/spectral.hpp"

using namespace mdwkb;

TEST_CASE("grid layout") {
  const GridSpec g = GridSpec::full_3d(-1, 1, 8, false);
  CHECK(g.size() == 512);
  CHECK(g.spacing(0) == doctest::Approx(2.0 / 7));
  const auto ijk = g.unravel(g.index(3, 5, 6));
  CHECK(ijk[0] == 3);
  CHECK(ijk[1] == 5);
  CHECK(ijk[2] == 6);
  CHECK(g.node(7, 0, 0)(0) == doctest::Approx(1.0));
  const GridSpec p = GridSpec::reduced_1d(-4, 4, 64);
  CHECK(p.spacing(0) == 0.125);
  CHECK(p.node(std::size_t{63})(0) == doctest::Approx(4 - 0.125));
  CHECK_THROWS_AS(GridSpec::reduced_1d(0, 1, 4).validate(), Error);
  CHECK_THROWS_AS(GridSpec::reduced_1d(1, 0, 16).validate(), Error);
}

TEST_CASE("parallel_for covers the range once") {
  std::vector<int> hits(10000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) ++hits[i];
  });
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("derivative and interpolation accuracy") {
  const GridSpec g = GridSpec::reduced_1d(0, 2 * kPi, 64);
  RealField f(64), df(64);
  for (int i = 0; i < 64; ++i) {
    const double x = g.node(i, 0, 0)(0);
    f(i) = std::sin(x);
    df(i) = std::cos(x);
  }
  const double h = g.spacing(0);
  // Fourth-order truncation: h^4/30 |f^(5)|.
  CHECK((derivative(g, f, 0) - df).abs().maxCoeff() < std::pow(h, 4) / 30 * 1.01);
  // Cubic Lagrange error bound: (3/128) h^4 |f''''| at the midpoint of the central cell.
  for (double x : {0.1, 1.234, 3.0, 6.2}) CHECK(std::abs(interpolate(g, f, Vec3(x, 0, 0)) - std::sin(x)) < 0.0235 * std::pow(h, 4) * 2);

  const GridSpec q = GridSpec::full_3d(-1, 1, 16, false);
  RealField lin(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) lin(static_cast<Eigen::Index>(i)) = q.node(i).dot(Vec3(1, -2, 3));
  for (int a = 0; a < 3; ++a) CHECK((derivative(q, lin, a) - Vec3(1, -2, 3)(a)).abs().maxCoeff() < 1e-12);
  CHECK(std::abs(interpolate(q, lin, Vec3(0.31, -0.77, 0.99)) - Vec3(0.31, -0.77, 0.99).dot(Vec3(1, -2, 3))) < 1e-13);
}

TEST_CASE("integration") {
  const GridSpec g = GridSpec::reduced_1d(-1, 1, 101, false);
  RealField one = RealField::Ones(101);
  CHECK(integrate(g, one) == doctest::Approx(2.0).epsilon(1e-14));
  const GridSpec p = GridSpec::full_3d(0, 1, 8);
  CHECK(integrate(p, RealField::Ones(static_cast<Eigen::Index>(p.size()))) == doctest::Approx(1.0));
}

TEST_CASE("spectral transforms") {
  const GridSpec g = GridSpec::reduced_1d(0, 2 * kPi, 32);
  Spectral sp(g);
  ComplexField f(32);
  for (int i = 0; i < 32; ++i) f(i) = std::exp(kI * 3.0 * g.node(i, 0, 0)(0));
  ComplexField F = f;
  sp.forward(F);
  int peak = 0;
  F.abs().maxCoeff(&peak);
  CHECK(sp.wavenumber(0, peak) == doctest::Approx(3.0));
  sp.inverse(F);
  CHECK((F - f).abs().maxCoeff() < 1e-14);

  const GridSpec g3 = GridSpec::full_3d(0, 2 * kPi, 8);
  Spectral s3(g3);
  ComplexField h(static_cast<Eigen::Index>(g3.size()));
  for (std::size_t i = 0; i < g3.size(); ++i) h(static_cast<Eigen::Index>(i)) = std::exp(kI * g3.node(i).dot(Vec3(1, -2, 3)));
  ComplexField H = h;
  s3.forward(H);
  H.abs().maxCoeff(&peak);
  CHECK((s3.wavevector(static_cast<std::size_t>(peak)) - Vec3(1, -2, 3)).norm() < 1e-12);
  CHECK_THROWS_AS(Spectral(GridSpec::reduced_1d(0, 1, 16, false)), Error);
}
