#include "mdwkb/scaling.hpp"

#include <string>

#include "mdwkb/core.hpp"

namespace mdwkb {

PhysicalScaling physical_to_dimensionless(const PhysicalConstants& k) {
  const std::pair<const char*, double> all[] = {{"hbar", k.hbar}, {"c", k.c}, {"eps0", k.eps0}, {"m", k.m}, {"e", k.e}};
  for (const auto& [name, v] : all)
    if (!(v > 0)) throw Error(ErrorKind::NonPositiveConstant, std::string(name) + " = " + std::to_string(v));
  PhysicalScaling s;
  s.constants = k;
  s.delta = k.hbar * k.c * k.eps0 / (k.e * k.e);
  s.ybar = k.e * k.e / (k.m * k.c * k.c * k.eps0);
  s.sbar = s.ybar / k.c;
  s.lambda_A = k.m * k.c / k.e;
  s.kappa_V = k.c * s.lambda_A;
  return s;
}

}  // namespace mdwkb
