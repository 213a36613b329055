#pragma once

#include "mdwkb/grid.hpp"

namespace mdwkb {

/// Principal amplitudes riding e^{+i phi/eps} (plus, range of Pi_+(grad phi))
/// and e^{-i phi/eps} (minus, range of Pi_-(-grad phi)).
struct AmplitudePair {
  SpinorArray plus;
  SpinorArray minus;
  double time = 0.0;
  /// Largest component removed by the last re-projection.
  double polarization_defect = 0.0;

  static AmplitudePair zeros(std::size_t n) {
    return {SpinorArray::Zero(4, static_cast<Eigen::Index>(n)), SpinorArray::Zero(4, static_cast<Eigen::Index>(n)), 0.0, 0.0};
  }
  Eigen::Index size() const { return plus.cols(); }
};

}  // namespace mdwkb
