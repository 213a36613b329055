#pragma once

#include <memory>
#include <vector>

#include "mdwkb/grid.hpp"

namespace mdwkb {

/// FFT over the active axes of a periodic grid (Eigen's FFT module).
/// Forward transform is unnormalized; inverse divides by the point count.
class Spectral {
 public:
  explicit Spectral(const GridSpec& grid);
  ~Spectral();
  Spectral(Spectral&&) noexcept;
  Spectral& operator=(Spectral&&) noexcept;

  const GridSpec& grid() const { return grid_; }

  /// Angular wave number of index i along `axis`.
  double wavenumber(int axis, int i) const { return k_[static_cast<std::size_t>(axis)][static_cast<std::size_t>(i)]; }
  /// Wave vector of flat index `idx`.
  Vec3 wavevector(std::size_t idx) const;

  void forward(ComplexField& f) const;
  void inverse(ComplexField& f) const;
  void forward(SpinorArray& f) const;
  void inverse(SpinorArray& f) const;

 private:
  void transform(ComplexField& f, bool inverse) const;

  GridSpec grid_;
  std::array<std::vector<double>, 3> k_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mdwkb
