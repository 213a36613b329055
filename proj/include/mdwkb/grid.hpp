#pragma once

#include <array>
#include <cstddef>
#include <functional>

#include "mdwkb/core.hpp"

namespace mdwkb {

enum class DimMode { Reduced1d, Full3d };

/// Tensor-product grid. In Reduced1d mode fields vary along axis 0 only
/// (points = {n, 1, 1}); spinors keep four components and vectors three.
///
/// Periodic axes exclude the right endpoint (spacing = length / n);
/// non-periodic axes include it (spacing = length / (n - 1)).
struct GridSpec {
  DimMode mode = DimMode::Reduced1d;
  std::array<double, 3> lo{-1, 0, 0};
  std::array<double, 3> hi{1, 0, 0};
  std::array<int, 3> points{64, 1, 1};
  std::array<bool, 3> periodic{true, true, true};

  static GridSpec reduced_1d(double lo, double hi, int n, bool periodic = true);
  static GridSpec full_3d(double lo, double hi, int n, bool periodic = true);

  int active_axes() const { return mode == DimMode::Reduced1d ? 1 : 3; }
  std::size_t size() const {
    return static_cast<std::size_t>(points[0]) * static_cast<std::size_t>(points[1]) *
           static_cast<std::size_t>(points[2]);
  }
  double spacing(int axis) const;
  double cell_volume() const;
  double length(int axis) const { return hi[axis] - lo[axis]; }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(points[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(points[1]) * static_cast<std::size_t>(k));
  }
  std::array<int, 3> unravel(std::size_t idx) const;
  Vec3 node(std::size_t idx) const;
  Vec3 node(int i, int j, int k) const;

  /// Throws InvalidArgument unless points >= 8 on active axes and lo < hi.
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

/// Runs body(begin, end) over a static partition of [0, n) into at most
/// `threads` contiguous chunks. Partition depends only on (n, threads).
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t)>& body);

/// Global cap used by modules that do not take an explicit thread count.
int default_threads();
void set_default_threads(int threads);

/// Fourth-order centered first derivative along `axis` (second order at
/// non-periodic edges). Works for any column-stored field type.
RealField derivative(const GridSpec& grid, const RealField& f, int axis);
SpinorArray derivative(const GridSpec& grid, const SpinorArray& f, int axis);

/// Second-order centered divergence of a vector field.
RealField divergence(const GridSpec& grid, const VectorField& v);

/// Local cubic (4-point Lagrange per active axis) interpolation of a field at
/// an arbitrary point. Periodic axes wrap; non-periodic axes clamp the stencil.
double interpolate(const GridSpec& grid, const RealField& f, const Vec3& x);
Spinor interpolate(const GridSpec& grid, const SpinorArray& f, const Vec3& x);
Vec3 interpolate(const GridSpec& grid, const VectorField& f, const Vec3& x);

/// Integral over the grid (trapezoid on periodic / uniform weights).
double integrate(const GridSpec& grid, const RealField& f);
double norm2_squared(const GridSpec& grid, const SpinorArray& f);

/// Pointwise |u|^2 of a spinor field.
RealField density(const SpinorArray& u);

}  // namespace mdwkb
