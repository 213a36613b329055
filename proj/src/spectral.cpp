#include "mdwkb/spectral.hpp"

#include <unsupported/Eigen/FFT>

namespace mdwkb {

struct Spectral::Impl {
  mutable Eigen::FFT<double> fft;
};

Spectral::Spectral(const GridSpec& grid) : grid_(grid), impl_(std::make_unique<Impl>()) {
  for (int a = 0; a < 3; ++a) {
    const int n = grid.points[a];
    k_[a].assign(static_cast<std::size_t>(n), 0.0);
    if (a >= grid.active_axes()) continue;
    if (!grid.periodic[a]) throw Error(ErrorKind::InvalidArgument, "spectral transform needs a periodic grid");
    const double dk = 2 * kPi / grid.length(a);
    for (int i = 0; i < n; ++i) k_[a][static_cast<std::size_t>(i)] = dk * (i < (n + 1) / 2 ? i : i - n);
  }
  impl_->fft.SetFlag(Eigen::FFT<double>::Unscaled);
}

Spectral::~Spectral() = default;
Spectral::Spectral(Spectral&&) noexcept = default;
Spectral& Spectral::operator=(Spectral&&) noexcept = default;

Vec3 Spectral::wavevector(std::size_t idx) const {
  const auto ijk = grid_.unravel(idx);
  return Vec3(k_[0][static_cast<std::size_t>(ijk[0])], k_[1][static_cast<std::size_t>(ijk[1])],
              k_[2][static_cast<std::size_t>(ijk[2])]);
}

void Spectral::transform(ComplexField& f, bool inverse) const {
  std::vector<cplx> in, out;
  for (int a = 0; a < grid_.active_axes(); ++a) {
    const int n = grid_.points[a];
    in.resize(static_cast<std::size_t>(n));
    // Lines along axis a: iterate over the other two indices.
    const int o1 = (a + 1) % 3, o2 = (a + 2) % 3;
    for (int p = 0; p < grid_.points[o1]; ++p)
      for (int q = 0; q < grid_.points[o2]; ++q) {
        std::array<int, 3> ijk{};
        ijk[o1] = p;
        ijk[o2] = q;
        for (int i = 0; i < n; ++i) {
          ijk[a] = i;
          in[static_cast<std::size_t>(i)] = f(static_cast<Eigen::Index>(grid_.index(ijk[0], ijk[1], ijk[2])));
        }
        if (inverse)
          impl_->fft.inv(out, in);
        else
          impl_->fft.fwd(out, in);
        for (int i = 0; i < n; ++i) {
          ijk[a] = i;
          f(static_cast<Eigen::Index>(grid_.index(ijk[0], ijk[1], ijk[2]))) = out[static_cast<std::size_t>(i)];
        }
      }
  }
  if (inverse) f /= static_cast<double>(grid_.size());
}

void Spectral::forward(ComplexField& f) const { transform(f, false); }
void Spectral::inverse(ComplexField& f) const { transform(f, true); }

void Spectral::forward(SpinorArray& f) const {
  for (int c = 0; c < 4; ++c) {
    ComplexField row = f.row(c).transpose().array();
    transform(row, false);
    f.row(c) = row.matrix().transpose();
  }
}

void Spectral::inverse(SpinorArray& f) const {
  for (int c = 0; c < 4; ++c) {
    ComplexField row = f.row(c).transpose().array();
    transform(row, true);
    f.row(c) = row.matrix().transpose();
  }
}

}  // namespace mdwkb
