#include "mdwkb/grid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

namespace mdwkb {

GridSpec GridSpec::reduced_1d(double lo, double hi, int n, bool periodic) {
  GridSpec g;
  g.mode = DimMode::Reduced1d;
  g.lo = {lo, 0, 0};
  g.hi = {hi, 0, 0};
  g.points = {n, 1, 1};
  g.periodic = {periodic, true, true};
  return g;
}

GridSpec GridSpec::full_3d(double lo, double hi, int n, bool periodic) {
  GridSpec g;
  g.mode = DimMode::Full3d;
  g.lo = {lo, lo, lo};
  g.hi = {hi, hi, hi};
  g.points = {n, n, n};
  g.periodic = {periodic, periodic, periodic};
  return g;
}

double GridSpec::spacing(int axis) const {
  if (axis >= active_axes()) return 1.0;
  const double len = hi[axis] - lo[axis];
  return periodic[axis] ? len / points[axis] : len / (points[axis] - 1);
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < active_axes(); ++a) v *= spacing(a);
  return v;
}

std::array<int, 3> GridSpec::unravel(std::size_t idx) const {
  const int i = static_cast<int>(idx % static_cast<std::size_t>(points[0]));
  idx /= static_cast<std::size_t>(points[0]);
  const int j = static_cast<int>(idx % static_cast<std::size_t>(points[1]));
  const int k = static_cast<int>(idx / static_cast<std::size_t>(points[1]));
  return {i, j, k};
}

Vec3 GridSpec::node(int i, int j, int k) const {
  Vec3 x = Vec3::Zero();
  const std::array<int, 3> ijk{i, j, k};
  for (int a = 0; a < active_axes(); ++a) x(a) = lo[a] + ijk[a] * spacing(a);
  return x;
}

Vec3 GridSpec::node(std::size_t idx) const {
  const auto ijk = unravel(idx);
  return node(ijk[0], ijk[1], ijk[2]);
}

void GridSpec::validate() const {
  for (int a = 0; a < active_axes(); ++a) {
    if (points[a] < 8) throw Error(ErrorKind::InvalidArgument, "grid needs >= 8 points per active axis");
    if (!(lo[a] < hi[a])) throw Error(ErrorKind::InvalidArgument, "grid extents need min < max");
  }
  if (mode == DimMode::Reduced1d && (points[1] != 1 || points[2] != 1))
    throw Error(ErrorKind::InvalidArgument, "reduced-1d grid must have a single point on axes 1 and 2");
}

namespace {
std::atomic<int> g_threads{1};
}

int default_threads() { return g_threads.load(); }
void set_default_threads(int threads) { g_threads.store(std::max(1, threads)); }

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t)>& body) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2048) {
    body(0, n);
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t b = n * c / chunks, e = n * (c + 1) / chunks;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  for (auto& t : pool) t.join();
}

namespace {

// Neighbour index along `axis` at offset `off`; returns false when the
// neighbour falls outside a non-periodic axis.
bool neighbour(const GridSpec& g, std::array<int, 3> ijk, int axis, int off, std::size_t& out) {
  int v = ijk[axis] + off;
  const int n = g.points[axis];
  if (g.periodic[axis]) {
    v = ((v % n) + n) % n;
  } else if (v < 0 || v >= n) {
    return false;
  }
  ijk[axis] = v;
  out = g.index(ijk[0], ijk[1], ijk[2]);
  return true;
}

template <typename Get, typename T>
T derivative_at(const GridSpec& g, std::size_t idx, int axis, Get get, T zero) {
  const auto ijk = g.unravel(idx);
  const double h = g.spacing(axis);
  std::size_t m2 = 0, m1 = 0, p1 = 0, p2 = 0;
  const bool hm2 = neighbour(g, ijk, axis, -2, m2), hm1 = neighbour(g, ijk, axis, -1, m1);
  const bool hp1 = neighbour(g, ijk, axis, 1, p1), hp2 = neighbour(g, ijk, axis, 2, p2);
  if (hm2 && hm1 && hp1 && hp2) return (get(m2) - 8.0 * get(m1) + 8.0 * get(p1) - get(p2)) / (12.0 * h);
  if (hm1 && hp1) return (get(p1) - get(m1)) / (2.0 * h);
  if (hp1 && hp2) return (-3.0 * get(idx) + 4.0 * get(p1) - get(p2)) / (2.0 * h);
  if (hm1 && hm2) return (3.0 * get(idx) - 4.0 * get(m1) + get(m2)) / (2.0 * h);
  return zero;
}

}  // namespace

RealField derivative(const GridSpec& g, const RealField& f, int axis) {
  RealField out(f.size());
  if (axis >= g.active_axes()) return RealField::Zero(f.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    out(static_cast<Eigen::Index>(i)) =
        derivative_at(g, i, axis, [&](std::size_t j) { return f(static_cast<Eigen::Index>(j)); }, 0.0);
  return out;
}

SpinorArray derivative(const GridSpec& g, const SpinorArray& f, int axis) {
  SpinorArray out(4, f.cols());
  if (axis >= g.active_axes()) return SpinorArray::Zero(4, f.cols());
  for (std::size_t i = 0; i < g.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = derivative_at(
        g, i, axis, [&](std::size_t j) -> Spinor { return f.col(static_cast<Eigen::Index>(j)); },
        Spinor(Spinor::Zero()));
  return out;
}

RealField divergence(const GridSpec& g, const VectorField& v) {
  RealField out = RealField::Zero(v.cols());
  for (int a = 0; a < g.active_axes(); ++a) {
    const RealField comp = v.row(a).transpose().array();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto ijk = g.unravel(i);
      std::size_t m, p;
      const bool hm = neighbour(g, ijk, a, -1, m), hp = neighbour(g, ijk, a, 1, p);
      const double h = g.spacing(a);
      const auto ii = static_cast<Eigen::Index>(i);
      if (hm && hp)
        out(ii) += (comp(static_cast<Eigen::Index>(p)) - comp(static_cast<Eigen::Index>(m))) / (2 * h);
      else if (hp)
        out(ii) += (comp(static_cast<Eigen::Index>(p)) - comp(ii)) / h;
      else if (hm)
        out(ii) += (comp(ii) - comp(static_cast<Eigen::Index>(m))) / h;
    }
  }
  return out;
}

namespace {

// Stencil nodes and Lagrange weights along one axis.
struct AxisStencil {
  std::array<int, 4> idx{};
  std::array<double, 4> w{};
  int count = 1;
};

AxisStencil axis_stencil(const GridSpec& g, int axis, double x) {
  AxisStencil s;
  if (axis >= g.active_axes()) {
    s.idx[0] = 0;
    s.w[0] = 1.0;
    return s;
  }
  const int n = g.points[axis];
  const double h = g.spacing(axis);
  const double u = (x - g.lo[axis]) / h;
  int base = static_cast<int>(std::floor(u)) - 1;
  if (!g.periodic[axis]) base = std::clamp(base, 0, n - 4);
  const double t = u - base;  // position relative to stencil node 0, nominally in [1, 2)
  s.count = 4;
  for (int m = 0; m < 4; ++m) {
    double w = 1.0;
    for (int q = 0; q < 4; ++q)
      if (q != m) w *= (t - q) / double(m - q);
    s.w[m] = w;
    int v = base + m;
    if (g.periodic[axis]) v = ((v % n) + n) % n;
    s.idx[m] = v;
  }
  return s;
}

template <typename T, typename Get>
T interpolate_impl(const GridSpec& g, const Vec3& x, Get get, T acc) {
  const AxisStencil sx = axis_stencil(g, 0, x(0));
  const AxisStencil sy = axis_stencil(g, 1, x(1));
  const AxisStencil sz = axis_stencil(g, 2, x(2));
  for (int c = 0; c < sz.count; ++c)
    for (int b = 0; b < sy.count; ++b) {
      const double wyz = sy.w[b] * sz.w[c];
      for (int a = 0; a < sx.count; ++a)
        acc += get(g.index(sx.idx[a], sy.idx[b], sz.idx[c])) * (sx.w[a] * wyz);
    }
  return acc;
}

}  // namespace

double interpolate(const GridSpec& g, const RealField& f, const Vec3& x) {
  return interpolate_impl(g, x, [&](std::size_t i) { return f(static_cast<Eigen::Index>(i)); }, 0.0);
}

Spinor interpolate(const GridSpec& g, const SpinorArray& f, const Vec3& x) {
  return interpolate_impl(
      g, x, [&](std::size_t i) -> Spinor { return f.col(static_cast<Eigen::Index>(i)); },
      Spinor(Spinor::Zero()));
}

Vec3 interpolate(const GridSpec& g, const VectorField& f, const Vec3& x) {
  return interpolate_impl(
      g, x, [&](std::size_t i) -> Vec3 { return f.col(static_cast<Eigen::Index>(i)); }, Vec3(Vec3::Zero()));
}

double integrate(const GridSpec& g, const RealField& f) {
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto ijk = g.unravel(i);
    double w = 1.0;
    for (int a = 0; a < g.active_axes(); ++a)
      if (!g.periodic[a] && (ijk[a] == 0 || ijk[a] == g.points[a] - 1)) w *= 0.5;
    total += w * f(static_cast<Eigen::Index>(i));
  }
  return total * g.cell_volume();
}

RealField density(const SpinorArray& u) { return u.colwise().squaredNorm().transpose().array(); }

double norm2_squared(const GridSpec& g, const SpinorArray& f) { return integrate(g, density(f)); }

}  // namespace mdwkb
