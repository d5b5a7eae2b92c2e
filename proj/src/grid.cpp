#include "regscan/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "regscan/error.hpp"
#include "regscan/kernels.hpp"

namespace regscan {

Box3::Box3(Vec3 lo, Vec3 hi, Index3 n) : lo_(lo), hi_(hi), n_(n) {
  for (int a = 0; a < 3; ++a) {
    if (!(hi[a] > lo[a]) || !std::isfinite(lo[a]) || !std::isfinite(hi[a]))
      throw DomainError("box: hi must exceed lo on axis " + std::to_string(a));
    if (n[a] <= 0) throw DomainError("box: cell count must be positive on axis " + std::to_string(a));
  }
}

double Box3::max_spacing() const { return std::max({spacing(0), spacing(1), spacing(2)}); }

bool Box3::contains(const Vec3& x) const {
  for (int a = 0; a < 3; ++a)
    if (x[a] < lo_[a] || x[a] > hi_[a]) return false;
  return true;
}

std::size_t CellRange::count() const {
  if (empty()) return 0;
  return static_cast<std::size_t>(hi[0] - lo[0]) * static_cast<std::size_t>(hi[1] - lo[1]) *
         static_cast<std::size_t>(hi[2] - lo[2]);
}

double Ball::volume() const { return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius; }

std::pair<int, int> center_index_range(const Box3& box, int axis, double a, double b) {
  constexpr double snap = 1e-10;
  const double h = box.spacing(axis);
  // centre_i = lo + (i + 1/2) h lies in [a, b)  <=>  (a-lo)/h - 1/2 <= i < (b-lo)/h - 1/2
  const double ta = (a - box.lo()[axis]) / h - 0.5;
  const double tb = (b - box.lo()[axis]) / h - 0.5;
  const double n = box.n()[axis];
  const double i0 = std::clamp(std::ceil(ta - snap), 0.0, n);
  const double i1 = std::clamp(std::ceil(tb - snap), 0.0, n);
  return {static_cast<int>(i0), static_cast<int>(std::max(i0, i1))};
}

CellRange bounding_cells(const Box3& box, const Region& region) {
  CellRange out;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        for (int a = 0; a < 3; ++a) {
          std::pair<int, int> span;
          if constexpr (std::is_same_v<T, Ball>) {
            // open ball: pad by one cell, exact test happens per cell
            const double h = box.spacing(a);
            span = center_index_range(box, a, r.center[a] - r.radius - h, r.center[a] + r.radius + h);
          } else if constexpr (std::is_same_v<T, CubeRegion>) {
            span = center_index_range(box, a, r.corner[a], r.corner[a] + r.side);
          } else {
            span = center_index_range(box, a, r.lo[a], r.hi[a]);
          }
          out.lo[a] = span.first;
          out.hi[a] = span.second;
        }
      },
      region);
  return out;
}

bool region_contains(const Region& region, const Vec3& x) {
  return std::visit(
      [&](const auto& r) -> bool {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Ball>) {
          const Vec3 d = x - r.center;
          return dot(d, d) < r.radius * r.radius;
        } else if constexpr (std::is_same_v<T, CubeRegion>) {
          for (int a = 0; a < 3; ++a)
            if (x[a] < r.corner[a] || x[a] >= r.corner[a] + r.side) return false;
          return true;
        } else {
          for (int a = 0; a < 3; ++a)
            if (x[a] < r.lo[a] || x[a] >= r.hi[a]) return false;
          return true;
        }
      },
      region);
}

ScalarGrid::ScalarGrid(const Box3& box, std::vector<double> data) : box_(box), data_(std::move(data)) {
  if (data_.size() != box_.size())
    throw DomainError("scalar grid: data length " + std::to_string(data_.size()) + " does not match " +
                      std::to_string(box_.size()) + " cells");
}

bool ScalarGrid::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

VectorGrid::VectorGrid(const Box3& box) : box_(box) {
  for (auto& c : comp_) c.assign(box.size(), 0.0);
}

VectorGrid::VectorGrid(const Box3& box, std::array<std::vector<double>, 3> components)
    : box_(box), comp_(std::move(components)) {
  for (const auto& c : comp_)
    if (c.size() != box_.size()) throw DomainError("vector grid: component length does not match the box");
}

ScalarGrid VectorGrid::magnitude() const {
  ScalarGrid out(box_);
  kernels::magnitude(*this, out.data());
  return out;
}

bool VectorGrid::all_finite() const {
  for (const auto& c : comp_)
    if (!std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v); })) return false;
  return true;
}

SpaceTimeField::SpaceTimeField(std::vector<double> times, std::vector<VectorGrid> frames)
    : times_(std::move(times)), frames_(std::move(frames)) {
  if (frames_.empty()) throw DomainError("space-time field: no frames");
  if (frames_.size() != times_.size()) throw DomainError("space-time field: one time per frame required");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (!(times_[i] > times_[i - 1])) throw DomainError("space-time field: times must be strictly increasing");
  for (const auto& f : frames_)
    if (!(f.box() == frames_.front().box())) throw DomainError("space-time field: frames must share one box");
}

bool SpaceTimeField::covers(double t0, double t1) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(times_.back()) + std::abs(times_.front()));
  return t0 >= times_.front() - tol && t1 <= times_.back() + tol;
}

VectorGrid SpaceTimeField::frame_at(double t) const {
  if (!covers(t, t)) throw DomainError("space-time field: time " + std::to_string(t) + " outside sampled range");
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it != times_.end() && *it == t) return frames_[static_cast<std::size_t>(it - times_.begin())];
  if (it == times_.begin()) return frames_.front();
  if (it == times_.end()) return frames_.back();
  const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
  VectorGrid out(box());
  for (int c = 0; c < 3; ++c) {
    const auto a = frames_[lo].component(c);
    const auto b = frames_[hi].component(c);
    auto o = out.component(c);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = (1.0 - w) * a[i] + w * b[i];
  }
  return out;
}

SpaceTimeField SpaceTimeField::stationary(const VectorGrid& frame, double t) { return SpaceTimeField({t}, {frame}); }

MeasureResult region_measure(const ScalarGrid& g, const Region& region, double h) {
  const Box3& box = g.box();
  const CellRange range = bounding_cells(box, region);
  MeasureResult out;
  std::uint64_t inside = 0;
  std::uint64_t above = 0;
  if (const auto* ball = std::get_if<Ball>(&region)) {
    inside = kernels::count_above(std::vector<double>(box.size(), 1.0), box, range, 0.0, ball);
    above = kernels::count_above(g.data(), box, range, h, ball);
  } else {
    inside = range.count();
    above = kernels::count_above(g.data(), box, range, h, nullptr);
  }
  out.disjoint = inside == 0;
  out.cells = above;
  out.volume = static_cast<double>(above) * box.cell_volume();
  return out;
}

SpaceTimeField restrict_to_cylinder(const SpaceTimeField& f, const Cylinder& c) {
  if (!(c.r > 0.0)) throw DomainError("cylinder radius must be positive");
  const double t_lo = c.t_begin();
  std::vector<double> times;
  std::vector<VectorGrid> frames;
  const Box3& box = f.box();
  const Ball ball = c.ball();
  const CellRange range = bounding_cells(box, ball);
  std::size_t inside = 0;
  for (int k = range.lo[2]; k < range.hi[2]; ++k)
    for (int j = range.lo[1]; j < range.hi[1]; ++j)
      for (int i = range.lo[0]; i < range.hi[0]; ++i)
        if (region_contains(ball, box.center(i, j, k))) ++inside;
  for (std::size_t n = 0; n < f.size(); ++n) {
    const double t = f.times()[n];
    if (!(t > t_lo && t <= c.t0)) continue;
    VectorGrid g(box);
    for (int k = range.lo[2]; k < range.hi[2]; ++k)
      for (int j = range.lo[1]; j < range.hi[1]; ++j)
        for (int i = range.lo[0]; i < range.hi[0]; ++i) {
          if (!region_contains(ball, box.center(i, j, k))) continue;
          for (int a = 0; a < 3; ++a) g(a, i, j, k) = f.frame(n)(a, i, j, k);
        }
    times.push_back(t);
    frames.push_back(std::move(g));
  }
  if (frames.empty() || inside == 0) throw DomainError("empty region: cylinder does not overlap the field");
  return SpaceTimeField(std::move(times), std::move(frames));
}

namespace {

// d/dx_axis of one component at cell (i,j,k).
inline double diff(std::span<const double> v, const Box3& box, int axis, int i, int j, int k) {
  const Index3 n = box.n();
  Index3 idx{i, j, k};
  const double h = box.spacing(axis);
  auto val = [&](int s) {
    Index3 q = idx;
    q[axis] = s;
    return v[box.index(q[0], q[1], q[2])];
  };
  const int m = idx[axis];
  if (m == 0) return (-3.0 * val(0) + 4.0 * val(1) - val(2)) / (2.0 * h);
  if (m == n[axis] - 1) return (3.0 * val(m) - 4.0 * val(m - 1) + val(m - 2)) / (2.0 * h);
  return (val(m + 1) - val(m - 1)) / (2.0 * h);
}

void require_gradient_size(const Box3& box) {
  for (int a = 0; a < 3; ++a)
    if (box.n()[a] < 3) throw DomainError("gradient: grid too small (need at least 3 cells per axis)");
}

}  // namespace

TensorGrid gradient(const VectorGrid& g) {
  const Box3& box = g.box();
  require_gradient_size(box);
  TensorGrid out;
  out.box = box;
  for (auto& row : out.d)
    for (auto& c : row) c.assign(box.size(), 0.0);
  const Index3 n = box.n();
#pragma omp parallel for schedule(static)
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const std::size_t idx = box.index(i, j, k);
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) out.d[a][b][idx] = diff(g.component(a), box, b, i, j, k);
      }
  return out;
}

VectorGrid gradient(const ScalarGrid& g) {
  const Box3& box = g.box();
  require_gradient_size(box);
  VectorGrid out(box);
  const Index3 n = box.n();
#pragma omp parallel for schedule(static)
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i)
        for (int b = 0; b < 3; ++b) out(b, i, j, k) = diff(g.data(), box, b, i, j, k);
  return out;
}

}  // namespace regscan
