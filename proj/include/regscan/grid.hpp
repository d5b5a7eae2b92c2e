#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace regscan {

using Vec3 = std::array<double, 3>;
using Index3 = std::array<int, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Axis-aligned box split into n[0] x n[1] x n[2] cells. Samples live at cell
// centres and are stored x-fastest.
class Box3 {
 public:
  Box3() = default;
  Box3(Vec3 lo, Vec3 hi, Index3 n);

  const Vec3& lo() const { return lo_; }
  const Vec3& hi() const { return hi_; }
  const Index3& n() const { return n_; }

  double spacing(int axis) const { return (hi_[axis] - lo_[axis]) / n_[axis]; }
  Vec3 spacing() const { return {spacing(0), spacing(1), spacing(2)}; }
  double max_spacing() const;
  double cell_volume() const { return spacing(0) * spacing(1) * spacing(2); }
  double volume() const { return (hi_[0] - lo_[0]) * (hi_[1] - lo_[1]) * (hi_[2] - lo_[2]); }
  std::size_t size() const {
    return static_cast<std::size_t>(n_[0]) * static_cast<std::size_t>(n_[1]) *
           static_cast<std::size_t>(n_[2]);
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(n_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(n_[1]) * static_cast<std::size_t>(k));
  }
  double center(int axis, int i) const { return lo_[axis] + (i + 0.5) * spacing(axis); }
  Vec3 center(int i, int j, int k) const { return {center(0, i), center(1, j), center(2, k)}; }
  bool contains(const Vec3& x) const;

  bool operator==(const Box3& o) const = default;

 private:
  Vec3 lo_{0, 0, 0};
  Vec3 hi_{1, 1, 1};
  Index3 n_{1, 1, 1};
};

// Half-open range of cell indices [lo, hi) per axis.
struct CellRange {
  Index3 lo{0, 0, 0};
  Index3 hi{0, 0, 0};

  bool empty() const { return hi[0] <= lo[0] || hi[1] <= lo[1] || hi[2] <= lo[2]; }
  std::size_t count() const;
  Index3 extent() const { return {hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]}; }
  static CellRange all(const Box3& box) { return {{0, 0, 0}, box.n()}; }
  bool operator==(const CellRange& o) const = default;
};

// Open ball B(center, radius).
struct Ball {
  Vec3 center{0, 0, 0};
  double radius = 1.0;
  double volume() const;
};

// Half-open cube [corner, corner + side)^3.
struct CubeRegion {
  Vec3 corner{0, 0, 0};
  double side = 1.0;
};

// Half-open axis-aligned box [lo, hi).
struct AxisBox {
  Vec3 lo{0, 0, 0};
  Vec3 hi{1, 1, 1};
};

using Region = std::variant<Ball, CubeRegion, AxisBox>;

// Cells whose centres lie in [a, b) along one axis, clamped to the grid.
// Centres within 1e-10 cell widths of an endpoint are snapped onto it so that
// adjacent half-open intervals partition the cells deterministically.
std::pair<int, int> center_index_range(const Box3& box, int axis, double a, double b);

// Smallest cell range containing every cell centre of the region.
CellRange bounding_cells(const Box3& box, const Region& region);

bool region_contains(const Region& region, const Vec3& x);

// Space-time cylinder Q(z0, r) = B(x0, r) x (t0 - r^2, t0).
struct Cylinder {
  Vec3 x0{0, 0, 0};
  double t0 = 0.0;
  double r = 1.0;

  Ball ball() const { return {x0, r}; }
  double t_begin() const { return t0 - r * r; }
};

class ScalarGrid {
 public:
  ScalarGrid() = default;
  explicit ScalarGrid(const Box3& box) : box_(box), data_(box.size(), 0.0) {}
  ScalarGrid(const Box3& box, std::vector<double> data);

  const Box3& box() const { return box_; }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  double& operator()(int i, int j, int k) { return data_[box_.index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[box_.index(i, j, k)]; }
  bool all_finite() const;

 private:
  Box3 box_;
  std::vector<double> data_;
};

class VectorGrid {
 public:
  VectorGrid() = default;
  explicit VectorGrid(const Box3& box);
  VectorGrid(const Box3& box, std::array<std::vector<double>, 3> components);

  const Box3& box() const { return box_; }
  std::span<const double> component(int c) const { return comp_[c]; }
  std::span<double> component(int c) { return comp_[c]; }
  double& operator()(int c, int i, int j, int k) { return comp_[c][box_.index(i, j, k)]; }
  double operator()(int c, int i, int j, int k) const { return comp_[c][box_.index(i, j, k)]; }
  Vec3 at(std::size_t idx) const { return {comp_[0][idx], comp_[1][idx], comp_[2][idx]}; }

  ScalarGrid scalar(int c) const { return ScalarGrid(box_, comp_[c]); }
  ScalarGrid magnitude() const;
  bool all_finite() const;

 private:
  Box3 box_;
  std::array<std::vector<double>, 3> comp_;
};

// d[a][b] = d u_a / d x_b at cell centres.
struct TensorGrid {
  Box3 box;
  std::array<std::array<std::vector<double>, 3>, 3> d;
};

// Time-indexed sequence of frames sharing one box.
class SpaceTimeField {
 public:
  SpaceTimeField() = default;
  SpaceTimeField(std::vector<double> times, std::vector<VectorGrid> frames);

  const Box3& box() const { return frames_.front().box(); }
  std::span<const double> times() const { return times_; }
  const std::vector<VectorGrid>& frames() const { return frames_; }
  std::size_t size() const { return frames_.size(); }
  const VectorGrid& frame(std::size_t i) const { return frames_[i]; }

  // Linear interpolation in time; exact copy when t hits a frame time.
  VectorGrid frame_at(double t) const;
  bool covers(double t0, double t1) const;

  // Wraps a single frame as a field with one time.
  static SpaceTimeField stationary(const VectorGrid& frame, double t = 0.0);

 private:
  std::vector<double> times_;
  std::vector<VectorGrid> frames_;
};

struct MeasureResult {
  double volume = 0.0;
  std::size_t cells = 0;
  bool disjoint = false;  // region misses every cell centre of the box
};

// m{x in region : |g(x)| > h}, cell-centre membership, times cell volume.
MeasureResult region_measure(const ScalarGrid& g, const Region& region, double h);

// Frames with times in (t0 - r^2, t0]; values outside B(x0, r) set to zero.
SpaceTimeField restrict_to_cylinder(const SpaceTimeField& f, const Cylinder& c);

// Central differences in the interior, second-order one-sided on faces.
TensorGrid gradient(const VectorGrid& g);

// Same stencils for a scalar, returned as a vector field.
VectorGrid gradient(const ScalarGrid& g);

}  // namespace regscan
