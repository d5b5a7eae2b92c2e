#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "regscan/grid.hpp"

namespace regscan::dyadic {

// Closed run [a, b] of x-indices.
struct Interval {
  int a = 0;
  int b = -1;
  bool operator==(const Interval&) const = default;
};

// A set of lattice indices j in Z^3, stored as sorted disjoint x-runs per
// (y, z) line. Lines live in a dense array over the set's y/z bounding range.
// Dilation, child and parent maps act separably, one axis at a time.
class CubeSet {
 public:
  CubeSet() = default;
  // Empty set whose lines cover y in [y0, y1], z in [z0, z1].
  CubeSet(int y0, int y1, int z0, int z1);
  // Every index in the inclusive box [lo, hi].
  static CubeSet box(const Index3& lo, const Index3& hi);

  bool empty() const;
  std::uint64_t count() const;
  bool contains(const Index3& j) const;

  int y0() const { return y0_; }
  int y1() const { return y0_ + ny_ - 1; }
  int z0() const { return z0_; }
  int z1() const { return z0_ + nz_ - 1; }
  const std::vector<Interval>& line(int y, int z) const;
  std::vector<Interval>& line(int y, int z);

  // Index bounding box of the members; false when empty.
  bool bounds(Index3& lo, Index3& hi) const;

  // All j' with |j' - j|_inf <= m for some member j.
  CubeSet dilate(int m) const;
  // All i with 2 j <= i <= 2 j + m per axis for some member j.
  CubeSet children(int m) const;
  // All j with 2 j <= i <= 2 j + m per axis for some member i.
  CubeSet parents(int m) const;
  CubeSet intersect(const CubeSet& o) const;
  CubeSet clip(const Index3& lo, const Index3& hi) const;
  CubeSet filter(const std::function<bool(int, int, int)>& keep) const;

  // Visits (y, z, run) in z-major, y-minor, ascending x order.
  void for_each_run(const std::function<void(int, int, const Interval&)>& f) const;
  std::vector<Index3> members() const;

  // Adds an x-run to a line inside the bounding range, keeping runs sorted
  // and merged.
  void insert(int y, int z, Interval run);

  bool operator==(const CubeSet& o) const;

 private:
  std::size_t slot(int y, int z) const {
    return static_cast<std::size_t>(y - y0_) + static_cast<std::size_t>(ny_) * static_cast<std::size_t>(z - z0_);
  }
  bool in_range(int y, int z) const { return y >= y0_ && y < y0_ + ny_ && z >= z0_ && z < z0_ + nz_; }

  int y0_ = 0, ny_ = 0, z0_ = 0, nz_ = 0;
  std::vector<std::vector<Interval>> lines_;
};

// Sorts and merges runs that overlap or touch.
void normalize(std::vector<Interval>& runs);

}  // namespace regscan::dyadic
