#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "regscan/grid.hpp"

// Cell-sweep kernels shared by the analyzers. Every kernel has a plain serial
// reference path and an OpenMP path. The OpenMP path reduces over fixed z-slabs
// in slab order, so its result does not depend on the thread count.
namespace regscan::kernels {

enum class Exec { serial, parallel };

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      carry += (sum - t) + x;
    else
      carry += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

// sum |v|^p over the cells of `range` whose centres lie in `ball` (if given).
double power_sum(std::span<const double> values, const Box3& box, const CellRange& range, double p,
                 const Ball* ball, Exec exec = Exec::parallel);

// Number of cells in `range` (and `ball`, if given) with |v| > threshold.
std::uint64_t count_above(std::span<const double> values, const Box3& box, const CellRange& range,
                          double threshold, const Ball* ball, Exec exec = Exec::parallel);

// |u| per cell.
void magnitude(const VectorGrid& u, std::span<double> out, Exec exec = Exec::parallel);

// |v| sorted in descending order.
std::vector<double> sorted_abs_descending(std::span<const double> values, Exec exec = Exec::parallel);

// Inclusive 3D prefix counts of the indicator |v| > threshold, padded with a
// zero plane on each low face so that any cell range sums with 8 lookups.
class SummedAreaTable {
 public:
  SummedAreaTable() = default;
  SummedAreaTable(Index3 n, std::vector<std::uint32_t> table) : n_(n), t_(std::move(table)) {}

  std::uint64_t sum(const CellRange& r) const;
  std::uint64_t total() const { return sum({{0, 0, 0}, n_}); }
  const Index3& n() const { return n_; }

 private:
  std::uint32_t at(int i, int j, int k) const {
    return t_[static_cast<std::size_t>(i) +
              static_cast<std::size_t>(n_[0] + 1) *
                  (static_cast<std::size_t>(j) + static_cast<std::size_t>(n_[1] + 1) * static_cast<std::size_t>(k))];
  }
  Index3 n_{0, 0, 0};
  std::vector<std::uint32_t> t_;
};

SummedAreaTable summed_area_table(std::span<const double> values, const Box3& box, double threshold,
                                  Exec exec = Exec::parallel);

// Caps OpenMP threads from REGSCAN_THREADS when set; returns the active count.
int configure_threads_from_env();

}  // namespace regscan::kernels
