#include "regscan/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <parallel/algorithm>
#include <string>

namespace regscan::kernels {
namespace {

// Ball membership restricted to one x-line: returns [i0, i1) of centres inside.
// Falls back to the full range when no ball is given.
std::pair<int, int> line_span(const Box3& box, const CellRange& range, const Ball* ball, int j, int k) {
  if (ball == nullptr) return {range.lo[0], range.hi[0]};
  const double dy = box.center(1, j) - ball->center[1];
  const double dz = box.center(2, k) - ball->center[2];
  const double rem = ball->radius * ball->radius - dy * dy - dz * dz;
  if (rem <= 0.0) return {0, 0};
  const double half = std::sqrt(rem);
  // Open ball: centre x must satisfy |x - cx| < half. Scan a one-cell margin
  // around the analytic interval and test membership exactly.
  const double hx = box.spacing(0);
  int i0 = static_cast<int>(std::floor((ball->center[0] - half - box.lo()[0]) / hx - 0.5)) - 1;
  int i1 = static_cast<int>(std::ceil((ball->center[0] + half - box.lo()[0]) / hx - 0.5)) + 2;
  i0 = std::max(i0, range.lo[0]);
  i1 = std::min(i1, range.hi[0]);
  const double r2 = ball->radius * ball->radius;
  while (i0 < i1) {
    const double dx = box.center(0, i0) - ball->center[0];
    if (dx * dx + dy * dy + dz * dz < r2) break;
    ++i0;
  }
  while (i1 > i0) {
    const double dx = box.center(0, i1 - 1) - ball->center[0];
    if (dx * dx + dy * dy + dz * dz < r2) break;
    --i1;
  }
  return {i0, i1};
}

inline double abs_pow(double v, double p) {
  const double a = std::abs(v);
  if (p == 2.0) return a * a;
  if (p == 3.0) return a * a * a;
  if (p == 4.0) return (a * a) * (a * a);
  if (p == 6.0) {
    const double a3 = a * a * a;
    return a3 * a3;
  }
  if (p == 1.0) return a;
  return std::pow(a, p);
}

}  // namespace

double power_sum(std::span<const double> values, const Box3& box, const CellRange& range, double p,
                 const Ball* ball, Exec exec) {
  if (range.empty()) return 0.0;
  if (exec == Exec::serial) {
    CompensatedSum acc;
    for (int k = range.lo[2]; k < range.hi[2]; ++k)
      for (int j = range.lo[1]; j < range.hi[1]; ++j) {
        const auto [i0, i1] = line_span(box, range, ball, j, k);
        for (int i = i0; i < i1; ++i) acc.add(abs_pow(values[box.index(i, j, k)], p));
      }
    return acc.value();
  }
  const int nk = range.hi[2] - range.lo[2];
  std::vector<CompensatedSum> slab(static_cast<std::size_t>(nk));
#pragma omp parallel for schedule(static)
  for (int kk = 0; kk < nk; ++kk) {
    const int k = range.lo[2] + kk;
    CompensatedSum acc;
    for (int j = range.lo[1]; j < range.hi[1]; ++j) {
      const auto [i0, i1] = line_span(box, range, ball, j, k);
      for (int i = i0; i < i1; ++i) acc.add(abs_pow(values[box.index(i, j, k)], p));
    }
    slab[kk] = acc;
  }
  CompensatedSum total;
  for (const auto& s : slab) {
    total.add(s.sum);
    total.add(s.carry);
  }
  return total.value();
}

std::uint64_t count_above(std::span<const double> values, const Box3& box, const CellRange& range,
                          double threshold, const Ball* ball, Exec exec) {
  if (range.empty()) return 0;
  if (exec == Exec::serial) {
    std::uint64_t count = 0;
    for (int k = range.lo[2]; k < range.hi[2]; ++k)
      for (int j = range.lo[1]; j < range.hi[1]; ++j) {
        const auto [i0, i1] = line_span(box, range, ball, j, k);
        for (int i = i0; i < i1; ++i)
          if (std::abs(values[box.index(i, j, k)]) > threshold) ++count;
      }
    return count;
  }
  std::uint64_t count = 0;
#pragma omp parallel for schedule(static) reduction(+ : count)
  for (int k = range.lo[2]; k < range.hi[2]; ++k)
    for (int j = range.lo[1]; j < range.hi[1]; ++j) {
      const auto [i0, i1] = line_span(box, range, ball, j, k);
      for (int i = i0; i < i1; ++i)
        if (std::abs(values[box.index(i, j, k)]) > threshold) ++count;
    }
  return count;
}

void magnitude(const VectorGrid& u, std::span<double> out, Exec exec) {
  const auto ux = u.component(0);
  const auto uy = u.component(1);
  const auto uz = u.component(2);
  const auto n = static_cast<std::int64_t>(out.size());
  if (exec == Exec::serial) {
    for (std::int64_t i = 0; i < n; ++i) out[i] = std::sqrt(ux[i] * ux[i] + uy[i] * uy[i] + uz[i] * uz[i]);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = std::sqrt(ux[i] * ux[i] + uy[i] * uy[i] + uz[i] * uz[i]);
}

std::vector<double> sorted_abs_descending(std::span<const double> values, Exec exec) {
  std::vector<double> v(values.size());
  std::transform(values.begin(), values.end(), v.begin(), [](double x) { return std::abs(x); });
  if (exec == Exec::serial)
    std::sort(v.begin(), v.end(), std::greater<>());
  else
    __gnu_parallel::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

std::uint64_t SummedAreaTable::sum(const CellRange& r) const {
  if (r.empty()) return 0;
  const int x0 = r.lo[0], y0 = r.lo[1], z0 = r.lo[2];
  const int x1 = r.hi[0], y1 = r.hi[1], z1 = r.hi[2];
  const std::int64_t s = static_cast<std::int64_t>(at(x1, y1, z1)) - at(x0, y1, z1) - at(x1, y0, z1) -
                         at(x1, y1, z0) + at(x0, y0, z1) + at(x0, y1, z0) + at(x1, y0, z0) - at(x0, y0, z0);
  return static_cast<std::uint64_t>(s);
}

SummedAreaTable summed_area_table(std::span<const double> values, const Box3& box, double threshold, Exec exec) {
  const Index3 n = box.n();
  const std::size_t sx = n[0] + 1, sy = n[1] + 1, sz = n[2] + 1;
  std::vector<std::uint32_t> t(sx * sy * sz, 0u);
  auto at = [&](int i, int j, int k) -> std::uint32_t& {
    return t[static_cast<std::size_t>(i) + sx * (static_cast<std::size_t>(j) + sy * static_cast<std::size_t>(k))];
  };
  if (exec == Exec::serial) {
    for (int k = 1; k <= n[2]; ++k)
      for (int j = 1; j <= n[1]; ++j)
        for (int i = 1; i <= n[0]; ++i) {
          const std::uint32_t ind = std::abs(values[box.index(i - 1, j - 1, k - 1)]) > threshold ? 1u : 0u;
          at(i, j, k) = ind + at(i - 1, j, k) + at(i, j - 1, k) + at(i, j, k - 1) - at(i - 1, j - 1, k) -
                        at(i - 1, j, k - 1) - at(i, j - 1, k - 1) + at(i - 1, j - 1, k - 1);
        }
    return {n, std::move(t)};
  }
  // Separable passes: x prefix per line, then y, then z. Each pass is
  // independent across the other two axes.
#pragma omp parallel for schedule(static)
  for (int k = 1; k <= n[2]; ++k)
    for (int j = 1; j <= n[1]; ++j) {
      std::uint32_t run = 0;
      for (int i = 1; i <= n[0]; ++i) {
        run += std::abs(values[box.index(i - 1, j - 1, k - 1)]) > threshold ? 1u : 0u;
        at(i, j, k) = run;
      }
    }
#pragma omp parallel for schedule(static)
  for (int k = 1; k <= n[2]; ++k)
    for (int j = 2; j <= n[1]; ++j)
      for (int i = 1; i <= n[0]; ++i) at(i, j, k) += at(i, j - 1, k);
#pragma omp parallel for schedule(static)
  for (int j = 1; j <= n[1]; ++j)
    for (int k = 2; k <= n[2]; ++k)
      for (int i = 1; i <= n[0]; ++i) at(i, j, k) += at(i, j, k - 1);
  return {n, std::move(t)};
}

int configure_threads_from_env() {
  if (const char* env = std::getenv("REGSCAN_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0) omp_set_num_threads(cap);
    } catch (const std::exception&) {
      // ignored: malformed value leaves the OpenMP default in place
    }
  }
  return omp_get_max_threads();
}

}  // namespace regscan::kernels
