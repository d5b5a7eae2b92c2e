#include <doctest.h>

#include <algorithm>
#include <random>

#include "regscan/kernels.hpp"

using namespace regscan;
using namespace regscan::kernels;

namespace {
ScalarGrid noise(const Box3& b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  ScalarGrid g(b);
  for (double& x : g.data()) x = nd(rng);
  return g;
}
}  // namespace

TEST_CASE("serial and parallel paths agree bit for bit") {
  const Box3 b({0, 0, 0}, {1, 1, 1}, {17, 13, 11});
  const ScalarGrid g = noise(b, 3);
  const CellRange all = CellRange::all(b);
  const Ball ball{{0.4, 0.6, 0.5}, 0.35};
  for (double p : {1.0, 2.0, 3.0, 6.0}) {
    CHECK(power_sum(g.data(), b, all, p, nullptr, Exec::serial) == power_sum(g.data(), b, all, p, nullptr, Exec::parallel));
    CHECK(power_sum(g.data(), b, all, p, &ball, Exec::serial) == power_sum(g.data(), b, all, p, &ball, Exec::parallel));
  }
  CHECK(count_above(g.data(), b, all, 0.5, &ball, Exec::serial) ==
        count_above(g.data(), b, all, 0.5, &ball, Exec::parallel));
  CHECK(sorted_abs_descending(g.data(), Exec::serial) == sorted_abs_descending(g.data(), Exec::parallel));
}

TEST_CASE("sorted_abs_descending against std::sort") {
  const Box3 b({0, 0, 0}, {1, 1, 1}, {9, 9, 9});
  const ScalarGrid g = noise(b, 11);
  std::vector<double> ref;
  for (double x : g.data()) ref.push_back(std::abs(x));
  std::sort(ref.begin(), ref.end(), std::greater<>());
  CHECK(sorted_abs_descending(g.data()) == ref);
}

TEST_CASE("summed area table matches brute-force counts") {
  const Box3 b({0, 0, 0}, {1, 1, 1}, {8, 7, 6});
  const ScalarGrid g = noise(b, 5);
  const auto sat = summed_area_table(g.data(), b, 0.3);
  std::mt19937 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    CellRange r;
    for (int a = 0; a < 3; ++a) {
      std::uniform_int_distribution<int> d(0, b.n()[a]);
      int x = d(rng), y = d(rng);
      r.lo[a] = std::min(x, y);
      r.hi[a] = std::max(x, y);
    }
    std::uint64_t brute = 0;
    for (int k = r.lo[2]; k < r.hi[2]; ++k)
      for (int j = r.lo[1]; j < r.hi[1]; ++j)
        for (int i = r.lo[0]; i < r.hi[0]; ++i) brute += std::abs(g(i, j, k)) > 0.3;
    CHECK(sat.sum(r) == brute);
  }
}

TEST_CASE("compensated sum recovers small addends") {
  CompensatedSum s;
  s.add(1e16);
  for (int i = 0; i < 1000; ++i) s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1000.0);
}

TEST_CASE("magnitude") {
  const Box3 b({0, 0, 0}, {1, 1, 1}, {2, 2, 2});
  VectorGrid u(b);
  for (std::size_t i = 0; i < b.size(); ++i) {
    u.component(0)[i] = 3.0;
    u.component(1)[i] = 4.0;
  }
  std::vector<double> m(b.size());
  magnitude(u, m);
  for (double x : m) CHECK(x == 5.0);
}
