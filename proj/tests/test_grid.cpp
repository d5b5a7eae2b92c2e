#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "regscan/error.hpp"
#include "regscan/grid.hpp"
#include "regscan/synth.hpp"

using namespace regscan;

namespace {
Box3 unit_box(int n) { return Box3({-1, -1, -1}, {1, 1, 1}, {n, n, n}); }
}  // namespace

TEST_CASE("box invariants") {
  const Box3 b({0, 0, 0}, {2, 1, 4}, {4, 2, 8});
  CHECK(b.spacing(0) == 0.5);
  CHECK(b.cell_volume() == doctest::Approx(0.125));
  CHECK(b.size() == 64u);
  CHECK_THROWS_AS(Box3({0, 0, 0}, {0, 1, 1}, {1, 1, 1}), DomainError);
  CHECK_THROWS_AS(Box3({0, 0, 0}, {1, 1, 1}, {0, 1, 1}), DomainError);
}

TEST_CASE("region_measure closed forms") {
  const Box3 b = unit_box(32);
  ScalarGrid zero(b);
  CHECK(region_measure(zero, Ball{{0, 0, 0}, 0.5}, 1.0).volume == 0.0);

  ScalarGrid two(b);
  for (double& x : two.data()) x = 2.0;
  // unit-volume cube aligned with the cell faces
  const auto m = region_measure(two, CubeRegion{{-0.5, -0.5, -0.5}, 1.0}, 1.0);
  CHECK(m.volume == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(m.disjoint);

  // m{1/|x| > 2} = (4 pi / 3) / 8 in the continuum
  const ScalarGrid inv = synth::sample(unit_box(64), [](const Vec3& x) { return 1.0 / norm(x); });
  const double v = region_measure(inv, AxisBox{{-1, -1, -1}, {1, 1, 1}}, 2.0).volume;
  CHECK(std::abs(v / (4.0 * std::numbers::pi / 3.0 / 8.0) - 1.0) < 0.05);

  const auto far = region_measure(two, Ball{{10, 10, 10}, 1.0}, 1.0);
  CHECK(far.disjoint);
  CHECK(far.volume == 0.0);
}

TEST_CASE("region_measure is monotone in h and bounded by the region volume") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  const Box3 b = unit_box(16);
  ScalarGrid g(b);
  for (double& x : g.data()) x = nd(rng);
  const Ball ball{{0.1, -0.2, 0.05}, 0.7};
  const double full = region_measure(g, ball, -1.0).volume;  // every cell in the ball
  double prev = full;
  for (double h = 0.0; h < 4.0; h += 0.05) {
    const double m = region_measure(g, ball, h).volume;
    CHECK(m <= prev);
    CHECK(m <= full);
    prev = m;
  }
}

TEST_CASE("center_index_range partitions the cells") {
  const Box3 b({0, 0, 0}, {1, 1, 1}, {10, 10, 10});
  int total = 0;
  for (int s = 0; s < 5; ++s) {
    const auto [a, c] = center_index_range(b, 0, 0.2 * s, 0.2 * (s + 1));
    total += c - a;
  }
  CHECK(total == 10);
}

TEST_CASE("restrict_to_cylinder") {
  const Box3 b = unit_box(16);
  synth::SpikeSpec spec;
  spec.core_radius = 0.05;
  spec.spikes = {{{-0.5, 0, 0}, {0, 0, 1}, 1.0}, {{0.5, 0, 0}, {0, 0, 1}, 1.0}};
  const VectorGrid u = synth::spike_field(spec, b);
  const SpaceTimeField f({0.0, 0.5, 1.0}, {u, u, u});

  SUBCASE("full-domain cylinder keeps everything") {
    const auto r = restrict_to_cylinder(f, Cylinder{{0, 0, 0}, 1.0, 10.0});
    REQUIRE(r.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
      for (int c = 0; c < 3; ++c) {
        auto a = r.frame(i).component(c);
        auto e = f.frame(i).component(c);
        CHECK(std::equal(a.begin(), a.end(), e.begin()));
      }
  }
  SUBCASE("cylinder before the first frame") {
    CHECK_THROWS_AS(restrict_to_cylinder(f, Cylinder{{0, 0, 0}, -5.0, 0.5}), DomainError);
  }
  SUBCASE("half-radius cylinder around one spike keeps only that spike") {
    const auto r = restrict_to_cylinder(f, Cylinder{{-0.5, 0, 0}, 1.0, 0.5});
    const ScalarGrid s = r.frame(r.size() - 1).magnitude();
    double left = 0.0, right = 0.0;
    for (int k = 0; k < 16; ++k)
      for (int j = 0; j < 16; ++j)
        for (int i = 0; i < 16; ++i) (b.center(0, i) < 0 ? left : right) += s(i, j, k);
    CHECK(left > 0.0);
    CHECK(right == 0.0);
  }
}

TEST_CASE("gradient stencils") {
  SUBCASE("constant and affine fields are exact") {
    const Box3 b({0, 0, 0}, {1, 2, 3}, {5, 6, 7});
    const VectorGrid u = synth::sample(b, [](const Vec3& x) {
      return Vec3{2.0 * x[0] - x[1] + 0.5 * x[2] + 3.0, 7.0, x[2] - 4.0 * x[0]};
    });
    const TensorGrid g = gradient(u);
    const double expect[3][3] = {{2, -1, 0.5}, {0, 0, 0}, {-4, 0, 1}};
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 3; ++c)
        for (double v : g.d[a][c]) CHECK(v == doctest::Approx(expect[a][c]).epsilon(1e-12).scale(1.0));
  }
  SUBCASE("sin x converges at second order") {
    auto err = [](int n) {
      const Box3 b({0, 0, 0}, {2 * std::numbers::pi, 1, 1}, {n, 3, 3});
      const VectorGrid u = synth::sample(b, [](const Vec3& x) { return Vec3{std::sin(x[0]), 0, 0}; });
      const TensorGrid g = gradient(u);
      double e = 0.0;
      for (int i = 0; i < n; ++i) e = std::max(e, std::abs(g.d[0][0][b.index(i, 1, 1)] - std::cos(b.center(0, i))));
      return e;
    };
    const double e1 = err(32), e2 = err(64);
    CHECK(e1 < 0.05);
    CHECK(e1 / e2 > 3.5);
  }
  SUBCASE("too small") {
    CHECK_THROWS_AS(gradient(VectorGrid(Box3({0, 0, 0}, {1, 1, 1}, {2, 4, 4}))), DomainError);
  }
}

TEST_CASE("frame_at interpolates linearly") {
  const Box3 b = unit_box(4);
  VectorGrid a(b), c(b);
  for (double& x : c.component(0)) x = 2.0;
  const SpaceTimeField f({0.0, 1.0}, {a, c});
  CHECK(f.frame_at(0.25).component(0)[0] == doctest::Approx(0.5));
  CHECK_THROWS_AS(f.frame_at(1.5), DomainError);
  CHECK_THROWS_AS(SpaceTimeField({1.0, 1.0}, {a, c}), DomainError);
}
