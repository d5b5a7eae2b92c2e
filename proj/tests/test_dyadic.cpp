#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "regscan/dyadic.hpp"
#include "regscan/error.hpp"
#include "regscan/lorentz.hpp"
#include "regscan/synth.hpp"

using namespace regscan;
using namespace regscan::dyadic;

namespace {

using Key = std::array<int, 3>;
using Brute = std::set<Key>;

Brute as_set(const CubeSet& s) {
  Brute b;
  for (const auto& j : s.members()) b.insert({j[0], j[1], j[2]});
  return b;
}

CubeSet from_set(const Brute& b) {
  if (b.empty()) return {};
  int y0 = 1 << 30, y1 = -(1 << 30), z0 = y0, z1 = y1;
  for (const auto& k : b) {
    y0 = std::min(y0, k[1]);
    y1 = std::max(y1, k[1]);
    z0 = std::min(z0, k[2]);
    z1 = std::max(z1, k[2]);
  }
  CubeSet s(y0, y1, z0, z1);
  for (const auto& k : b) s.insert(k[1], k[2], {k[0], k[0]});
  return s;
}

Brute random_set(std::mt19937& rng, int extent, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Brute b;
  for (int z = -extent; z <= extent; ++z)
    for (int y = -extent; y <= extent; ++y)
      for (int x = -extent; x <= extent; ++x)
        if (u(rng) < density) b.insert({x, y, z});
  return b;
}

// Interiors of two axis cubes intersect.
bool geometric_meet(const DyadicCube& a, const DyadicCube& b, double eps) {
  const Vec3 ca = a.corner(eps), cb = b.corner(eps);
  const double tol = 1e-12;
  for (int ax = 0; ax < 3; ++ax)
    if (!(ca[ax] < cb[ax] + b.side() - tol && cb[ax] < ca[ax] + a.side() - tol)) return false;
  return true;
}

bool geometric_inside(const DyadicCube& c, const DyadicCube& p, double eps) {
  const Vec3 cc = c.corner(eps), cp = p.corner(eps);
  const double tol = 1e-12;
  for (int ax = 0; ax < 3; ++ax)
    if (cc[ax] < cp[ax] - tol || cc[ax] + c.side() > cp[ax] + p.side() + tol) return false;
  return true;
}

// Direct definition of F_k: every cover cube (optionally inside a G_{k-1}
// cube) whose cell-centre measure of {|u| > 2^k eps} exceeds 2^-3k eps.
Brute brute_family(const ScalarGrid& speed, int k, double eps, const Brute* prevG) {
  const Box3& box = speed.box();
  const CubeSet cover = build_cover(k, eps, box);
  const double level = std::ldexp(eps, k), need = std::ldexp(eps, -3 * k);
  Brute out;
  for (const auto& j : cover.members()) {
    const DyadicCube E{k, j};
    if (prevG) {
      bool inside = false;
      for (const auto& p : *prevG)
        if (geometric_inside(E, {k - 1, {p[0], p[1], p[2]}}, eps)) {
          inside = true;
          break;
        }
      if (!inside) continue;
    }
    const Vec3 c = E.corner(eps);
    std::size_t cells = 0;
    const Index3 n = box.n();
    for (int kk = 0; kk < n[2]; ++kk)
      for (int jj = 0; jj < n[1]; ++jj)
        for (int ii = 0; ii < n[0]; ++ii) {
          const Vec3 x = box.center(ii, jj, kk);
          bool in = true;
          for (int a = 0; a < 3; ++a) in = in && x[a] >= c[a] - 1e-12 && x[a] < c[a] + E.side() - 1e-12;
          if (in && speed(ii, jj, kk) > level) ++cells;
        }
    if (cells * box.cell_volume() > need) out.insert({j[0], j[1], j[2]});
  }
  return out;
}

VectorGrid two_spikes(int n, double strength) {
  synth::SpikeSpec spec;
  spec.spikes.push_back({{-0.5, 0.0, 0.0}, {0, 0, 1}, strength});
  spec.spikes.push_back({{0.5, 0.0, 0.0}, {0, 1, 0}, strength});
  return synth::spike_field(spec, Box3({-1, -1, -1}, {1, 1, 1}, {n, n, n}));
}

}  // namespace

TEST_CASE("cube geometry and lattice relations") {
  const double eps = 0.1;
  CHECK(meet_radius(eps) == 9);
  CHECK(child_span(eps) == 10);
  CHECK(meet_radius(0.2) == 4);
  CHECK(child_span(0.2) == 5);
  const DyadicCube c{3, {2, -1, 5}};
  CHECK(c.side() == 0.125);
  CHECK(c.corner(eps)[0] == doctest::Approx(0.025));
  CHECK(c.corner(eps)[1] == doctest::Approx(-0.0125));
  CHECK(c.diameter() == doctest::Approx(0.125 * std::sqrt(3.0)));
  CHECK(c.contains(c.corner(eps), eps));
  CHECK_FALSE(c.contains(c.corner(eps) + Vec3{0.125, 0, 0}, eps));  // half-open
  CHECK_THROWS_AS(meet_radius(0.25), DomainError);
  CHECK_THROWS_AS(meet_radius(0.0), DomainError);
}

TEST_CASE("meets and contained_in agree with geometric interiors") {
  std::mt19937 rng(7);
  for (double eps : {0.1, 0.15, 0.2, 1.0 / 6.0}) {
    std::uniform_int_distribution<int> J(-25, 25), K(0, 3);
    for (int trial = 0; trial < 3000; ++trial) {
      const DyadicCube a{K(rng), {J(rng), J(rng), J(rng)}};
      DyadicCube b{a.k, {a.j[0] + J(rng) / 2, a.j[1] + J(rng) / 2, a.j[2] + J(rng) / 2}};
      if (trial % 3 == 1) b.k = a.k + 1, b.j = {2 * a.j[0] + J(rng) / 3, 2 * a.j[1] + J(rng) / 3, 2 * a.j[2] + J(rng) / 3};
      CHECK(meets(a, b, eps) == geometric_meet(a, b, eps));
      CHECK(meets(a, b, eps) == meets(b, a, eps));
      if (b.k == a.k + 1) CHECK(contained_in(b, a, eps) == geometric_inside(b, a, eps));
    }
  }
}

TEST_CASE("meeting neighbours: exact count and point multiplicity") {
  const double eps = 0.1;
  const int m = meet_radius(eps);
  // cubes meeting a given one: the (2m+1)^3 lattice block
  int meeting = 0;
  const DyadicCube c{0, {0, 0, 0}};
  for (int z = -12; z <= 12; ++z)
    for (int y = -12; y <= 12; ++y)
      for (int x = -12; x <= 12; ++x) meeting += geometric_meet(c, {0, {x, y, z}}, eps);
  CHECK(meeting == (2 * m + 1) * (2 * m + 1) * (2 * m + 1));

  // any point lies in at most ceil(1/eps + 1)^3 cubes of one level
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int cap = static_cast<int>(std::ceil(1.0 / eps + 1.0));
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 x{u(rng), u(rng), u(rng)};
    int covering = 0;
    for (int z = -25; z <= 15; ++z)
      for (int y = -25; y <= 15; ++y)
        for (int xx = -25; xx <= 15; ++xx) covering += DyadicCube{0, {xx, y, z}}.contains(x, eps);
    CHECK(covering >= 1);
    CHECK(covering <= cap * cap * cap);
  }
}

TEST_CASE("build_cover matches a brute-force lattice scan and covers the domain") {
  const Box3 unit({0, 0, 0}, {1, 1, 1}, {8, 8, 8});
  for (double eps : {0.25 - 1e-9, 0.2, 0.1})
    for (int k : {0, 1, 2}) {
      const CubeSet cover = build_cover(k, eps, unit);
      std::uint64_t brute = 0;
      for (int z = -40; z <= 60; ++z)
        for (int y = -40; y <= 60; ++y)
          for (int x = -40; x <= 60; ++x) {
            const DyadicCube c{k, {x, y, z}};
            const Vec3 lo = c.corner(eps);
            bool meet = true;
            for (int a = 0; a < 3; ++a) meet = meet && lo[a] < 1.0 && lo[a] + c.side() > 0.0;
            brute += meet;
            if (meet) CHECK(cover.contains(c.j));
          }
      CHECK(cover.count() == brute);
    }
  CHECK(build_cover(0, 0.2, unit).count() == 9u * 9u * 9u);
  // eps = 1/4 itself (offsets j in -3..3, 7^3 cubes) is outside the admissible range
  CHECK(build_cover(0, 0.249, unit).count() == 9u * 9u * 9u);
  CHECK_THROWS_AS(build_cover(0, 0.25, unit), DomainError);
  CHECK_THROWS_AS(build_cover(-1, 0.1, unit), DomainError);

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const CubeSet c2 = build_cover(2, 0.1, unit);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 x{u(rng), u(rng), u(rng)};
    bool covered = false;
    for (const auto& j : c2.members()) covered = covered || DyadicCube{2, j}.contains(x, 0.1);
    CHECK(covered);
  }
}

TEST_CASE("CubeSet operations agree with std::set") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Brute A = random_set(rng, 6, 0.05), B = random_set(rng, 6, 0.3);
    const CubeSet a = from_set(A), b = from_set(B);
    CHECK(as_set(a) == A);
    CHECK(a.count() == A.size());

    Brute inter;
    for (const auto& k : A)
      if (B.count(k)) inter.insert(k);
    CHECK(as_set(a.intersect(b)) == inter);

    const int m = 1 + trial % 3;
    Brute dil;
    for (const auto& k : A)
      for (int dz = -m; dz <= m; ++dz)
        for (int dy = -m; dy <= m; ++dy)
          for (int dx = -m; dx <= m; ++dx) dil.insert({k[0] + dx, k[1] + dy, k[2] + dz});
    CHECK(as_set(a.dilate(m)) == dil);

    const int span = 2 + trial % 4;
    Brute kids, parents;
    for (const auto& k : A)
      for (int dz = 0; dz <= span; ++dz)
        for (int dy = 0; dy <= span; ++dy)
          for (int dx = 0; dx <= span; ++dx) kids.insert({2 * k[0] + dx, 2 * k[1] + dy, 2 * k[2] + dz});
    CHECK(as_set(a.children(span)) == kids);
    for (int z = -20; z <= 20; ++z)
      for (int y = -20; y <= 20; ++y)
        for (int x = -20; x <= 20; ++x) {
          bool any = false;
          for (int dz = 0; dz <= span && !any; ++dz)
            for (int dy = 0; dy <= span && !any; ++dy)
              for (int dx = 0; dx <= span && !any; ++dx) any = B.count({2 * x + dx, 2 * y + dy, 2 * z + dz}) > 0;
          if (any) parents.insert({x, y, z});
        }
    CHECK(as_set(b.parents(span)) == parents);

    const Index3 lo{-2, -3, 0}, hi{4, 1, 5};
    Brute clipped, kept;
    for (const auto& k : B) {
      if (k[0] >= lo[0] && k[0] <= hi[0] && k[1] >= lo[1] && k[1] <= hi[1] && k[2] >= lo[2] && k[2] <= hi[2]) clipped.insert(k);
      if ((k[0] + k[1] + k[2]) % 2 == 0) kept.insert(k);
    }
    CHECK(as_set(b.clip(lo, hi)) == clipped);
    CHECK(as_set(b.filter([](int x, int y, int z) { return (x + y + z) % 2 == 0; })) == kept);
    for (const auto& k : B) CHECK(b.contains({k[0], k[1], k[2]}));
  }
  CubeSet e;
  CHECK(e.empty());
  CHECK(e.dilate(2).empty());
  CHECK(e.children(10).count() == 0);
}

TEST_CASE("maximal_disjoint is pairwise disjoint, maximal, and dense enough for the overlap bound") {
  std::mt19937 rng(9);
  for (double eps : {0.1, 0.2, 0.15}) {
    const int m = meet_radius(eps);
    for (int trial = 0; trial < 10; ++trial) {
      Brute A = random_set(rng, 3 * m, 0.002 + 0.01 * trial);
      if (trial % 2 == 1)  // add a solid block, the case where greedy orders are tight
        for (int z = 0; z < 2 * m + 3; ++z)
          for (int y = 1; y < 3 * m; ++y)
            for (int x = -m; x < m + 7; ++x) A.insert({x, y, z});
      const auto chosen = maximal_disjoint(from_set(A), eps);
      for (const auto& c : chosen) CHECK(A.count({c[0], c[1], c[2]}) == 1);
      for (std::size_t i = 0; i < chosen.size(); ++i)
        for (std::size_t j = i + 1; j < chosen.size(); ++j) CHECK_FALSE(meets({0, chosen[i]}, {0, chosen[j]}, eps));
      for (const auto& k : A) {
        bool hit = false;
        for (const auto& c : chosen) hit = hit || meets({0, {k[0], k[1], k[2]}}, {0, c}, eps);
        CHECK(hit);
      }
      const double W = m + 1;
      CHECK(static_cast<double>(A.size()) <= W * W * W * static_cast<double>(chosen.size()));
      CHECK(maximal_disjoint(from_set(A), eps) == chosen);
    }
  }
  CHECK(maximal_disjoint(CubeSet{}, 0.1).empty());
}

TEST_CASE("count_bound arithmetic") {
  CHECK(count_bound(1.0, 0.1) == 10001000.0);
  CHECK(count_bound(0.0, 0.1) == 1000.0);
  CHECK(count_bound(2.0, 0.1) - 1000.0 == 8.0 * (count_bound(1.0, 0.1) - 1000.0));
  CHECK(count_bound(1.0, 0.2) == doctest::Approx(std::pow(5.0, 7) + 125.0).epsilon(1e-15));
  CHECK(count_bound(0.7, 0.13) == doctest::Approx(std::pow(0.13, -7) * 0.343 + std::pow(0.13, -3)).epsilon(1e-14));
  CHECK_THROWS_AS(count_bound(-1.0, 0.1), DomainError);
  CHECK_THROWS_AS(count_bound(1.0, 0.3), DomainError);
  CHECK_THROWS_AS(count_bound(std::nan(""), 0.1), DomainError);
}

TEST_CASE("selection families match the definition on a small grid") {
  const VectorGrid u = two_spikes(24, 0.2);
  const ScalarGrid speed = u.magnitude();
  SelectOptions opt;
  opt.eps = 0.2;
  const auto f0 = select_f0(speed, opt);
  const Brute F0 = brute_family(speed, 0, opt.eps, nullptr);
  CHECK(as_set(f0.F) == F0);
  // G_0 = cover cubes meeting some member of F_0
  Brute G0;
  for (const auto& j : build_cover(0, opt.eps, speed.box()).members()) {
    bool hit = false;
    for (const auto& f : F0) hit = hit || meets({0, j}, {0, {f[0], f[1], f[2]}}, opt.eps);
    if (hit) G0.insert({j[0], j[1], j[2]});
  }
  CHECK(as_set(f0.G) == G0);

  const auto f1 = select_fk(speed, 1, f0, opt);
  CHECK(as_set(f1.F) == brute_family(speed, 1, opt.eps, &G0));

  auto serial = opt;
  serial.exec = kernels::Exec::serial;
  CHECK(select_f0(speed, serial).F == f0.F);
  CHECK(select_fk(speed, 1, f0, serial).F == f1.F);

  CHECK_THROWS_AS(select_fk(speed, 2, f0, opt), DomainError);
  CHECK_THROWS_AS(select_fk(speed, 0, f0, opt), DomainError);
}

TEST_CASE("zero and small fields are regular at level 0") {
  const Box3 box({-1, -1, -1}, {1, 1, 1}, {32, 32, 32});
  const auto cs = localize(VectorGrid(box), 0.1, 1.0, 3);
  CHECK(cs.regular_at_t0);
  CHECK(cs.clusters.empty());
  CHECK(cs.surviving_cubes == 0);
  CHECK(cs.certificate_holds());

  // smooth bump with max |u| = 0.09 < eps
  const VectorGrid small = synth::sample(box, [](const Vec3& x) { return Vec3{0.09 * std::exp(-4 * dot(x, x)), 0, 0}; });
  const auto cs2 = localize(small, 0.1, lorentz::weak_norm(small.magnitude(), 3.0), 3);
  CHECK(cs2.regular_at_t0);
  CHECK(cs2.levels.front().F == 0);
  CHECK(cs2.points().empty());
}

TEST_CASE("two spikes localize to two clusters near the centres, with certified counts") {
  const VectorGrid u = two_spikes(128, 0.3);
  const double M = lorentz::weak_norm(u.magnitude(), 3.0);
  const double eps = 0.1;
  const auto cs = localize(u, eps, M, 6);
  REQUIRE(cs.clusters.size() == 2);
  const double tol = std::ldexp(1.0, -6) * std::sqrt(3.0);
  const Vec3 truth[2] = {{-0.5, 0, 0}, {0.5, 0, 0}};
  for (int i = 0; i < 2; ++i) CHECK(norm(cs.clusters[i].centroid - truth[i]) <= tol);
  CHECK(cs.certificate_holds());
  CHECK(static_cast<double>(cs.clusters.size()) <= count_bound(M, eps));
  for (const auto& l : cs.levels) {
    CHECK(l.cert.overlap_claim);
    CHECK(l.cert.disjoint_lower);
    CHECK(l.cert.weak_upper);
    CHECK(l.cert.count_bound);
    CHECK(static_cast<double>(l.cert.N) <= 1000.0 * static_cast<double>(l.cert.N_d));
    CHECK(static_cast<double>(l.cert.N_d) * std::ldexp(eps, -3 * l.k) <= std::pow(std::ldexp(eps, l.k), -3) * M * M * M);
  }
  for (const auto& c : cs.clusters) {
    REQUIRE(c.chain.size() == 7);
    for (std::size_t k = 1; k < c.chain.size(); ++k) {
      CHECK(c.chain[k].k == static_cast<int>(k));
      CHECK(contained_in(c.chain[k], c.chain[k - 1], eps));
      CHECK(c.chain[k].diameter() == doctest::Approx(0.5 * c.chain[k - 1].diameter()));
      CHECK(cs.alive[k].contains(c.chain[k].j));
    }
  }
  // the spikes' own cubes survive every level
  for (int i = 0; i < 2; ++i) {
    bool found = false;
    for (const auto& j : cs.alive.back().members()) found = found || DyadicCube{6, j}.contains(truth[i], eps);
    CHECK(found);
  }
}

TEST_CASE("localize guards resolution and arguments") {
  const Box3 box({-1, -1, -1}, {1, 1, 1}, {32, 32, 32});
  CHECK(max_level(box, 1) == 4);
  CHECK(max_level(box, 4) == 2);
  CHECK_THROWS_WITH_AS(localize(VectorGrid(box), 0.1, 1.0, 5), doctest::Contains("suggested maximum k_max = 4"), DomainError);
  LocalizeOptions o;
  o.min_cells_per_side = 4;
  CHECK_THROWS_WITH_AS(localize(VectorGrid(box), 0.1, 1.0, 3, o), doctest::Contains("k_max = 2"), DomainError);
  CHECK_THROWS_AS(localize(VectorGrid(box), 0.1, -1.0, 2), DomainError);
  CHECK_THROWS_AS(localize(VectorGrid(box), 0.3, 1.0, 2), DomainError);
  CHECK_THROWS_AS(build_chains({}, box, 1.0), DomainError);
}
