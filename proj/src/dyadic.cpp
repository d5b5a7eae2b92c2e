#include "regscan/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "regscan/error.hpp"

namespace regscan::dyadic {
namespace {

constexpr double kLatticeTol = 1e-9;
constexpr double kRoundoff = 1e-12;

void require_eps(double eps) {
  if (!(eps > 0.0 && eps < 0.25)) throw DomainError("eps must lie in (0, 1/4)");
}

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
int ceil_div(int a, int b) { return -floor_div(-a, b); }

// Per-level lattice data: cover range and, per axis, the cell-centre index
// range [i0, i1) covered by cube index j.
struct LevelGeometry {
  int k = 0;
  double side = 1.0;
  double step = 0.1;
  Index3 jlo{}, jhi{};
  std::array<std::vector<std::pair<int, int>>, 3> cells;

  LevelGeometry(int level, double eps, const Box3& box) : k(level) {
    side = std::ldexp(1.0, -k);
    step = side * eps;
    cover_range(k, eps, box, jlo, jhi);
    for (int a = 0; a < 3; ++a) {
      cells[a].resize(static_cast<std::size_t>(jhi[a] - jlo[a] + 1));
      for (int j = jlo[a]; j <= jhi[a]; ++j) {
        const double c = step * j;
        cells[a][static_cast<std::size_t>(j - jlo[a])] = center_index_range(box, a, c, c + side);
      }
    }
  }

  CellRange range(int x, int y, int z) const {
    const auto& cx = cells[0][static_cast<std::size_t>(x - jlo[0])];
    const auto& cy = cells[1][static_cast<std::size_t>(y - jlo[1])];
    const auto& cz = cells[2][static_cast<std::size_t>(z - jlo[2])];
    return {{cx.first, cy.first, cz.first}, {cx.second, cy.second, cz.second}};
  }
};

SelectionFamily select_level(const ScalarGrid& speed, int k, const CubeSet* parents_G, const SelectOptions& opt) {
  require_eps(opt.eps);
  if (!(opt.shape_factor > 0.0)) throw DomainError("eps shape factor must be positive");
  const Box3& box = speed.box();
  const LevelGeometry geo(k, opt.eps, box);
  SelectionFamily fam;
  fam.k = k;
  fam.eps = opt.eps;
  fam.eps_criterion = opt.eps * opt.shape_factor;
  fam.level = std::ldexp(fam.eps_criterion, k);
  fam.min_measure = std::ldexp(fam.eps_criterion, -3 * k);

  const kernels::SummedAreaTable sat = kernels::summed_area_table(speed.data(), box, fam.level, opt.exec);
  const double cv = box.cell_volume();
  CubeSet candidates =
      parents_G == nullptr ? CubeSet::box(geo.jlo, geo.jhi) : parents_G->children(child_span(opt.eps)).clip(geo.jlo, geo.jhi);
  const double need = fam.min_measure;
  fam.F = candidates.filter([&](int x, int y, int z) {
    return static_cast<double>(sat.sum(geo.range(x, y, z))) * cv > need;
  });
  fam.G = fam.F.dilate(meet_radius(opt.eps)).clip(geo.jlo, geo.jhi);
  fam.regular = fam.F.empty();

  LevelCertificate& c = fam.cert;
  c.N = fam.F.count();
  c.N_d = maximal_disjoint(fam.F, opt.eps).size();
  c.measure = static_cast<double>(sat.total()) * cv;
  const double N = static_cast<double>(c.N), Nd = static_cast<double>(c.N_d);
  c.overlap_claim = N <= Nd / std::pow(opt.eps, 3) * (1 + kRoundoff);
  const double mult = 2.0 * meet_radius(opt.eps) + 1.0;
  c.overlap_exact = N <= mult * mult * mult * Nd;
  c.disjoint_lower = Nd * fam.min_measure <= c.measure * (1 + kRoundoff);
  if (opt.M) {
    const double M3 = *opt.M * *opt.M * *opt.M;
    c.weak_bound = M3 / std::pow(fam.level, 3);
    c.weak_upper = c.measure <= c.weak_bound * (1 + kRoundoff);
    c.count_bound = N <= M3 / (std::pow(opt.eps, 3) * std::pow(fam.eps_criterion, 4)) * (1 + kRoundoff);
  } else {
    c.weak_bound = std::numeric_limits<double>::infinity();
  }
  return fam;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b)
      parent[b] = a;
    else
      parent[a] = b;
  }
};

}  // namespace

double DyadicCube::side() const { return std::ldexp(1.0, -k); }

Vec3 DyadicCube::corner(double eps) const {
  const double st = side() * eps;
  return {st * j[0], st * j[1], st * j[2]};
}

Vec3 DyadicCube::center(double eps) const {
  const Vec3 c = corner(eps);
  const double h = 0.5 * side();
  return {c[0] + h, c[1] + h, c[2] + h};
}

double DyadicCube::diameter() const { return side() * std::sqrt(3.0); }

bool DyadicCube::contains(const Vec3& x, double eps) const {
  const Vec3 c = corner(eps);
  for (int a = 0; a < 3; ++a)
    if (x[a] < c[a] || x[a] >= c[a] + side()) return false;
  return true;
}

int meet_radius(double eps) {
  require_eps(eps);
  return static_cast<int>(std::ceil(1.0 / eps - kLatticeTol)) - 1;
}

int child_span(double eps) {
  require_eps(eps);
  return static_cast<int>(std::floor(1.0 / eps + kLatticeTol));
}

bool meets(const DyadicCube& a, const DyadicCube& b, double eps) {
  if (a.k == b.k) {
    const int m = meet_radius(eps);
    for (int ax = 0; ax < 3; ++ax)
      if (std::abs(a.j[ax] - b.j[ax]) > m) return false;
    return true;
  }
  const Vec3 ca = a.corner(eps), cb = b.corner(eps);
  const double tol = kLatticeTol * std::min(a.side(), b.side());
  for (int ax = 0; ax < 3; ++ax)
    if (ca[ax] + a.side() <= cb[ax] + tol || cb[ax] + b.side() <= ca[ax] + tol) return false;
  return true;
}

bool contained_in(const DyadicCube& child, const DyadicCube& parent, double eps) {
  if (child.k == parent.k + 1) {
    const int m = child_span(eps);
    for (int ax = 0; ax < 3; ++ax)
      if (child.j[ax] < 2 * parent.j[ax] || child.j[ax] > 2 * parent.j[ax] + m) return false;
    return true;
  }
  const Vec3 cc = child.corner(eps), cp = parent.corner(eps);
  const double tol = kLatticeTol * child.side();
  for (int ax = 0; ax < 3; ++ax)
    if (cc[ax] < cp[ax] - tol || cc[ax] + child.side() > cp[ax] + parent.side() + tol) return false;
  return true;
}

void cover_range(int k, double eps, const Box3& domain, Index3& lo, Index3& hi) {
  require_eps(eps);
  if (k < 0) throw DomainError("level k must be nonnegative");
  const double s = std::ldexp(1.0, -k);
  const double st = s * eps;
  for (int a = 0; a < 3; ++a) {
    // interior of [st j, st j + s) meets [lo, hi]  <=>  (lo - s)/st < j < hi/st
    lo[a] = static_cast<int>(std::floor((domain.lo()[a] - s) / st + kLatticeTol)) + 1;
    hi[a] = static_cast<int>(std::ceil(domain.hi()[a] / st - kLatticeTol)) - 1;
  }
}

CubeSet build_cover(int k, double eps, const Box3& domain) {
  Index3 lo{}, hi{};
  cover_range(k, eps, domain, lo, hi);
  return CubeSet::box(lo, hi);
}

std::vector<Index3> maximal_disjoint(const CubeSet& family, double eps) {
  std::vector<Index3> chosen;
  Index3 lo{}, hi{};
  if (!family.bounds(lo, hi)) return chosen;
  const int m = meet_radius(eps);
  const int W = m + 1;  // two cubes in one bucket always meet: at most one chosen per bucket
  auto mod = [W](int v) { return ((v % W) + W) % W; };

  // Seed: the most populated residue class j = r (mod W). Its members differ by
  // at least W in some axis, so they never meet, and by pigeonhole it holds at
  // least N / W^3 cubes.
  std::vector<std::uint64_t> per_class(static_cast<std::size_t>(W) * W * W, 0);
  family.for_each_run([&](int y, int z, const Interval& r) {
    const std::size_t base = static_cast<std::size_t>(W) * (mod(y) + static_cast<std::size_t>(W) * mod(z));
    const std::int64_t len = static_cast<std::int64_t>(r.b) - r.a + 1;
    for (int q = 0; q < W; ++q) {
      // members x = a + q, a + q + W, ...
      if (q >= len) break;
      per_class[base + mod(r.a + q)] += static_cast<std::uint64_t>((len - q + W - 1) / W);
    }
  });
  const std::size_t best = static_cast<std::size_t>(std::max_element(per_class.begin(), per_class.end()) - per_class.begin());
  const int rx = static_cast<int>(best % W), ry = static_cast<int>(best / W % W), rz = static_cast<int>(best / W / W);

  Index3 nb{};
  for (int a = 0; a < 3; ++a) nb[a] = (hi[a] - lo[a]) / W + 1;
  std::vector<int> bucket(static_cast<std::size_t>(nb[0]) * nb[1] * nb[2], -1);
  auto bidx = [&](int x, int y, int z) {
    return static_cast<std::size_t>((x - lo[0]) / W) +
           static_cast<std::size_t>(nb[0]) * (static_cast<std::size_t>((y - lo[1]) / W) + static_cast<std::size_t>(nb[1]) * ((z - lo[2]) / W));
  };
  auto take = [&](int x, int y, int z) {
    bucket[bidx(x, y, z)] = static_cast<int>(chosen.size());
    chosen.push_back({x, y, z});
  };
  family.for_each_run([&](int y, int z, const Interval& r) {
    if (mod(y) != ry || mod(z) != rz) return;
    for (int x = r.a + mod(rx - r.a); x <= r.b; x += W) take(x, y, z);
  });

  // Greedy extension to a maximal family, lexicographic (z, y, x) order.
  // Returns the largest x of a chosen cube meeting (x, y, z), or INT_MIN.
  auto blocker = [&](int x, int y, int z) {
    const int bx = (x - lo[0]) / W, by = (y - lo[1]) / W, bz = (z - lo[2]) / W;
    int found = std::numeric_limits<int>::min();
    for (int dz = -1; dz <= 1; ++dz) {
      const int cz = bz + dz;
      if (cz < 0 || cz >= nb[2]) continue;
      for (int dy = -1; dy <= 1; ++dy) {
        const int cy = by + dy;
        if (cy < 0 || cy >= nb[1]) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          const int cx = bx + dx;
          if (cx < 0 || cx >= nb[0]) continue;
          const int id = bucket[static_cast<std::size_t>(cx) + static_cast<std::size_t>(nb[0]) * (static_cast<std::size_t>(cy) + static_cast<std::size_t>(nb[1]) * cz)];
          if (id < 0) continue;
          const Index3& c = chosen[static_cast<std::size_t>(id)];
          if (std::abs(c[0] - x) <= m && std::abs(c[1] - y) <= m && std::abs(c[2] - z) <= m) found = std::max(found, c[0]);
        }
      }
    }
    return found;
  };
  family.for_each_run([&](int y, int z, const Interval& r) {
    int x = r.a;
    while (x <= r.b) {
      const int b = blocker(x, y, z);
      if (b != std::numeric_limits<int>::min()) {
        x = b + m + 1;  // every x' <= b + m still meets that cube
        continue;
      }
      take(x, y, z);
      x += m + 1;
    }
  });
  return chosen;
}

SelectionFamily select_f0(const ScalarGrid& speed, const SelectOptions& opt) { return select_level(speed, 0, nullptr, opt); }

SelectionFamily select_f0(const VectorGrid& frame, const SelectOptions& opt) {
  return select_f0(frame.magnitude(), opt);
}

SelectionFamily select_fk(const ScalarGrid& speed, int k, const SelectionFamily& prev, const SelectOptions& opt) {
  if (k < 1) throw DomainError("select_fk: level must be at least 1");
  if (prev.k != k - 1) throw DomainError("select_fk: previous family must be at level k-1");
  return select_level(speed, k, &prev.G, opt);
}

SelectionFamily select_fk(const VectorGrid& frame, int k, const SelectionFamily& prev, const SelectOptions& opt) {
  return select_fk(frame.magnitude(), k, prev, opt);
}

double count_bound(double M, double eps) {
  require_eps(eps);
  if (!(M >= 0.0) || !std::isfinite(M)) throw DomainError("count_bound: M must be a finite nonnegative number");
  // eps = 1/m for an integer m is the common case; use m exactly there so the
  // bound is an exact integer instead of a pow() rounding of one.
  double inv = 1.0 / eps;
  if (std::abs(inv - std::round(inv)) <= 1e-9 * inv) inv = std::round(inv);
  const double inv3 = inv * inv * inv;
  return inv3 * inv3 * inv * M * M * M + inv3;
}

std::vector<Vec3> CandidateSet::points() const {
  std::vector<Vec3> p;
  for (const auto& c : clusters) p.push_back(c.centroid);
  return p;
}

bool CandidateSet::certificate_holds() const {
  for (const auto& l : levels)
    if (!(l.cert.overlap_claim && l.cert.disjoint_lower && l.cert.weak_upper && l.cert.count_bound)) return false;
  return static_cast<double>(clusters.size()) <= bound;
}

CandidateSet build_chains(const std::vector<SelectionFamily>& families, const Box3& domain, double M) {
  if (families.empty()) throw DomainError("build_chains: no families");
  for (std::size_t k = 0; k < families.size(); ++k)
    if (families[k].k != static_cast<int>(k)) throw DomainError("build_chains: families must cover levels 0..k_max in order");
  const double eps = families.front().eps;
  const int span = child_span(eps);
  const int m = meet_radius(eps);
  const int K = static_cast<int>(families.size()) - 1;

  CandidateSet out;
  out.eps = eps;
  out.M = M;
  out.k_max = K;
  out.bound = count_bound(M, eps);
  out.regular_at_t0 = families.front().F.empty();

  out.alive.push_back(families.front().G);
  for (int k = 1; k <= K; ++k) out.alive.push_back(families[k].G.intersect(out.alive[k - 1].children(span)));

  for (int k = 0; k <= K; ++k) {
    LevelSummary s;
    s.k = k;
    s.F = families[k].F.count();
    s.G = families[k].G.count();
    s.alive = out.alive[k].count();
    if (k < K) s.terminated = s.alive - out.alive[k].intersect(out.alive[k + 1].parents(span)).count();
    s.cert = families[k].cert;
    out.levels.push_back(s);
  }

  const CubeSet& last = out.alive[K];
  out.surviving_cubes = last.count();
  if (last.empty()) return out;

  // Union-find over x-runs of the last level under the meet relation.
  Index3 lo{}, hi{};
  last.bounds(lo, hi);
  struct Run {
    int y, z;
    Interval r;
  };
  std::vector<Run> runs;
  const int ny = hi[1] - lo[1] + 1;
  const int nz = hi[2] - lo[2] + 1;
  std::vector<std::size_t> first(static_cast<std::size_t>(ny) * nz + 1, 0);
  for (int z = lo[2]; z <= hi[2]; ++z)
    for (int y = lo[1]; y <= hi[1]; ++y) {
      first[static_cast<std::size_t>(y - lo[1]) + static_cast<std::size_t>(ny) * (z - lo[2])] = runs.size();
      for (const auto& r : last.line(y, z)) runs.push_back({y, z, r});
    }
  first.back() = runs.size();
  auto line_begin = [&](int y, int z) { return first[static_cast<std::size_t>(y - lo[1]) + static_cast<std::size_t>(ny) * (z - lo[2])]; };
  UnionFind uf(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const Run& p = runs[i];
    if (i + 1 < runs.size() && runs[i + 1].y == p.y && runs[i + 1].z == p.z && runs[i + 1].r.a - p.r.b <= m) uf.unite(i, i + 1);
    for (int dz = 0; dz <= m; ++dz) {
      const int z = p.z + dz;
      if (z > hi[2]) break;
      for (int dy = -m; dy <= m; ++dy) {
        if (dz == 0 && dy <= 0) continue;
        const int y = p.y + dy;
        if (y < lo[1] || y > hi[1]) continue;
        const std::size_t b = line_begin(y, z);
        const auto& q = last.line(y, z);
        auto it = std::lower_bound(q.begin(), q.end(), p.r.a - m, [](const Interval& r, int v) { return r.b < v; });
        for (; it != q.end() && it->a <= p.r.b + m; ++it) uf.unite(i, b + static_cast<std::size_t>(it - q.begin()));
      }
    }
  }

  const double side = std::ldexp(1.0, -K);
  const double st = side * eps;
  const double tol = kLatticeTol * side;
  std::vector<std::size_t> root_to_cluster(runs.size(), std::numeric_limits<std::size_t>::max());
  std::vector<std::array<double, 3>> sums;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::size_t root = uf.find(i);
    if (root_to_cluster[root] == std::numeric_limits<std::size_t>::max()) {
      root_to_cluster[root] = out.clusters.size();
      Cluster c;
      c.lo = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
      c.hi = {-c.lo[0], -c.lo[1], -c.lo[2]};
      out.clusters.push_back(c);
      sums.push_back({0, 0, 0});
    }
    Cluster& c = out.clusters[root_to_cluster[root]];
    auto& s = sums[root_to_cluster[root]];
    const Run& p = runs[i];
    const double n = p.r.b - p.r.a + 1;
    c.cubes += static_cast<std::uint64_t>(n);
    // cube centres st j + side/2, summed over the run analytically
    s[0] += st * (static_cast<double>(p.r.a) + p.r.b) * n / 2.0 + n * side / 2.0;
    s[1] += n * (st * p.y + side / 2.0);
    s[2] += n * (st * p.z + side / 2.0);
    const Vec3 clo{st * p.r.a, st * p.y, st * p.z};
    const Vec3 chi{st * p.r.b + side, st * p.y + side, st * p.z + side};
    for (int a = 0; a < 3; ++a) {
      c.lo[a] = std::min(c.lo[a], clo[a]);
      c.hi[a] = std::max(c.hi[a], chi[a]);
      if (clo[a] < domain.lo()[a] - tol || chi[a] > domain.hi()[a] + tol) c.boundary = true;
    }
  }
  for (std::size_t c = 0; c < out.clusters.size(); ++c)
    for (int a = 0; a < 3; ++a) out.clusters[c].centroid[a] = sums[c][a] / static_cast<double>(out.clusters[c].cubes);

  // Representative chain: the last-level cube nearest the centroid, walked up
  // through alive parents (lexicographically first when several qualify).
  std::vector<double> best_d(out.clusters.size(), std::numeric_limits<double>::infinity());
  std::vector<Index3> best_j(out.clusters.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::size_t c = root_to_cluster[uf.find(i)];
    const Run& p = runs[i];
    const Vec3& ctr = out.clusters[c].centroid;
    const int x = std::clamp(static_cast<int>(std::lround((ctr[0] - side / 2) / st)), p.r.a, p.r.b);
    const DyadicCube cube{K, {x, p.y, p.z}};
    const double d = norm(cube.center(eps) - ctr);
    if (d < best_d[c]) {
      best_d[c] = d;
      best_j[c] = cube.j;
    }
  }
  for (std::size_t c = 0; c < out.clusters.size(); ++c) {
    std::vector<DyadicCube> chain{{K, best_j[c]}};
    for (int k = K; k >= 1; --k) {
      const Index3 i = chain.back().j;
      bool found = false;
      Index3 plo{}, phi{};
      for (int a = 0; a < 3; ++a) {
        plo[a] = ceil_div(i[a] - span, 2);
        phi[a] = floor_div(i[a], 2);
      }
      for (int z = plo[2]; z <= phi[2] && !found; ++z)
        for (int y = plo[1]; y <= phi[1] && !found; ++y)
          for (int x = plo[0]; x <= phi[0] && !found; ++x)
            if (out.alive[k - 1].contains({x, y, z})) {
              chain.push_back({k - 1, {x, y, z}});
              found = true;
            }
      if (!found) throw NumericalError("build_chains: alive cube without an alive parent");
    }
    std::reverse(chain.begin(), chain.end());
    out.clusters[c].chain = std::move(chain);
  }
  std::sort(out.clusters.begin(), out.clusters.end(), [](const Cluster& a, const Cluster& b) { return a.centroid < b.centroid; });
  return out;
}

int max_level(const Box3& box, int min_cells_per_side) {
  if (min_cells_per_side < 1) throw DomainError("min_cells_per_side must be at least 1");
  const double h = box.max_spacing();
  const double ratio = 1.0 / (min_cells_per_side * h);
  if (ratio < 1.0) return -1;
  return static_cast<int>(std::floor(std::log2(ratio) + kLatticeTol));
}

CandidateSet localize(const VectorGrid& frame, double eps, double M, int k_max, const LocalizeOptions& opt) {
  require_eps(eps);
  if (!(M >= 0.0) || !std::isfinite(M)) throw DomainError("localize: M must be a finite nonnegative number");
  if (k_max < 0) throw DomainError("localize: k_max must be nonnegative");
  const int deepest = max_level(frame.box(), opt.min_cells_per_side);
  if (k_max > deepest)
    throw DomainError("localize: under-resolved, k_max = " + std::to_string(k_max) + " gives cubes narrower than " +
                      std::to_string(opt.min_cells_per_side) + " cell(s); suggested maximum k_max = " + std::to_string(std::max(deepest, 0)));
  const ScalarGrid speed = frame.magnitude();
  SelectOptions so;
  so.eps = eps;
  so.shape_factor = opt.shape_factor;
  so.M = M;
  so.exec = opt.exec;
  std::vector<SelectionFamily> fams;
  fams.push_back(select_f0(speed, so));
  for (int k = 1; k <= k_max; ++k) fams.push_back(select_fk(speed, k, fams.back(), so));
  return build_chains(fams, frame.box(), M);
}

}  // namespace regscan::dyadic
