#include "regscan/cube_set.hpp"

#include <algorithm>

#include "regscan/error.hpp"

namespace regscan::dyadic {
namespace {

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
int ceil_div(int a, int b) { return -floor_div(-a, b); }

const std::vector<Interval> kEmptyLine;

// Image of a set under a separable monotone relation v -> [lo(v), hi(v)],
// applied on x, then y, then z. Consecutive images must overlap or touch.
template <class Lo, class Hi>
CubeSet expand(const CubeSet& s, Lo lo, Hi hi) {
  if (s.empty()) return {};
  // x
  CubeSet sx(s.y0(), s.y1(), s.z0(), s.z1());
  for (int z = s.z0(); z <= s.z1(); ++z)
    for (int y = s.y0(); y <= s.y1(); ++y) {
      const auto& src = s.line(y, z);
      if (src.empty()) continue;
      auto& dst = sx.line(y, z);
      dst.reserve(src.size());
      for (const auto& r : src) dst.push_back({lo(r.a), hi(r.b)});
      normalize(dst);
    }
  // y
  CubeSet sy(lo(s.y0()), hi(s.y1()), s.z0(), s.z1());
  for (int z = s.z0(); z <= s.z1(); ++z)
    for (int y = s.y0(); y <= s.y1(); ++y) {
      const auto& src = sx.line(y, z);
      if (src.empty()) continue;
      for (int t = lo(y); t <= hi(y); ++t) {
        auto& dst = sy.line(t, z);
        dst.insert(dst.end(), src.begin(), src.end());
      }
    }
  for (int z = sy.z0(); z <= sy.z1(); ++z)
    for (int y = sy.y0(); y <= sy.y1(); ++y) normalize(sy.line(y, z));
  // z
  CubeSet sz(sy.y0(), sy.y1(), lo(s.z0()), hi(s.z1()));
  for (int z = sy.z0(); z <= sy.z1(); ++z)
    for (int y = sy.y0(); y <= sy.y1(); ++y) {
      const auto& src = sy.line(y, z);
      if (src.empty()) continue;
      for (int t = lo(z); t <= hi(z); ++t) {
        auto& dst = sz.line(y, t);
        dst.insert(dst.end(), src.begin(), src.end());
      }
    }
  for (int z = sz.z0(); z <= sz.z1(); ++z)
    for (int y = sz.y0(); y <= sz.y1(); ++y) normalize(sz.line(y, z));
  return sz;
}

}  // namespace

void normalize(std::vector<Interval>& runs) {
  if (runs.size() < 2) return;
  std::sort(runs.begin(), runs.end(), [](const Interval& p, const Interval& q) { return p.a < q.a; });
  std::size_t w = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (runs[i].a <= runs[w].b + 1)
      runs[w].b = std::max(runs[w].b, runs[i].b);
    else
      runs[++w] = runs[i];
  }
  runs.resize(w + 1);
}

CubeSet::CubeSet(int y0, int y1, int z0, int z1)
    : y0_(y0), ny_(std::max(0, y1 - y0 + 1)), z0_(z0), nz_(std::max(0, z1 - z0 + 1)) {
  lines_.resize(static_cast<std::size_t>(ny_) * static_cast<std::size_t>(nz_));
}

CubeSet CubeSet::box(const Index3& lo, const Index3& hi) {
  if (hi[0] < lo[0] || hi[1] < lo[1] || hi[2] < lo[2]) return {};
  CubeSet s(lo[1], hi[1], lo[2], hi[2]);
  for (auto& l : s.lines_) l.push_back({lo[0], hi[0]});
  return s;
}

bool CubeSet::empty() const {
  return std::all_of(lines_.begin(), lines_.end(), [](const auto& l) { return l.empty(); });
}

std::uint64_t CubeSet::count() const {
  std::uint64_t c = 0;
  for (const auto& l : lines_)
    for (const auto& r : l) c += static_cast<std::uint64_t>(r.b - r.a + 1);
  return c;
}

const std::vector<Interval>& CubeSet::line(int y, int z) const {
  if (!in_range(y, z)) return kEmptyLine;
  return lines_[slot(y, z)];
}

std::vector<Interval>& CubeSet::line(int y, int z) {
  if (!in_range(y, z)) throw DomainError("cube set: line outside bounding range");
  return lines_[slot(y, z)];
}

bool CubeSet::contains(const Index3& j) const {
  const auto& l = line(j[1], j[2]);
  auto it = std::upper_bound(l.begin(), l.end(), j[0], [](int x, const Interval& r) { return x < r.a; });
  if (it == l.begin()) return false;
  --it;
  return j[0] <= it->b;
}

bool CubeSet::bounds(Index3& lo, Index3& hi) const {
  bool any = false;
  for (int z = z0_; z < z0_ + nz_; ++z)
    for (int y = y0_; y < y0_ + ny_; ++y) {
      const auto& l = lines_[slot(y, z)];
      if (l.empty()) continue;
      if (!any) {
        lo = {l.front().a, y, z};
        hi = {l.back().b, y, z};
        any = true;
      }
      lo = {std::min(lo[0], l.front().a), std::min(lo[1], y), std::min(lo[2], z)};
      hi = {std::max(hi[0], l.back().b), std::max(hi[1], y), std::max(hi[2], z)};
    }
  return any;
}

CubeSet CubeSet::dilate(int m) const {
  return expand(*this, [m](int v) { return v - m; }, [m](int v) { return v + m; });
}

CubeSet CubeSet::children(int m) const {
  return expand(*this, [](int v) { return 2 * v; }, [m](int v) { return 2 * v + m; });
}

CubeSet CubeSet::parents(int m) const {
  return expand(*this, [m](int v) { return ceil_div(v - m, 2); }, [](int v) { return floor_div(v, 2); });
}

CubeSet CubeSet::intersect(const CubeSet& o) const {
  const int ya = std::max(y0_, o.y0_), yb = std::min(y1(), o.y1());
  const int za = std::max(z0_, o.z0_), zb = std::min(z1(), o.z1());
  if (ya > yb || za > zb) return {};
  CubeSet out(ya, yb, za, zb);
  for (int z = za; z <= zb; ++z)
    for (int y = ya; y <= yb; ++y) {
      const auto& p = line(y, z);
      const auto& q = o.line(y, z);
      auto& d = out.line(y, z);
      std::size_t i = 0, k = 0;
      while (i < p.size() && k < q.size()) {
        const int a = std::max(p[i].a, q[k].a);
        const int b = std::min(p[i].b, q[k].b);
        if (a <= b) d.push_back({a, b});
        if (p[i].b < q[k].b)
          ++i;
        else
          ++k;
      }
    }
  return out;
}

CubeSet CubeSet::clip(const Index3& lo, const Index3& hi) const { return intersect(box(lo, hi)); }

CubeSet CubeSet::filter(const std::function<bool(int, int, int)>& keep) const {
  CubeSet out(y0_, y1(), z0_, z1());
  for (int z = z0_; z < z0_ + nz_; ++z)
    for (int y = y0_; y < y0_ + ny_; ++y) {
      const auto& src = lines_[slot(y, z)];
      auto& dst = out.lines_[slot(y, z)];
      for (const auto& r : src) {
        int start = 0;
        bool open = false;
        for (int x = r.a; x <= r.b; ++x) {
          const bool k = keep(x, y, z);
          if (k && !open) {
            start = x;
            open = true;
          } else if (!k && open) {
            dst.push_back({start, x - 1});
            open = false;
          }
        }
        if (open) dst.push_back({start, r.b});
      }
    }
  return out;
}

void CubeSet::for_each_run(const std::function<void(int, int, const Interval&)>& f) const {
  for (int z = z0_; z < z0_ + nz_; ++z)
    for (int y = y0_; y < y0_ + ny_; ++y)
      for (const auto& r : lines_[slot(y, z)]) f(y, z, r);
}

std::vector<Index3> CubeSet::members() const {
  std::vector<Index3> out;
  for_each_run([&](int y, int z, const Interval& r) {
    for (int x = r.a; x <= r.b; ++x) out.push_back({x, y, z});
  });
  return out;
}

void CubeSet::insert(int y, int z, Interval run) {
  auto& l = line(y, z);
  l.push_back(run);
  normalize(l);
}

bool CubeSet::operator==(const CubeSet& o) const {
  Index3 a{}, b{}, c{}, d{};
  const bool ea = !bounds(a, b), eb = !o.bounds(c, d);
  if (ea || eb) return ea && eb;
  if (a != c || b != d) return false;
  for (int z = a[2]; z <= b[2]; ++z)
    for (int y = a[1]; y <= b[1]; ++y)
      if (line(y, z) != o.line(y, z)) return false;
  return true;
}

}  // namespace regscan::dyadic
