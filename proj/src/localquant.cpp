#include "regscan/localquant.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "regscan/error.hpp"
#include "regscan/kernels.hpp"

namespace regscan::localquant {
namespace {

void require_ball_inside(const Box3& box, const Ball& b, const char* who) {
  if (!(b.radius > 0.0)) throw DomainError(std::string(who) + ": radius must be positive");
  const double tol = 1e-9 * box.max_spacing();
  for (int a = 0; a < 3; ++a)
    if (b.center[a] - b.radius < box.lo()[a] - tol || b.center[a] + b.radius > box.hi()[a] + tol)
      throw DomainError(std::string(who) + ": ball outside the sampled box");
}

// int_B |u|^p dx with cell-centre membership.
double ball_power(const VectorGrid& u, const Ball& b, double p) {
  const Box3& box = u.box();
  const CellRange range = bounding_cells(box, b);
  std::vector<double> mag(box.size(), 0.0);
  // magnitude only where it is needed
  for (int k = range.lo[2]; k < range.hi[2]; ++k)
    for (int j = range.lo[1]; j < range.hi[1]; ++j)
      for (int i = range.lo[0]; i < range.hi[0]; ++i) {
        const std::size_t id = box.index(i, j, k);
        const Vec3 v = u.at(id);
        mag[id] = norm(v);
      }
  return kernels::power_sum(mag, box, range, p, &b) * box.cell_volume();
}

double ball_gradient_sq(const VectorGrid& u, const Ball& b) {
  const TensorGrid g = gradient(u);
  const Box3& box = u.box();
  const CellRange range = bounding_cells(box, b);
  double s = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) s += kernels::power_sum(g.d[a][c], box, range, 2.0, &b);
  return s * box.cell_volume();
}

// Trapezoid of g(t) over [ta, tb]: window ends interpolated, interior nodes at
// frame times. Single-frame fields are constant in time.
double time_integral(const SpaceTimeField& f, double ta, double tb, const std::function<double(const VectorGrid&)>& g) {
  if (!(tb > ta)) return 0.0;
  if (f.size() == 1) return (tb - ta) * g(f.frame(0));
  if (!f.covers(ta, tb)) throw DomainError("cylinder outside data: time window not covered by frames");
  std::vector<double> t{ta};
  std::vector<double> v{g(f.frame_at(ta))};
  const auto times = f.times();
  for (std::size_t i = 0; i < f.size(); ++i)
    if (times[i] > ta && times[i] < tb) {
      t.push_back(times[i]);
      v.push_back(g(f.frame(i)));
    }
  t.push_back(tb);
  v.push_back(g(f.frame_at(tb)));
  double s = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (v[i] + v[i - 1]);
  return s;
}

}  // namespace

void AnalysisConfig::validate() const {
  if (!(M > 0.0)) throw DomainError("config: M must be positive");
  if (!(epsilon > 0.0 && epsilon < 0.25)) throw DomainError("config: epsilon must lie in (0, 1/4)");
  if (!(zeta > 0.0)) throw DomainError("config: zeta must be positive");
}

double q3(const SpaceTimeField& f, const Cylinder& c) {
  const Ball b = c.ball();
  require_ball_inside(f.box(), b, "q3");
  const double integral = time_integral(f, c.t_begin(), c.t0, [&](const VectorGrid& u) { return ball_power(u, b, 3.0); });
  return integral / (c.r * c.r);
}

E16Result criterion_e16(const VectorGrid& frame, const Vec3& x0, double r, double eps) {
  const Ball b{x0, r};
  require_ball_inside(frame.box(), b, "criterion_e16");
  if (!(eps > 0.0)) throw DomainError("criterion_e16: eps must be positive");
  const ScalarGrid mag = frame.magnitude();
  const MeasureResult m = region_measure(mag, b, eps / r);
  E16Result res;
  res.measure = m.volume;
  res.measure_ratio = m.volume / (r * r * r);
  res.pass = res.measure_ratio <= eps;
  return res;
}

CaccResult caccioppoli_sides(const SpaceTimeField& f, const Cylinder& c) {
  const Ball outer = c.ball();
  const Ball inner{c.x0, 0.5 * c.r};
  require_ball_inside(f.box(), outer, "caccioppoli_sides");
  const double h = f.box().max_spacing();
  if (c.r < 4.0 * h)
    throw DomainError("caccioppoli_sides: under-resolved, radius " + std::to_string(c.r) + " spans fewer than 4 cells (h = " +
                      std::to_string(h) + ")");
  const double r = c.r;
  const double t_inner = c.t0 - 0.25 * r * r;

  const double i103 = time_integral(f, t_inner, c.t0, [&](const VectorGrid& u) { return ball_power(u, inner, 10.0 / 3.0); });
  const double igrad = time_integral(f, t_inner, c.t0, [&](const VectorGrid& u) { return ball_gradient_sq(u, inner); });
  const double ie = time_integral(f, c.t_begin(), c.t0, [&](const VectorGrid& u) {
    const double e = ball_power(u, outer, 2.0);
    return e * e * e;
  });

  CaccResult res;
  res.lhs_integrability = std::pow(i103, 0.6) / r;
  res.lhs_gradient = igrad / r;
  res.rhs_energy = ie / std::pow(r, 5);
  res.lhs = res.lhs_integrability + res.lhs_gradient;
  res.rhs = std::cbrt(res.rhs_energy) + res.rhs_energy;
  if (res.lhs == 0.0 && res.rhs == 0.0) {
    res.both_zero = true;
    res.ratio = 0.0;
  } else {
    res.ratio = res.rhs > 0.0 ? res.lhs / res.rhs : 0.0;
  }
  return res;
}

double energy_sup(const SpaceTimeField& f, const Cylinder& c) {
  const Ball b = c.ball();
  require_ball_inside(f.box(), b, "energy_sup");
  if (f.size() == 1) return ball_power(f.frame(0), b, 2.0) / c.r;
  double best = 0.0;
  bool any = false;
  const auto times = f.times();
  for (std::size_t i = 0; i < f.size(); ++i)
    if (times[i] > c.t_begin() && times[i] <= c.t0) {
      best = std::max(best, ball_power(f.frame(i), b, 2.0));
      any = true;
    }
  if (f.covers(c.t0, c.t0)) {
    best = std::max(best, ball_power(f.frame_at(c.t0), b, 2.0));
    any = true;
  }
  if (!any) throw DomainError("energy_sup: empty time window");
  return best / c.r;
}

Vec3 interpolate(const VectorGrid& g, const Vec3& x) {
  const Box3& box = g.box();
  const double tol = 1e-12;
  std::array<int, 3> i0{};
  std::array<double, 3> w{};
  for (int a = 0; a < 3; ++a) {
    const double h = box.spacing(a);
    if (x[a] < box.lo()[a] - tol * h || x[a] > box.hi()[a] + tol * h) return {0, 0, 0};
    const int n = box.n()[a];
    const double s = std::clamp((x[a] - box.lo()[a]) / h - 0.5, 0.0, static_cast<double>(n - 1));
    if (n == 1) {
      i0[a] = 0;
      w[a] = 0.0;
      continue;
    }
    i0[a] = std::min(static_cast<int>(std::floor(s)), n - 2);
    w[a] = s - i0[a];
  }
  Vec3 out{0, 0, 0};
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const double wt = (dx ? w[0] : 1 - w[0]) * (dy ? w[1] : 1 - w[1]) * (dz ? w[2] : 1 - w[2]);
        if (wt == 0.0) continue;
        const int ii = std::min(i0[0] + dx, box.n()[0] - 1);
        const int jj = std::min(i0[1] + dy, box.n()[1] - 1);
        const int kk = std::min(i0[2] + dz, box.n()[2] - 1);
        for (int c = 0; c < 3; ++c) out[c] += wt * g(c, ii, jj, kk);
      }
  return out;
}

SpaceTimeField rescale(const SpaceTimeField& f, double lambda, const Vec3& x0, double t0,
                       const std::optional<Box3>& target_box, const std::optional<std::vector<double>>& target_times) {
  if (!(lambda > 0.0)) throw DomainError("rescale: lambda must be positive");
  const Box3& src = f.box();
  Box3 dst;
  if (target_box) {
    dst = *target_box;
  } else {
    Vec3 lo, hi;
    for (int a = 0; a < 3; ++a) {
      lo[a] = x0[a] + (src.lo()[a] - x0[a]) / lambda;
      hi[a] = x0[a] + (src.hi()[a] - x0[a]) / lambda;
    }
    dst = Box3(lo, hi, src.n());
  }
  // The target region pulled back into source coordinates must meet the source box.
  for (int a = 0; a < 3; ++a) {
    const double plo = x0[a] + lambda * (dst.lo()[a] - x0[a]);
    const double phi = x0[a] + lambda * (dst.hi()[a] - x0[a]);
    if (phi <= src.lo()[a] || plo >= src.hi()[a]) throw DomainError("rescale: rescaled domain misses the source box");
  }
  std::vector<double> times;
  if (target_times) {
    times = *target_times;
  } else {
    for (double t : f.times()) times.push_back(t0 + (t - t0) / (lambda * lambda));
  }
  std::vector<VectorGrid> frames;
  frames.reserve(times.size());
  const Index3 n = dst.n();
  for (double tp : times) {
    const double t = t0 + lambda * lambda * (tp - t0);
    VectorGrid srcframe;
    if (f.size() == 1)
      srcframe = f.frame(0);
    else if (f.covers(t, t))
      srcframe = f.frame_at(t);
    else
      throw DomainError("rescale: target time maps outside the sampled time range");
    VectorGrid out(dst);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < n[2]; ++k)
      for (int j = 0; j < n[1]; ++j)
        for (int i = 0; i < n[0]; ++i) {
          const Vec3 y = dst.center(i, j, k);
          const Vec3 x{x0[0] + lambda * (y[0] - x0[0]), x0[1] + lambda * (y[1] - x0[1]), x0[2] + lambda * (y[2] - x0[2])};
          const Vec3 v = interpolate(srcframe, x);
          for (int c = 0; c < 3; ++c) out(c, i, j, k) = lambda * v[c];
        }
    frames.push_back(std::move(out));
  }
  return SpaceTimeField(std::move(times), std::move(frames));
}

QuantReport quant_report(const SpaceTimeField& f, const Cylinder& c, const AnalysisConfig& cfg) {
  cfg.validate();
  QuantReport rep;
  rep.cylinder = c;
  rep.q3 = q3(f, c);
  rep.regular = rep.q3 <= cfg.zeta * cfg.zeta * cfg.zeta;
  const VectorGrid frame = f.size() == 1 ? f.frame(0) : f.frame_at(c.t0);
  const E16Result e = criterion_e16(frame, c.x0, c.r, cfg.epsilon);
  rep.crit_measure = e.measure_ratio;
  rep.e16_pass = e.pass;
  try {
    const CaccResult cr = caccioppoli_sides(f, c);
    rep.cacc_lhs = cr.lhs;
    rep.cacc_rhs = cr.rhs;
    rep.cacc_ratio = cr.ratio;
    rep.cacc_status = cr.both_zero ? "both-zero" : "ok";
  } catch (const DomainError& err) {
    if (std::string(err.what()).find("under-resolved") == std::string::npos) throw;
    rep.cacc_status = "under-resolved";
  }
  rep.energy_sup = energy_sup(f, c);
  return rep;
}

std::vector<QuantReport> scan(const SpaceTimeField& f, double t0, const std::vector<Vec3>& centers,
                              const std::vector<double>& radii, const AnalysisConfig& cfg) {
  cfg.validate();
  const std::size_t total = centers.size() * radii.size();
  std::vector<QuantReport> out(total);
  std::vector<std::string> errors(total);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t idx = 0; idx < total; ++idx) {
    const Cylinder c{centers[idx / radii.size()], t0, radii[idx % radii.size()]};
    try {
      out[idx] = quant_report(f, c, cfg);
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw DomainError(e);
  return out;
}

}  // namespace regscan::localquant
