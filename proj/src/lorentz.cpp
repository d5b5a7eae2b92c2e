#include "regscan/lorentz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "regscan/error.hpp"

namespace regscan::lorentz {
namespace {

constexpr double kRoundoff = 1e-12;

void require_finite(const ScalarGrid& f) {
  if (!f.all_finite()) throw DomainError("field contains non-finite values");
}

}  // namespace

LevelSetProfile distribution(const ScalarGrid& f, kernels::Exec exec) {
  require_finite(f);
  const double cv = f.box().cell_volume();
  const std::vector<double> v = kernels::sorted_abs_descending(f.data(), exec);
  LevelSetProfile p;
  p.cell_volume = cv;
  std::size_t i = 0;
  while (i < v.size() && v[i] > 0.0) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    p.levels.push_back(v[i]);
    p.measures.push_back(static_cast<double>(j) * cv);
    i = j;
  }
  if (p.levels.empty()) {
    p.levels.push_back(0.0);
    p.measures.push_back(static_cast<double>(v.size()) * cv);
  }
  return p;
}

double weak_norm_sorted(std::span<const double> v, double cv, double q) {
  if (!(q > 0.0)) throw DomainError("weak_norm: exponent q must be positive");
  double best = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] <= 0.0) break;
    best = std::max(best, v[i] * std::pow(static_cast<double>(i + 1) * cv, 1.0 / q));
  }
  return best;
}

double weak_norm(const ScalarGrid& f, double q, kernels::Exec exec) {
  if (!(q > 0.0)) throw DomainError("weak_norm: exponent q must be positive");
  require_finite(f);
  const auto v = kernels::sorted_abs_descending(f.data(), exec);
  return weak_norm_sorted(v, f.box().cell_volume(), q);
}

double equivalent_norm_sorted(std::span<const double> v, double cv, double q, double r) {
  if (!(r > 0.0) || !(r < q)) throw DomainError("equivalent_norm: need 0 < r < q");
  double best = 0.0;
  double prefix = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] <= 0.0) break;
    prefix += std::pow(v[i], r);
    const double n = static_cast<double>(i + 1);
    best = std::max(best, std::pow(n * cv, 1.0 / q) * std::pow(prefix / n, 1.0 / r));
  }
  return best;
}

double equivalent_norm(const ScalarGrid& f, double q, double r, kernels::Exec exec) {
  if (!(r > 0.0) || !(r < q)) throw DomainError("equivalent_norm: need 0 < r < q");
  require_finite(f);
  const auto v = kernels::sorted_abs_descending(f.data(), exec);
  return equivalent_norm_sorted(v, f.box().cell_volume(), q, r);
}

double lp_norm(const ScalarGrid& f, double p, kernels::Exec exec) {
  if (!(p > 0.0)) throw DomainError("lp_norm: exponent must be positive");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : f.data()) m = std::max(m, std::abs(x));
    return m;
  }
  const double s = kernels::power_sum(f.data(), f.box(), CellRange::all(f.box()), p, nullptr, exec);
  return std::pow(s * f.box().cell_volume(), 1.0 / p);
}

double layer_cake_integral(const LevelSetProfile& profile, double q) {
  kernels::CompensatedSum acc;
  const std::size_t n = profile.levels.size();
  for (std::size_t i = 0; i < n; ++i) {
    const long double hi = std::pow(static_cast<long double>(profile.levels[i]), static_cast<long double>(q));
    const long double lo =
        i + 1 < n ? std::pow(static_cast<long double>(profile.levels[i + 1]), static_cast<long double>(q)) : 0.0L;
    acc.add(static_cast<double>(static_cast<long double>(profile.measures[i]) * (hi - lo)));
  }
  return acc.value();
}

double chebyshev_ratio(const ScalarGrid& f, double p) {
  const double norm_p = kernels::power_sum(f.data(), f.box(), CellRange::all(f.box()), p, nullptr) *
                        f.box().cell_volume();
  if (norm_p == 0.0) return 0.0;
  const LevelSetProfile prof = distribution(f);
  double worst = 0.0;
  for (std::size_t i = 0; i < prof.levels.size(); ++i)
    worst = std::max(worst, std::pow(prof.levels[i], p) * prof.measures[i] / norm_p);
  return worst;
}

NormReport norm_report(const ScalarGrid& f, double q, double r) {
  if (!(q > 0.0)) throw DomainError("norms: q must be positive");
  if (!(r > 0.0) || !(r < q)) throw DomainError("norms: need 0 < r < q");
  require_finite(f);
  NormReport rep;
  rep.q = q;
  rep.r = r;
  const auto v = kernels::sorted_abs_descending(f.data());
  const double cv = f.box().cell_volume();
  rep.weak_norm = weak_norm_sorted(v, cv, q);
  rep.equivalent_norm = equivalent_norm_sorted(v, cv, q, r);
  rep.equivalence_bound = std::pow(q / (q - r), 1.0 / r);
  for (double p : {1.0, 2.0, 3.0, 4.0, 6.0}) rep.lp_norms["L" + std::to_string(static_cast<int>(p))] = lp_norm(f, p);
  rep.lp_norms["Linf"] = v.empty() ? 0.0 : v.front();
  return rep;
}

L4Report l4_interpolation_check(const ScalarGrid& f, double M) {
  if (!(M >= 0.0)) throw DomainError("l4 check: M must be nonnegative");
  require_finite(f);
  L4Report rep;
  rep.M = M;
  const double cv = f.box().cell_volume();
  const CellRange all = CellRange::all(f.box());
  rep.lhs = kernels::power_sum(f.data(), f.box(), all, 4.0, nullptr) * cv;
  const double l6_6 = kernels::power_sum(f.data(), f.box(), all, 6.0, nullptr) * cv;
  rep.l6_norm = std::pow(l6_6, 1.0 / 6.0);
  rep.weak_norm = weak_norm(f, 3.0);
  rep.hypothesis = rep.weak_norm <= M * (1.0 + kRoundoff);
  if (l6_6 == 0.0) {
    rep.rhs = 0.0;
    rep.h_star = 0.0;
  } else if (M == 0.0) {
    rep.rhs = 0.0;
    rep.h_star = std::numeric_limits<double>::infinity();
  } else {
    rep.h_star = rep.l6_norm * rep.l6_norm / M;
    const double H = rep.h_star;
    rep.rhs = 4.0 * (M * M * M * H + l6_6 / (2.0 * H * H));
  }
  rep.holds = rep.lhs <= rep.rhs * (1.0 + kRoundoff);
  return rep;
}

LocalL2Report local_l2_check(const ScalarGrid& f, const Ball& ball, double M) {
  const Box3& box = f.box();
  if (!(ball.radius > 0.0)) throw DomainError("local_l2_check: radius must be positive");
  const double tol = 1e-12 * box.max_spacing();
  for (int a = 0; a < 3; ++a)
    if (ball.center[a] - ball.radius < box.lo()[a] - tol || ball.center[a] + ball.radius > box.hi()[a] + tol)
      throw DomainError("local_l2_check: ball outside domain");
  if (!(M >= 0.0)) throw DomainError("local_l2_check: M must be nonnegative");
  require_finite(f);
  LocalL2Report rep;
  rep.M = M;
  const double cv = box.cell_volume();
  const CellRange range = bounding_cells(box, ball);
  rep.lhs = kernels::power_sum(f.data(), box, range, 2.0, &ball) * cv;
  const std::vector<double> ones(box.size(), 1.0);
  rep.ball_measure = static_cast<double>(kernels::count_above(ones, box, range, 0.0, &ball)) * cv;
  rep.H = M / ball.radius;
  // bound = C M^2 r; at M = 0 this is the limit 0
  rep.constant = rep.ball_measure / (ball.radius * ball.radius * ball.radius) + 2.0;
  rep.bound = rep.constant * M * M * ball.radius;
  rep.weak_norm = weak_norm(f, 3.0);
  rep.hypothesis = rep.weak_norm <= M * (1.0 + kRoundoff);
  rep.holds = rep.lhs <= rep.bound * (1.0 + kRoundoff);
  return rep;
}

}  // namespace regscan::lorentz
