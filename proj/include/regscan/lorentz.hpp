#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "regscan/grid.hpp"
#include "regscan/kernels.hpp"

namespace regscan::lorentz {

// Distribution function of |f| sampled at its distinct nonzero values.
// measures[i] = (cells with |f| >= levels[i]) * cell volume.
struct LevelSetProfile {
  std::vector<double> levels;    // strictly decreasing
  std::vector<double> measures;  // nondecreasing
  double cell_volume = 0.0;
};

LevelSetProfile distribution(const ScalarGrid& f, kernels::Exec exec = kernels::Exec::parallel);

// sup_h h m{|f|>h}^{1/q}; attained at sample values.
double weak_norm(const ScalarGrid& f, double q, kernels::Exec exec = kernels::Exec::parallel);
double weak_norm_sorted(std::span<const double> sorted_desc, double cell_volume, double q);

// sup over super-level sets E of m(E)^{1/q} (avg_E |f|^r)^{1/r}, 0 < r < q.
double equivalent_norm(const ScalarGrid& f, double q, double r, kernels::Exec exec = kernels::Exec::parallel);
double equivalent_norm_sorted(std::span<const double> sorted_desc, double cell_volume, double q, double r);

// (sum |f|^p cellvol)^{1/p}; p = infinity gives max |f|.
double lp_norm(const ScalarGrid& f, double p, kernels::Exec exec = kernels::Exec::parallel);

// q * int_0^inf h^{q-1} m(h) dh on the piecewise-constant profile.
double layer_cake_integral(const LevelSetProfile& profile, double q);

// max over sample levels of h^p m(h) / ||f||_p^p. Chebyshev says <= 1.
double chebyshev_ratio(const ScalarGrid& f, double p);

struct NormReport {
  double q = 3.0;
  double r = 1.0;
  double weak_norm = 0.0;
  double equivalent_norm = 0.0;
  double equivalence_bound = 1.0;  // (q/(q-r))^{1/r}
  std::map<std::string, double> lp_norms;
};

NormReport norm_report(const ScalarGrid& f, double q, double r);

struct L4Report {
  double lhs = 0.0;         // int |f|^4
  double rhs = 0.0;         // constant * M^2 ||f||_6^2
  double constant = 6.0;    // from the split 4 [M^3 H + ||f||_6^6 / (2 H^2)] at H*
  double h_star = 0.0;      // M^{-1} ||f||_6^2
  double l6_norm = 0.0;
  double weak_norm = 0.0;
  double M = 0.0;
  bool hypothesis = true;   // weak_norm(f,3) <= M
  bool holds = true;
};

L4Report l4_interpolation_check(const ScalarGrid& f, double M);

struct LocalL2Report {
  double lhs = 0.0;           // int_B |f|^2
  double bound = 0.0;         // m(B) H^2 + 2 M^3 / H at H = M / r
  double constant = 0.0;      // bound / (M^2 r)
  double H = 0.0;
  double ball_measure = 0.0;  // cell-centre measure of B
  double weak_norm = 0.0;
  double M = 0.0;
  bool hypothesis = true;
  bool holds = true;
};

LocalL2Report local_l2_check(const ScalarGrid& f, const Ball& ball, double M);

}  // namespace regscan::lorentz
