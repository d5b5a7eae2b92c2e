#pragma once

#include <optional>
#include <string>
#include <vector>

#include "regscan/grid.hpp"

namespace regscan::localquant {

struct AnalysisConfig {
  double M = 1.0;        // weak-L3 bound
  double epsilon = 0.1;  // criterion parameter, must lie in (0, 1/4)
  double zeta = 1.0;     // eps-regularity threshold; no value is known, so it is a knob
  void validate() const;
};

// Space-time integrals use the trapezoid rule over the frame times inside the
// window plus the two window ends (linearly interpolated in time). A field
// with a single frame is treated as time-independent.

// r^-2 int_{Q(z0,r)} |u|^3 dz.
double q3(const SpaceTimeField& f, const Cylinder& c);

struct E16Result {
  double measure = 0.0;        // m{x in B(x0,r) : |u| > eps/r}
  double measure_ratio = 0.0;  // r^-3 measure
  bool pass = true;            // measure_ratio <= eps
};

E16Result criterion_e16(const VectorGrid& frame, const Vec3& x0, double r, double eps);

struct CaccResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;      // lhs / rhs; 0 when both sides vanish
  bool both_zero = false;  // reported as the sentinel "both-zero"
  double lhs_integrability = 0.0;  // r^-1 (int_{Q(r/2)} |u|^{10/3})^{3/5}
  double lhs_gradient = 0.0;       // r^-1 int_{Q(r/2)} |grad u|^2
  double rhs_energy = 0.0;         // r^-5 int (int_B |u|^2)^3 dt
};

// Needs the cylinder radius to span at least 4 cells (B(x0, r/2) resolved).
CaccResult caccioppoli_sides(const SpaceTimeField& f, const Cylinder& c);

// r^-1 max over frame times in (t0 - r^2, t0] (and t0 itself) of int_B |u|^2.
double energy_sup(const SpaceTimeField& f, const Cylinder& c);

// lambda u(x0 + lambda (x - x0), t0 + lambda^2 (t - t0)), resampled trilinearly
// in space and linearly in time. Without an explicit target the source grid is
// mapped onto itself (box shrinks by 1/lambda, times by 1/lambda^2), where the
// resample is exact. Target points outside the source box get zero.
SpaceTimeField rescale(const SpaceTimeField& f, double lambda, const Vec3& x0, double t0,
                       const std::optional<Box3>& target_box = std::nullopt,
                       const std::optional<std::vector<double>>& target_times = std::nullopt);

// Trilinear interpolation of a frame at x; zero outside the box, clamped to the
// outermost cell centres in the half-cell boundary layer.
Vec3 interpolate(const VectorGrid& g, const Vec3& x);

struct QuantReport {
  Cylinder cylinder;
  double q3 = 0.0;
  bool regular = true;  // q3 <= zeta^3
  double crit_measure = 0.0;
  bool e16_pass = true;
  double cacc_lhs = 0.0;
  double cacc_rhs = 0.0;
  double cacc_ratio = 0.0;
  std::string cacc_status = "ok";  // ok | both-zero | under-resolved
  double energy_sup = 0.0;
};

QuantReport quant_report(const SpaceTimeField& f, const Cylinder& c, const AnalysisConfig& cfg);

// Every (centre, radius) pair at time t0. Evaluated in parallel, returned in
// centre-major, radius-minor order.
std::vector<QuantReport> scan(const SpaceTimeField& f, double t0, const std::vector<Vec3>& centers,
                              const std::vector<double>& radii, const AnalysisConfig& cfg);

}  // namespace regscan::localquant
