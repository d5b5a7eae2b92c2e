#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "regscan/grid.hpp"

namespace regscan::stokes {

// Interior face values of a staggered (MAC) field on a box of n cells:
// component a lives on the n[a]-1 interior faces normal to axis a times the
// cells of the other two axes, x-fastest. Boundary faces are zero.
struct Faces {
  Box3 box;
  std::array<std::vector<double>, 3> f;

  explicit Faces(const Box3& b = Box3());
  static Index3 dims(const Box3& b, int axis);
  Index3 dims(int axis) const { return dims(box, axis); }
};

double dot(const Faces& a, const Faces& b);

// Cell-centred field averaged onto interior faces.
Faces faces_from_cells(const VectorGrid& F);
// Faces averaged back to cell centres (boundary faces count as zero).
VectorGrid cells_from_faces(const Faces& v);
// Discrete gradient G p = -D^T p on interior faces.
Faces face_gradient(const ScalarGrid& p);
// Discrete divergence D v on cells.
ScalarGrid face_divergence(const Faces& v);
// -Laplacian with zero velocity on the walls, by stencil.
Faces apply_minus_laplacian(const Faces& v);

struct StokesResiduals {
  double momentum = 0.0;    // ||A v + G p - F|| / ||F||
  double divergence = 0.0;  // ||D v|| / ||D A^-1 F||
  double mean_p = 0.0;      // |mean p| / rms p
  int iterations = 0;
  std::vector<double> history;  // relative divergence residual per iteration
};

// Steady Stokes -Lap v + grad p = F, div v = 0, v = 0 on the walls, mean p = 0.
struct StokesSolution {
  Faces v_faces;
  VectorGrid v;       // at cell centres
  ScalarGrid p;
  VectorGrid grad_p;  // E*_G(F) at cell centres
  StokesResiduals residuals;
};

// Reusable solver for one cube grid: -Lap on faces is diagonalized by sine
// transforms, and the pressure Schur complement D A^-1 D^T is solved by
// conjugate gradients on mean-zero pressures.
class StokesSolver {
 public:
  explicit StokesSolver(const Box3& cube);
  ~StokesSolver();
  StokesSolver(const StokesSolver&) = delete;
  StokesSolver& operator=(const StokesSolver&) = delete;

  const Box3& box() const;
  Faces solve_minus_laplacian(const Faces& rhs);
  StokesSolution solve(const Faces& F, double tol);
  StokesSolution estar(const VectorGrid& F, double tol);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// E*_G for a cell-centred F on its own box (at least 16 cells per axis).
StokesSolution estar(const VectorGrid& F, double tol);
StokesSolution estar_faces(const Faces& F, double tol);

struct LocalPressure {
  ScalarGrid ph, p1, p2;
  VectorGrid grad_ph;  // -E*(u)
  VectorGrid grad_p1;  // -E*(div(u (x) u))
  VectorGrid grad_p2;  // E*(nu Lap u)
  std::array<StokesResiduals, 3> residuals;
};

// Cube = the cells `cube` of `field`; the one-cell halo around it (when it
// exists) feeds the convective and viscous stencils, otherwise values are
// extended by copying the edge cell.
VectorGrid extract(const VectorGrid& field, const CellRange& cube);
VectorGrid convective_term(const VectorGrid& field, const CellRange& cube);
VectorGrid laplacian_term(const VectorGrid& field, const CellRange& cube);

LocalPressure pressure_parts(const VectorGrid& field, const CellRange& cube, double tol, double nu = 1.0,
                             StokesSolver* solver = nullptr);
LocalPressure pressure_parts(const VectorGrid& u, double tol, double nu = 1.0);

// ||Lap_h p|| / ||p|| over cells at least `skip` layers from the walls.
double harmonic_residual(const ScalarGrid& p, int skip = 2);
double harmonic_residual(const StokesSolution& ph_solution, const VectorGrid& u);

// Smooth bump phi(x, t) = psi(|x - c| / R) b(t), psi(rho) = exp(1 - 1/(1 - rho^2)),
// b the same profile on (t_begin, t_end). The energy identity is evaluated at
// time s.
struct BumpTest {
  Vec3 center{0, 0, 0};
  double radius = 1.0;
  double t_begin = 0.0;
  double t_end = 1.0;
  double s = 1.0;

  double value(const Vec3& x, double t) const;
  Vec3 grad(const Vec3& x, double t) const;
  double laplacian(const Vec3& x, double t) const;
  double dt(const Vec3& x, double t) const;
};

struct LocalEnergyResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;           // rhs - lhs
  double relative_slack = 0.0;  // slack / sum of |terms|
  double eta = 0.0;             // discretization budget: time Richardson + divergence terms
  double eta_relative = 0.0;
  // terms of the identity
  double energy_at_s = 0.0;      // int |v(s)|^2 phi(s)
  double dissipation = 0.0;      // 2 nu int int |grad v|^2 phi
  double heat = 0.0;             // int int |v|^2 (phi_t + nu Lap phi)
  double transport = 0.0;        // int int |v|^2 (v - grad p_h) . grad phi
  double pressure_hessian = 0.0; // 2 int int (v_i v_j - v_i d_j p_h) d_ij p_h phi
  double pressure_flux = 0.0;    // 2 int int (p1 + p2) v . grad phi
  int frames_used = 0;
};

LocalEnergyResult local_energy_residual(const SpaceTimeField& f, const CellRange& cube, const BumpTest& phi, double nu,
                                        double tol);

struct RigidityRow {
  double R = 0.0;
  double grad = 0.0;               // |grad f(x0)|
  double integral = 0.0;           // int_{B_R} |f|
  double mean_value_bound = 0.0;   // (36/pi) R^-4 int_{B_R} |f|
  double layer_cake_bound = 0.0;   // (36/pi) R^-4 (m(B_R) H + M^3 / (2 H^2)), H = 1/R
  bool truncated = false;          // ball sticks out of the grid; integral over the part inside
};

struct RigidityReport {
  Vec3 x0{0, 0, 0};
  double M = 0.0;
  std::vector<RigidityRow> rows;
  double slope = 0.0;             // least-squares d log(mean_value_bound) / d log R
  double layer_cake_slope = 0.0;
};

constexpr double kMeanValueConstant = 36.0 / 3.14159265358979323846;

RigidityReport harmonic_rigidity_check(const ScalarGrid& f, const Vec3& x0, const std::vector<double>& radii,
                                       std::optional<double> M = std::nullopt);

// Radius where the candidate's mean-value bound drops below the control's,
// log-log interpolated between sampled radii.
std::optional<double> crossover_radius(const RigidityReport& candidate, const RigidityReport& control);

}  // namespace regscan::stokes
