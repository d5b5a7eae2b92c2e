#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "regscan/cube_set.hpp"
#include "regscan/grid.hpp"
#include "regscan/kernels.hpp"

namespace regscan::dyadic {

// Lattice cube 2^{-k}(eps j + [0,1)^3): side 2^{-k}, corner 2^{-k} eps j.
// Half-open, so a point on a shared face belongs to exactly one side.
struct DyadicCube {
  int k = 0;
  Index3 j{0, 0, 0};

  double side() const;
  Vec3 corner(double eps) const;
  Vec3 center(double eps) const;
  double diameter() const;
  bool contains(const Vec3& x, double eps) const;
  bool operator==(const DyadicCube&) const = default;
};

// Two level-k cubes meet (interiors intersect) iff |j - j'|_inf <= meet_radius.
int meet_radius(double eps);
// Child i at level k+1 lies inside parent j iff 2j <= i <= 2j + child_span per axis.
int child_span(double eps);

bool meets(const DyadicCube& a, const DyadicCube& b, double eps);
bool contained_in(const DyadicCube& child, const DyadicCube& parent, double eps);

// Lattice indices of every level-k cube whose interior meets the domain box.
CubeSet build_cover(int k, double eps, const Box3& domain);
void cover_range(int k, double eps, const Box3& domain, Index3& lo, Index3& hi);

struct LevelCertificate {
  std::uint64_t N = 0;       // |F_k|
  std::uint64_t N_d = 0;     // greedy maximal disjoint subfamily of F_k
  double measure = 0.0;      // m{|u| > 2^k eps}
  double weak_bound = 0.0;   // (2^k eps)^-3 M^3
  bool overlap_claim = true;   // N <= eps^-3 N_d
  bool overlap_exact = true;   // N <= (2 meet_radius + 1)^3 N_d
  bool disjoint_lower = true;  // N_d 2^{-3k} eps <= measure
  bool weak_upper = true;      // measure <= (2^k eps)^-3 M^3
  bool count_bound = true;     // N <= eps^-7 M^3
};

struct SelectionFamily {
  int k = 0;
  double eps = 0.1;            // lattice parameter
  double eps_criterion = 0.1;  // eps times the shape factor, used in the thresholds
  double level = 0.0;          // |u| threshold 2^k eps
  double min_measure = 0.0;    // cube measure threshold 2^{-3k} eps
  CubeSet F;
  CubeSet G;
  LevelCertificate cert;       // filled when an M is supplied
  bool regular = false;        // F empty
};

struct SelectOptions {
  double eps = 0.1;
  double shape_factor = 1.0;
  std::optional<double> M;   // enables the certificate
  kernels::Exec exec = kernels::Exec::parallel;
};

// F_0 and G_0 for the speed field |u(., t0)|.
SelectionFamily select_f0(const ScalarGrid& speed, const SelectOptions& opt);
SelectionFamily select_f0(const VectorGrid& frame, const SelectOptions& opt);
// F_k restricted to children of prev.G, and G_k.
SelectionFamily select_fk(const ScalarGrid& speed, int k, const SelectionFamily& prev, const SelectOptions& opt);
SelectionFamily select_fk(const VectorGrid& frame, int k, const SelectionFamily& prev, const SelectOptions& opt);

// Maximal pairwise non-meeting subfamily: the largest residue class of j mod
// (meet_radius + 1), then greedy extension in (z, y, x) order. The seed makes
// N <= (meet_radius + 1)^3 N_d hold by pigeonhole.
std::vector<Index3> maximal_disjoint(const CubeSet& family, double eps);

struct Cluster {
  Vec3 centroid{0, 0, 0};  // mean centre of the surviving cubes: the candidate point
  Vec3 lo{0, 0, 0};        // union bounding box
  Vec3 hi{0, 0, 0};
  std::uint64_t cubes = 0;
  bool boundary = false;   // contains a cube sticking out of the domain box
  std::vector<DyadicCube> chain;  // one nested chain E_0 > E_1 > ... > E_kmax
};

struct LevelSummary {
  int k = 0;
  std::uint64_t F = 0;
  std::uint64_t G = 0;
  std::uint64_t alive = 0;       // cubes of G_k on some nested chain from level 0
  std::uint64_t terminated = 0;  // alive cubes with no alive child: interior regular
  LevelCertificate cert;
};

struct CandidateSet {
  double eps = 0.1;
  double M = 0.0;
  int k_max = 0;
  double bound = 0.0;  // N(M) = eps^-7 M^3 + eps^-3
  bool regular_at_t0 = false;  // F_0 empty
  std::vector<LevelSummary> levels;
  std::vector<Cluster> clusters;
  std::uint64_t surviving_cubes = 0;
  std::vector<CubeSet> alive;  // per level

  std::vector<Vec3> points() const;
  bool certificate_holds() const;  // every level's overlap, measure and count inequalities
};

// Nested chains through G_0..G_kmax, merged into clusters of meeting cubes at
// k_max.
CandidateSet build_chains(const std::vector<SelectionFamily>& families, const Box3& domain, double M);

// eps^-7 M^3 + eps^-3.
double count_bound(double M, double eps);

struct LocalizeOptions {
  double shape_factor = 1.0;
  int min_cells_per_side = 1;  // finest cube side must span this many cells
  kernels::Exec exec = kernels::Exec::parallel;
};

// Deepest level whose cube side spans min_cells_per_side cells.
int max_level(const Box3& box, int min_cells_per_side);

// select_f0 -> select_fk ... -> build_chains.
CandidateSet localize(const VectorGrid& frame, double eps, double M, int k_max, const LocalizeOptions& opt = {});

}  // namespace regscan::dyadic
