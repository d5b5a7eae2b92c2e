#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "regscan/error.hpp"
#include "regscan/stokes.hpp"
#include "regscan/synth.hpp"

using namespace regscan;
using namespace regscan::stokes;

namespace {

constexpr double kPi = std::numbers::pi;

Box3 unit(int n) { return Box3({0, 0, 0}, {1, 1, 1}, {n, n, n}); }

double l2(const VectorGrid& g) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c)
    for (double x : g.component(c)) s += x * x;
  return std::sqrt(s);
}

double l2(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

double diff(const VectorGrid& a, const VectorGrid& b) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.box().size(); ++i) {
      const double d = a.component(c)[i] - b.component(c)[i];
      s += d * d;
    }
  return std::sqrt(s);
}

Faces random_faces(const Box3& b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Faces f(b);
  for (auto& comp : f.f)
    for (double& x : comp) x = g(rng);
  return f;
}

ScalarGrid random_scalar(const Box3& b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  ScalarGrid p(b);
  for (double& x : p.data()) x = g(rng);
  return p;
}

void remove_mean(std::span<double> p) {
  double m = 0.0;
  for (double x : p) m += x;
  m /= static_cast<double>(p.size());
  for (double& x : p) x -= m;
}

// grad of cos(pi x) cos(pi y) cos(pi z): zero normal derivative on the unit cube
VectorGrid manufactured_gradient(const Box3& b) {
  return synth::sample(b, [](const Vec3& x) {
    const double cx = std::cos(kPi * x[0]), cy = std::cos(kPi * x[1]), cz = std::cos(kPi * x[2]);
    const double sx = std::sin(kPi * x[0]), sy = std::sin(kPi * x[1]), sz = std::sin(kPi * x[2]);
    return Vec3{-kPi * sx * cy * cz, -kPi * cx * sy * cz, -kPi * cx * cy * sz};
  });
}

}  // namespace

TEST_CASE("face layout and the discrete gradient is minus the transpose of the divergence") {
  const Box3 b({0, 0, 0}, {1, 2, 3}, {16, 17, 18});
  const Faces f(b);
  CHECK(f.dims(0) == Index3{15, 17, 18});
  CHECK(f.dims(1) == Index3{16, 16, 18});
  CHECK(f.dims(2) == Index3{16, 17, 17});
  CHECK(f.f[1].size() == 16u * 16u * 18u);

  const Faces v = random_faces(b, 1);
  const ScalarGrid p = random_scalar(b, 2);
  const double lhs = dot(face_gradient(p), v);
  const ScalarGrid dv = face_divergence(v);
  double rhs = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) rhs -= p.data()[i] * dv.data()[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("the sine-transform inverse matches the stencil operator") {
  const Box3 b({0, 0, 0}, {1.0, 1.3, 0.8}, {16, 20, 18});
  StokesSolver s(b);
  const Faces r = random_faces(b, 3);
  const Faces x = s.solve_minus_laplacian(r);
  const Faces back = apply_minus_laplacian(x);
  double err = 0.0;
  for (int a = 0; a < 3; ++a)
    for (std::size_t i = 0; i < r.f[a].size(); ++i) err = std::max(err, std::abs(back.f[a][i] - r.f[a][i]));
  CHECK(err < 1e-9);
  // symmetric positive definite
  const Faces y = random_faces(b, 4);
  CHECK(dot(apply_minus_laplacian(x), y) == doctest::Approx(dot(x, apply_minus_laplacian(y))).epsilon(1e-11));
  CHECK(dot(apply_minus_laplacian(x), x) > 0.0);
}

TEST_CASE("zero forcing gives the zero solution") {
  const auto s = estar(VectorGrid(unit(16)), 1e-10);
  CHECK(l2(s.grad_p) == 0.0);
  CHECK(l2(s.p.data()) == 0.0);
  CHECK(l2(s.v) == 0.0);
  CHECK(s.residuals.iterations == 0);
}

TEST_CASE("discrete gradients are reproduced exactly and the projection is idempotent") {
  const Box3 b = unit(16);
  ScalarGrid q = random_scalar(b, 5);
  remove_mean(q.data());
  const auto s = estar_faces(face_gradient(q), 1e-12);
  double err = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) err = std::max(err, std::abs(s.p.data()[i] - q.data()[i]));
  CHECK(err < 1e-8 * l2(q.data()));
  CHECK(std::sqrt(dot(s.v_faces, s.v_faces)) < 1e-8 * l2(q.data()));
  CHECK(s.residuals.momentum < 1e-10);
  CHECK(s.residuals.divergence < 1e-12);
  CHECK(s.residuals.mean_p < 1e-12);

  // E*(E*(F)) = E*(F) on faces
  const Faces F = random_faces(b, 6);
  const auto s1 = estar_faces(F, 1e-12);
  const auto s2 = estar_faces(face_gradient(s1.p), 1e-12);
  double d = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) d = std::max(d, std::abs(s2.p.data()[i] - s1.p.data()[i]));
  CHECK(d < 1e-8 * l2(s1.p.data()));
  // the velocity is discretely solenoidal
  CHECK(l2(face_divergence(s1.v_faces).data()) < 1e-10 * std::sqrt(dot(F, F)) * 16);
}

TEST_CASE("idempotence on a manufactured pressure converges at second order") {
  double prev = 0.0;
  for (int n : {16, 32}) {
    const Box3 b = unit(n);
    const VectorGrid gp = manufactured_gradient(b);
    const auto s = estar(gp, 1e-8);
    const double rel = diff(s.grad_p, gp) / l2(gp);
    if (prev > 0.0) CHECK(prev / rel > 3.5);
    prev = rel;
    CHECK(s.residuals.divergence < 1e-8);
    CHECK(s.residuals.momentum < 1e-8);
  }
  CHECK(prev < 3e-3);
}

TEST_CASE("the projection is linear and bounded under refinement") {
  const Box3 b = unit(16);
  const VectorGrid F = synth::sample(b, [](const Vec3& x) { return Vec3{std::sin(3 * x[1]), x[0] * x[2], std::cos(2 * x[0] + x[1])}; });
  const VectorGrid G = synth::sample(b, [](const Vec3& x) { return Vec3{x[2], std::exp(x[0]), -x[1] * x[1]}; });
  VectorGrid H(b);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < b.size(); ++i) H.component(c)[i] = 2.0 * F.component(c)[i] - 0.5 * G.component(c)[i];
  const auto sf = estar(F, 1e-12), sg = estar(G, 1e-12), sh = estar(H, 1e-12);
  VectorGrid comb(b);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < b.size(); ++i) comb.component(c)[i] = 2.0 * sf.grad_p.component(c)[i] - 0.5 * sg.grad_p.component(c)[i];
  CHECK(diff(sh.grad_p, comb) < 1e-9 * l2(sh.grad_p));

  // ||grad p|| / ||F|| stays put as the grid is refined
  std::vector<double> ratios;
  for (int n : {16, 24, 32}) {
    const Box3 bn = unit(n);
    const VectorGrid Fn = synth::sample(bn, [](const Vec3& x) { return Vec3{std::sin(3 * x[1]), x[0] * x[2], std::cos(2 * x[0] + x[1])}; });
    ratios.push_back(l2(estar(Fn, 1e-10).grad_p) / l2(Fn));
  }
  for (double r : ratios) {
    CHECK(r < 1.5);
    CHECK(std::abs(r - ratios.back()) < 0.05 * ratios.back());
  }
}

TEST_CASE("pressure parts of a rigid rotation") {
  // u = w e3 x x: div(u (x) u) = -w^2 (x, y, 0) = grad(-w^2 r^2 / 2), Lap u = 0
  const double w = 1.5;
  const Box3 b({-1, -1, -1}, {1, 1, 1}, {20, 20, 20});
  const VectorGrid u = synth::sample(b, [&](const Vec3& x) { return Vec3{-w * x[1], w * x[0], 0.0}; });
  const auto lp = pressure_parts(u, CellRange{{2, 2, 2}, {18, 18, 18}}, 1e-12, 0.3);
  const Box3& cb = lp.p1.box();
  ScalarGrid expect(cb);
  for (int k = 0; k < 16; ++k)
    for (int j = 0; j < 16; ++j)
      for (int i = 0; i < 16; ++i) {
        const Vec3 x = cb.center(i, j, k);
        expect(i, j, k) = 0.5 * w * w * (x[0] * x[0] + x[1] * x[1]);
      }
  remove_mean(expect.data());
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < cb.size(); ++i) {
    err = std::max(err, std::abs(lp.p1.data()[i] - expect.data()[i]));
    ref = std::max(ref, std::abs(expect.data()[i]));
  }
  CHECK(err < 1e-8 * ref);
  CHECK(l2(lp.p2.data()) < 1e-10);
  CHECK(l2(lp.grad_p2) < 1e-10);
  for (const auto& r : lp.residuals) CHECK(r.mean_p < 1e-10);
}

TEST_CASE("cube helpers read the halo and clamp at the field edge") {
  const Box3 b({0, 0, 0}, {1, 1, 1}, {20, 20, 20});
  const VectorGrid u = synth::sample(b, [](const Vec3& x) { return Vec3{x[0] * x[1], x[2] * x[2], 1.0 + x[0]}; });
  const CellRange inner{{2, 2, 2}, {18, 18, 18}};
  const VectorGrid e = extract(u, inner);
  CHECK(e.box().n() == Index3{16, 16, 16});
  CHECK(e(0, 0, 0, 0) == u(0, 2, 2, 2));
  const VectorGrid lap = laplacian_term(u, inner);
  // Lap of (xy, z^2, 1+x) is (0, 2, 0), exact for quadratics
  for (std::size_t i = 0; i < e.box().size(); ++i) {
    CHECK(lap.component(0)[i] == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
    CHECK(lap.component(1)[i] == doctest::Approx(2.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(extract(u, CellRange{{0, 0, 0}, {21, 20, 20}}), DomainError);
}

TEST_CASE("harmonic residual of p_h drops under refinement for solenoidal data, not for a gradient") {
  synth::Spectrum sp;
  sp.k_min = 1;
  sp.k_max = 4;
  const VectorGrid u64 = synth::random_solenoidal(1, sp, synth::periodic_box(64));
  VectorGrid u32(synth::periodic_box(32));
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 32; ++k)
      for (int j = 0; j < 32; ++j)
        for (int i = 0; i < 32; ++i) u32(c, i, j, k) = u64(c, 2 * i, 2 * j, 2 * k);
  const auto r64 = harmonic_residual(pressure_parts(u64, CellRange{{16, 16, 16}, {48, 48, 48}}, 1e-10).ph);
  const auto r32 = harmonic_residual(pressure_parts(u32, CellRange{{8, 8, 8}, {24, 24, 24}}, 1e-10).ph);
  CHECK(r32 / r64 >= 3.0);

  // control: u = grad(phi) with Lap phi != 0 has p_h ~ -phi, far from harmonic
  auto gradfield = [](const Box3& b) {
    return synth::sample(b, [](const Vec3& x) {
      return Vec3{std::cos(x[0]) * std::sin(x[1]), std::sin(x[0]) * std::cos(x[1]), 0.5 * std::cos(x[2])};
    });
  };
  const auto c64 = harmonic_residual(pressure_parts(gradfield(synth::periodic_box(64)), CellRange{{16, 16, 16}, {48, 48, 48}}, 1e-10).ph);
  const auto c32 = harmonic_residual(pressure_parts(gradfield(synth::periodic_box(32)), CellRange{{8, 8, 8}, {24, 24, 24}}, 1e-10).ph);
  CHECK(c32 / c64 < 1.5);
  CHECK(c64 > 10.0 * r64);
}

TEST_CASE("bump test function derivatives agree with finite differences") {
  BumpTest b{{0.1, -0.2, 0.3}, 0.7, 0.0, 1.0, 0.6};
  const Vec3 x{0.35, -0.05, 0.1};
  const double t = 0.4, e = 1e-5;
  const Vec3 g = b.grad(x, t);
  double lap = 0.0;
  for (int a = 0; a < 3; ++a) {
    Vec3 xp = x, xm = x;
    xp[a] += e;
    xm[a] -= e;
    CHECK(g[a] == doctest::Approx((b.value(xp, t) - b.value(xm, t)) / (2 * e)).epsilon(1e-6));
    Vec3 xp2 = x, xm2 = x;
    xp2[a] += 1e-3;
    xm2[a] -= 1e-3;
    lap += (b.value(xp2, t) - 2 * b.value(x, t) + b.value(xm2, t)) / 1e-6;
  }
  CHECK(b.laplacian(x, t) == doctest::Approx(lap).epsilon(1e-4));
  CHECK(b.dt(x, t) == doctest::Approx((b.value(x, t + e) - b.value(x, t - e)) / (2 * e)).epsilon(1e-6));
  CHECK(b.value({5, 5, 5}, t) == 0.0);
  CHECK(b.value(x, 1.2) == 0.0);
  CHECK(b.value(b.center, 0.5) == doctest::Approx(1.0));
}

TEST_CASE("local energy identity: zero field and preconditions") {
  const Box3 box({0, 0, 0}, {2, 2, 2}, {24, 24, 24});
  std::vector<double> t;
  std::vector<VectorGrid> fr;
  for (int i = 0; i <= 12; ++i) {
    t.push_back(0.1 * i);
    fr.push_back(VectorGrid(box));
  }
  const SpaceTimeField f(t, fr);
  const CellRange cube{{2, 2, 2}, {22, 22, 22}};
  const BumpTest phi{{1, 1, 1}, 0.6, 0.0, 1.2, 1.0};
  const auto r = local_energy_residual(f, cube, phi, 0.1, 1e-8);
  CHECK(r.lhs == 0.0);
  CHECK(r.rhs == 0.0);
  CHECK(r.slack == 0.0);
  CHECK(r.relative_slack == 0.0);
  CHECK(r.frames_used >= 8);

  BumpTest bad = phi;
  bad.s = 0.95;
  CHECK_THROWS_WITH_AS(local_energy_residual(f, cube, bad, 0.1, 1e-8), doctest::Contains("frame time"), DomainError);
  bad = phi;
  bad.radius = 0.85;  // reaches past the cube's 2-cell margin
  CHECK_THROWS_WITH_AS(local_energy_residual(f, cube, bad, 0.1, 1e-8), doctest::Contains("leaves the cube"), DomainError);
  bad = phi;
  bad.radius = 0.3;  // 3.6 cells
  CHECK_THROWS_WITH_AS(local_energy_residual(f, cube, bad, 0.1, 1e-8), doctest::Contains("unresolved"), DomainError);
  bad = phi;
  bad.t_begin = 0.5;
  bad.s = 1.0;  // frames 0.6..1.0 inside the support
  CHECK_THROWS_WITH_AS(local_energy_residual(f, cube, bad, 0.1, 1e-8), doctest::Contains("fewer than 8 frames"), DomainError);
  bad = phi;
  bad.t_begin = -0.1;
  CHECK_THROWS_AS(local_energy_residual(f, cube, bad, 0.1, 1e-8), DomainError);
  CHECK_THROWS_AS(local_energy_residual(f, cube, phi, -1.0, 1e-8), DomainError);
}

TEST_CASE("local energy identity holds on a smooth viscous flow") {
  synth::SolverConfig sc;
  sc.n = 32;
  sc.nu = 0.1;
  sc.dt = 0.01;
  sc.t_end = 0.6;
  sc.frame_every = 0.02;
  const auto run = synth::run_solver(sc);
  const CellRange cube{{8, 8, 8}, {24, 24, 24}};
  const BumpTest phi{{kPi, kPi, kPi}, 1.0, 0.0, 0.6, 0.4};
  const auto r = local_energy_residual(run.field, cube, phi, sc.nu, 1e-8);
  CHECK(r.lhs > 0.0);
  CHECK(r.relative_slack >= -1e-2);
  CHECK(std::abs(r.relative_slack) <= 5e-2);
  CHECK(r.lhs == doctest::Approx(r.energy_at_s + r.dissipation));
  CHECK(r.rhs == doctest::Approx(r.heat + r.transport + r.pressure_hessian + r.pressure_flux));
}

TEST_CASE("harmonic rigidity: constants, the x1 control and a weak-L3 candidate") {
  const Box3 box({-8, -8, -8}, {8, 8, 8}, {64, 64, 64});
  const std::vector<double> radii{1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0};

  const ScalarGrid one = synth::sample(box, [](const Vec3&) { return 2.0; });
  const auto c = harmonic_rigidity_check(one, {0, 0, 0}, radii, 1.0);
  for (const auto& row : c.rows) {
    CHECK(row.grad == doctest::Approx(0.0).scale(1.0));
    CHECK(row.mean_value_bound == doctest::Approx(kMeanValueConstant * row.integral / std::pow(row.R, 4)));
    CHECK_FALSE(row.truncated);
  }
  CHECK(c.slope == doctest::Approx(-1.0).epsilon(0.05));

  const ScalarGrid x1 = synth::sample(box, [](const Vec3& x) { return x[0]; });
  const auto ctl = harmonic_rigidity_check(x1, {0, 0, 0}, radii, 1.0);
  for (const auto& row : ctl.rows) {
    CHECK(row.grad == doctest::Approx(1.0));
    // (36/pi) R^-4 int_{B_R} |x1| = (36/pi)(pi/2) = 18
    CHECK(row.mean_value_bound == doctest::Approx(18.0).epsilon(0.06));
  }
  CHECK(std::abs(ctl.slope) < 0.05);

  const ScalarGrid cand = synth::capped_inverse_radius(box, {0, 0, 0}, 0.25);
  const auto cr = harmonic_rigidity_check(cand, {0, 0, 0}, radii);
  CHECK(cr.M > 0.0);
  // int_{B_R} 1/|x| = 2 pi R^2, bound 72 / R^2
  CHECK(cr.slope == doctest::Approx(-2.0).epsilon(0.05));
  for (const auto& row : cr.rows) CHECK(row.mean_value_bound == doctest::Approx(72.0 / (row.R * row.R)).epsilon(0.08));
  const auto R = crossover_radius(cr, ctl);
  REQUIRE(R.has_value());
  CHECK(*R == doctest::Approx(2.0).epsilon(0.08));
  CHECK_FALSE(crossover_radius(ctl, cr).has_value());

  const auto edge = harmonic_rigidity_check(x1, {7, 0, 0}, {2.0});
  CHECK(edge.rows.front().truncated);
  CHECK_THROWS_AS(harmonic_rigidity_check(x1, {0, 0, 0}, {0.0}), DomainError);
}

TEST_CASE("solver guards") {
  CHECK_THROWS_AS(StokesSolver(unit(12)), DomainError);
  StokesSolver s(unit(16));
  CHECK_THROWS_AS(s.solve(Faces(unit(16)), 0.0), DomainError);
  CHECK_THROWS_AS(s.solve(Faces(unit(17)), 1e-8), DomainError);
  CHECK_THROWS_AS(s.estar(VectorGrid(unit(20)), 1e-8), DomainError);
  try {
    s.solve(random_faces(unit(16), 8), 1e-30);
    FAIL("expected a NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.residual_history().size() > 1);
    CHECK(e.residual_history().front() == 1.0);
  }
  StokesSolver other(unit(20));
  CHECK_THROWS_AS(pressure_parts(VectorGrid(unit(20)), CellRange{{0, 0, 0}, {16, 16, 16}}, 1e-8, 1.0, &other), DomainError);
}
