#include "regscan/stokes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "regscan/error.hpp"
#include "regscan/localquant.hpp"
#include "regscan/lorentz.hpp"

namespace regscan::stokes {
namespace {

constexpr double kPi = std::numbers::pi;

std::size_t fidx(const Index3& d, int i, int j, int k) {
  return static_cast<std::size_t>(i) +
         static_cast<std::size_t>(d[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(d[1]) * k);
}

double l2(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

double norm(const Faces& f) { return std::sqrt(dot(f, f)); }

void remove_mean(std::span<double> p) {
  if (p.empty()) return;
  double m = 0.0;
  for (double x : p) m += x;
  m /= static_cast<double>(p.size());
  for (double& x : p) x -= m;
}

void check_cube(const Box3& b) {
  for (int a = 0; a < 3; ++a)
    if (b.n()[a] < 16) throw DomainError("stokes: the cube needs at least 16 cells per axis");
}

// Eigenvalue of the 1D Dirichlet second difference for mode m on a line
// whose walls are n cells apart.
double eig1d(int m, int n, double h) { return (2.0 - 2.0 * std::cos(kPi * m / n)) / (h * h); }

Vec3 clamp_sample(const VectorGrid& g, int i, int j, int k) {
  const auto& n = g.box().n();
  i = std::clamp(i, 0, n[0] - 1);
  j = std::clamp(j, 0, n[1] - 1);
  k = std::clamp(k, 0, n[2] - 1);
  return g.at(g.box().index(i, j, k));
}

Box3 sub_box(const Box3& b, const CellRange& r) {
  if (r.empty() || r.lo[0] < 0 || r.lo[1] < 0 || r.lo[2] < 0 || r.hi[0] > b.n()[0] || r.hi[1] > b.n()[1] ||
      r.hi[2] > b.n()[2])
    throw DomainError("stokes: cube cells outside the field grid");
  Vec3 lo, hi;
  for (int a = 0; a < 3; ++a) {
    lo[a] = b.lo()[a] + r.lo[a] * b.spacing(a);
    hi[a] = b.lo()[a] + r.hi[a] * b.spacing(a);
  }
  return Box3(lo, hi, r.extent());
}

}  // namespace

Faces::Faces(const Box3& b) : box(b) {
  for (int a = 0; a < 3; ++a) {
    const Index3 d = dims(b, a);
    f[a].assign(static_cast<std::size_t>(d[0]) * d[1] * d[2], 0.0);
  }
}

Index3 Faces::dims(const Box3& b, int axis) {
  Index3 d = b.n();
  d[axis] = std::max(0, d[axis] - 1);
  return d;
}

double dot(const Faces& a, const Faces& b) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.f[c].size(); ++i) s += a.f[c][i] * b.f[c][i];
  return s;
}

Faces faces_from_cells(const VectorGrid& F) {
  const Box3& b = F.box();
  Faces out(b);
  for (int a = 0; a < 3; ++a) {
    const Index3 d = out.dims(a);
    auto comp = F.component(a);
    auto& dst = out.f[a];
#pragma omp parallel for
    for (int k = 0; k < d[2]; ++k)
      for (int j = 0; j < d[1]; ++j)
        for (int i = 0; i < d[0]; ++i) {
          Index3 c{i, j, k};
          const double lo = comp[b.index(c[0], c[1], c[2])];
          ++c[a];
          const double hi = comp[b.index(c[0], c[1], c[2])];
          dst[fidx(d, i, j, k)] = 0.5 * (lo + hi);
        }
  }
  return out;
}

VectorGrid cells_from_faces(const Faces& v) {
  const Box3& b = v.box;
  VectorGrid out(b);
  const Index3 n = b.n();
  for (int a = 0; a < 3; ++a) {
    const Index3 d = v.dims(a);
    const auto& src = v.f[a];
    auto dst = out.component(a);
#pragma omp parallel for
    for (int k = 0; k < n[2]; ++k)
      for (int j = 0; j < n[1]; ++j)
        for (int i = 0; i < n[0]; ++i) {
          Index3 c{i, j, k};
          const int m = c[a];
          double s = 0.0;
          if (m > 0) {
            c[a] = m - 1;
            s += src[fidx(d, c[0], c[1], c[2])];
          }
          if (m < n[a] - 1) {
            c[a] = m;
            s += src[fidx(d, c[0], c[1], c[2])];
          }
          dst[b.index(i, j, k)] = 0.5 * s;
        }
  }
  return out;
}

Faces face_gradient(const ScalarGrid& p) {
  const Box3& b = p.box();
  Faces out(b);
  for (int a = 0; a < 3; ++a) {
    const Index3 d = out.dims(a);
    const double inv_h = 1.0 / b.spacing(a);
    auto& dst = out.f[a];
#pragma omp parallel for
    for (int k = 0; k < d[2]; ++k)
      for (int j = 0; j < d[1]; ++j)
        for (int i = 0; i < d[0]; ++i) {
          Index3 c{i, j, k};
          const double lo = p(c[0], c[1], c[2]);
          ++c[a];
          dst[fidx(d, i, j, k)] = (p(c[0], c[1], c[2]) - lo) * inv_h;
        }
  }
  return out;
}

ScalarGrid face_divergence(const Faces& v) {
  const Box3& b = v.box;
  ScalarGrid out(b);
  const Index3 n = b.n();
  for (int a = 0; a < 3; ++a) {
    const Index3 d = v.dims(a);
    const double inv_h = 1.0 / b.spacing(a);
    const auto& src = v.f[a];
#pragma omp parallel for
    for (int k = 0; k < n[2]; ++k)
      for (int j = 0; j < n[1]; ++j)
        for (int i = 0; i < n[0]; ++i) {
          Index3 c{i, j, k};
          const int m = c[a];
          double s = 0.0;
          if (m < n[a] - 1) s += src[fidx(d, c[0], c[1], c[2])];
          if (m > 0) {
            c[a] = m - 1;
            s -= src[fidx(d, c[0], c[1], c[2])];
          }
          out(i, j, k) += s * inv_h;
        }
  }
  return out;
}

Faces apply_minus_laplacian(const Faces& v) {
  const Box3& b = v.box;
  Faces out(b);
  for (int a = 0; a < 3; ++a) {
    const Index3 d = v.dims(a);
    const auto& src = v.f[a];
    auto& dst = out.f[a];
#pragma omp parallel for
    for (int k = 0; k < d[2]; ++k)
      for (int j = 0; j < d[1]; ++j)
        for (int i = 0; i < d[0]; ++i) {
          const Index3 c{i, j, k};
          const double u = src[fidx(d, i, j, k)];
          double s = 0.0;
          for (int e = 0; e < 3; ++e) {
            const double ih2 = 1.0 / (b.spacing(e) * b.spacing(e));
            double nb = 0.0;
            for (int sgn : {-1, 1}) {
              Index3 q = c;
              q[e] += sgn;
              if (q[e] >= 0 && q[e] < d[e])
                nb += src[fidx(d, q[0], q[1], q[2])];
              else if (e != a)
                nb -= u;  // wall halfway between the cell row and its ghost
            }
            s += (2.0 * u - nb) * ih2;
          }
          dst[fidx(d, i, j, k)] = s;
        }
  }
  return out;
}

struct StokesSolver::Impl {
  Box3 box;
  std::array<std::unique_ptr<detail::R2R3>, 3> fwd, inv;
  std::array<std::vector<double>, 3> inv_eig;  // includes the transform normalization
  std::vector<double> precond;                 // inverse diagonal of D diag(A)^-1 D^T

  explicit Impl(const Box3& b) : box(b) {
    check_cube(b);
    const Index3 n = b.n();
    for (int a = 0; a < 3; ++a) {
      const Index3 d = Faces::dims(b, a);
      std::array<fftw_r2r_kind, 3> kf{}, ki{};
      double scale = 1.0;
      std::array<std::vector<double>, 3> ev;
      for (int e = 0; e < 3; ++e) {
        const double h = b.spacing(e);
        ev[e].resize(d[e]);
        for (int q = 0; q < d[e]; ++q) ev[e][q] = eig1d(q + 1, n[e], h);
        if (e == a) {
          kf[e] = ki[e] = FFTW_RODFT00;
        } else {
          kf[e] = FFTW_RODFT10;
          ki[e] = FFTW_RODFT01;
        }
        scale *= 2.0 * n[e];
      }
      fwd[a] = std::make_unique<detail::R2R3>(d, kf);
      inv[a] = std::make_unique<detail::R2R3>(d, ki);
      auto& ie = inv_eig[a];
      ie.resize(static_cast<std::size_t>(d[0]) * d[1] * d[2]);
      for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
          for (int i = 0; i < d[0]; ++i)
            ie[fidx(d, i, j, k)] = 1.0 / ((ev[0][i] + ev[1][j] + ev[2][k]) * scale);
    }
    // Jacobi scaling for the Schur complement from the face diagonal of A.
    Faces diag(b);
    for (int a = 0; a < 3; ++a) {
      const Index3 d = diag.dims(a);
      for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
          for (int i = 0; i < d[0]; ++i) {
            const Index3 c{i, j, k};
            double s = 0.0;
            for (int e = 0; e < 3; ++e) {
              const double ih2 = 1.0 / (b.spacing(e) * b.spacing(e));
              s += 2.0 * ih2;
              if (e != a && (c[e] == 0 || c[e] == d[e] - 1)) s += ih2 * ((d[e] == 1) ? 2.0 : 1.0);
            }
            diag.f[a][fidx(d, i, j, k)] = s;
          }
    }
    precond.assign(b.size(), 0.0);
    for (int k = 0; k < n[2]; ++k)
      for (int j = 0; j < n[1]; ++j)
        for (int i = 0; i < n[0]; ++i) {
          const Index3 c{i, j, k};
          double s = 0.0;
          for (int a = 0; a < 3; ++a) {
            const Index3 d = diag.dims(a);
            const double ih2 = 1.0 / (b.spacing(a) * b.spacing(a));
            Index3 q = c;
            if (c[a] < n[a] - 1) s += ih2 / diag.f[a][fidx(d, q[0], q[1], q[2])];
            if (c[a] > 0) {
              q[a] = c[a] - 1;
              s += ih2 / diag.f[a][fidx(d, q[0], q[1], q[2])];
            }
          }
          precond[b.index(i, j, k)] = 1.0 / s;
        }
  }

  Faces solve_a(const Faces& rhs) {
    Faces out(box);
    std::vector<double> tmp;
    for (int a = 0; a < 3; ++a) {
      tmp.resize(rhs.f[a].size());
      fwd[a]->execute(rhs.f[a], tmp);
      const auto& ie = inv_eig[a];
      for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] *= ie[i];
      inv[a]->execute(tmp, out.f[a]);
    }
    return out;
  }

  // D^T p on faces, i.e. minus the discrete gradient.
  Faces div_t(const ScalarGrid& p) {
    Faces g = face_gradient(p);
    for (auto& c : g.f)
      for (double& x : c) x = -x;
    return g;
  }
};

StokesSolver::StokesSolver(const Box3& cube) : impl_(std::make_unique<Impl>(cube)) {}
StokesSolver::~StokesSolver() = default;

const Box3& StokesSolver::box() const { return impl_->box; }

Faces StokesSolver::solve_minus_laplacian(const Faces& rhs) {
  if (!(rhs.box == impl_->box)) throw DomainError("stokes: right-hand side on a different grid");
  return impl_->solve_a(rhs);
}

StokesSolution StokesSolver::solve(const Faces& F, double tol) {
  if (!(tol > 0.0)) throw DomainError("stokes: tol must be positive");
  if (!(F.box == impl_->box)) throw DomainError("stokes: forcing on a different grid");
  Impl& I = *impl_;
  const Box3& b = I.box;
  const std::size_t nc = b.size();

  const Faces a_inv_f = I.solve_a(F);
  ScalarGrid rg = face_divergence(a_inv_f);
  auto r = rg.data();
  for (double& x : r) x = -x;
  remove_mean(r);
  const double bnorm = l2(r);

  ScalarGrid p(b);
  Faces w(b);
  StokesResiduals res;
  const int cap = 10 * std::max({b.n()[0], b.n()[1], b.n()[2]});

  if (bnorm > 0.0) {
    std::vector<double> z(nc), d(nc);
    auto precondition = [&]() {
      for (std::size_t i = 0; i < nc; ++i) z[i] = I.precond[i] * r[i];
      remove_mean(z);
    };
    precondition();
    d = z;
    double rz = 0.0;
    for (std::size_t i = 0; i < nc; ++i) rz += r[i] * z[i];
    res.history.push_back(1.0);
    ScalarGrid dg(b);
    const std::vector<double> b0(r.begin(), r.end());
    while (true) {
      const double rel = l2(r) / bnorm;
      if (rel < tol) {
        // The recursive residual drifts below round-off; accept only if the
        // true residual b - D w agrees, otherwise restart from it.
        const ScalarGrid dw = face_divergence(w);
        std::vector<double> rt(nc);
        for (std::size_t i = 0; i < nc; ++i) rt[i] = b0[i] - dw.data()[i];
        remove_mean(rt);
        if (l2(rt) / bnorm < tol) break;
        std::copy(rt.begin(), rt.end(), r.begin());
        precondition();
        d = z;
        rz = 0.0;
        for (std::size_t i = 0; i < nc; ++i) rz += r[i] * z[i];
        if (res.iterations >= cap) throw NumericalError("stokes: Schur complement iteration did not converge", res.history);
        continue;
      }
      if (res.iterations >= cap || !std::isfinite(rel))
        throw NumericalError("stokes: Schur complement iteration did not converge", res.history);
      std::copy(d.begin(), d.end(), dg.data().begin());
      const Faces zd = I.solve_a(I.div_t(dg));
      const ScalarGrid q = face_divergence(zd);
      double dq = 0.0;
      for (std::size_t i = 0; i < nc; ++i) dq += d[i] * q.data()[i];
      if (!(dq > 0.0)) throw NumericalError("stokes: Schur complement lost positivity", res.history);
      const double alpha = rz / dq;
      auto pd = p.data();
      for (std::size_t i = 0; i < nc; ++i) {
        pd[i] += alpha * d[i];
        r[i] -= alpha * q.data()[i];
      }
      for (int a = 0; a < 3; ++a)
        for (std::size_t i = 0; i < w.f[a].size(); ++i) w.f[a][i] += alpha * zd.f[a][i];
      remove_mean(r);
      precondition();
      double rz_new = 0.0;
      for (std::size_t i = 0; i < nc; ++i) rz_new += r[i] * z[i];
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < nc; ++i) d[i] = z[i] + beta * d[i];
      ++res.iterations;
      res.history.push_back(l2(r) / bnorm);
    }
  }
  remove_mean(p.data());

  StokesSolution s;
  s.v_faces = a_inv_f;
  for (int a = 0; a < 3; ++a)
    for (std::size_t i = 0; i < w.f[a].size(); ++i) s.v_faces.f[a][i] += w.f[a][i];

  // Final residuals, recomputed by stencils.
  Faces mom = apply_minus_laplacian(s.v_faces);
  const Faces gp = face_gradient(p);
  for (int a = 0; a < 3; ++a)
    for (std::size_t i = 0; i < mom.f[a].size(); ++i) mom.f[a][i] += gp.f[a][i] - F.f[a][i];
  const double fnorm = norm(F);
  res.momentum = fnorm > 0.0 ? norm(mom) / fnorm : norm(mom);
  const ScalarGrid dv = face_divergence(s.v_faces);
  res.divergence = bnorm > 0.0 ? l2(dv.data()) / bnorm : l2(dv.data());
  double mean = 0.0;
  for (double x : p.data()) mean += x;
  mean /= static_cast<double>(nc);
  const double rms = l2(p.data()) / std::sqrt(static_cast<double>(nc));
  res.mean_p = rms > 0.0 ? std::abs(mean) / rms : std::abs(mean);

  s.v = cells_from_faces(s.v_faces);
  s.grad_p = gradient(p);
  s.p = std::move(p);
  s.residuals = std::move(res);
  return s;
}

StokesSolution StokesSolver::estar(const VectorGrid& F, double tol) {
  if (!(F.box() == impl_->box)) throw DomainError("stokes: forcing on a different grid");
  return solve(faces_from_cells(F), tol);
}

StokesSolution estar(const VectorGrid& F, double tol) {
  StokesSolver s(F.box());
  return s.estar(F, tol);
}

StokesSolution estar_faces(const Faces& F, double tol) {
  StokesSolver s(F.box);
  return s.solve(F, tol);
}

VectorGrid extract(const VectorGrid& field, const CellRange& cube) {
  const Box3 sb = sub_box(field.box(), cube);
  VectorGrid out(sb);
  const Index3 n = sb.n();
  for (int c = 0; c < 3; ++c) {
    auto dst = out.component(c);
    auto src = field.component(c);
    for (int k = 0; k < n[2]; ++k)
      for (int j = 0; j < n[1]; ++j)
        for (int i = 0; i < n[0]; ++i)
          dst[sb.index(i, j, k)] = src[field.box().index(i + cube.lo[0], j + cube.lo[1], k + cube.lo[2])];
  }
  return out;
}

VectorGrid convective_term(const VectorGrid& field, const CellRange& cube) {
  const Box3 sb = sub_box(field.box(), cube);
  VectorGrid out(sb);
  const Index3 n = sb.n();
  const Vec3 h = field.box().spacing();
#pragma omp parallel for
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const Index3 g{i + cube.lo[0], j + cube.lo[1], k + cube.lo[2]};
        Vec3 acc{0, 0, 0};
        for (int e = 0; e < 3; ++e) {
          Index3 gp = g, gm = g;
          ++gp[e];
          --gm[e];
          const Vec3 up = clamp_sample(field, gp[0], gp[1], gp[2]);
          const Vec3 um = clamp_sample(field, gm[0], gm[1], gm[2]);
          // difference of the face averages of u_a u_e
          for (int a = 0; a < 3; ++a) acc[a] += (up[a] * up[e] - um[a] * um[e]) / (2.0 * h[e]);
        }
        const std::size_t idx = sb.index(i, j, k);
        for (int a = 0; a < 3; ++a) out.component(a)[idx] = acc[a];
      }
  return out;
}

VectorGrid laplacian_term(const VectorGrid& field, const CellRange& cube) {
  const Box3 sb = sub_box(field.box(), cube);
  VectorGrid out(sb);
  const Index3 n = sb.n();
  const Vec3 h = field.box().spacing();
#pragma omp parallel for
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const Index3 g{i + cube.lo[0], j + cube.lo[1], k + cube.lo[2]};
        const Vec3 u0 = clamp_sample(field, g[0], g[1], g[2]);
        Vec3 acc{0, 0, 0};
        for (int e = 0; e < 3; ++e) {
          Index3 gp = g, gm = g;
          ++gp[e];
          --gm[e];
          const Vec3 up = clamp_sample(field, gp[0], gp[1], gp[2]);
          const Vec3 um = clamp_sample(field, gm[0], gm[1], gm[2]);
          for (int a = 0; a < 3; ++a) acc[a] += (up[a] - 2.0 * u0[a] + um[a]) / (h[e] * h[e]);
        }
        const std::size_t idx = sb.index(i, j, k);
        for (int a = 0; a < 3; ++a) out.component(a)[idx] = acc[a];
      }
  return out;
}

LocalPressure pressure_parts(const VectorGrid& field, const CellRange& cube, double tol, double nu,
                             StokesSolver* solver) {
  const Box3 sb = sub_box(field.box(), cube);
  std::unique_ptr<StokesSolver> own;
  if (solver == nullptr) {
    own = std::make_unique<StokesSolver>(sb);
    solver = own.get();
  } else if (!(solver->box() == sb)) {
    throw DomainError("stokes: solver grid does not match the cube");
  }

  VectorGrid u = extract(field, cube);
  VectorGrid conv = convective_term(field, cube);
  VectorGrid lap = laplacian_term(field, cube);
  for (int c = 0; c < 3; ++c) {
    for (double& x : u.component(c)) x = -x;
    for (double& x : conv.component(c)) x = -x;
    for (double& x : lap.component(c)) x *= nu;
  }

  LocalPressure lp;
  StokesSolution sh = solver->estar(u, tol);
  StokesSolution s1 = solver->estar(conv, tol);
  StokesSolution s2 = solver->estar(lap, tol);
  lp.ph = std::move(sh.p);
  lp.p1 = std::move(s1.p);
  lp.p2 = std::move(s2.p);
  lp.grad_ph = std::move(sh.grad_p);
  lp.grad_p1 = std::move(s1.grad_p);
  lp.grad_p2 = std::move(s2.grad_p);
  lp.residuals = {std::move(sh.residuals), std::move(s1.residuals), std::move(s2.residuals)};
  return lp;
}

LocalPressure pressure_parts(const VectorGrid& u, double tol, double nu) {
  return pressure_parts(u, CellRange::all(u.box()), tol, nu);
}

double harmonic_residual(const ScalarGrid& p, int skip) {
  const Box3& b = p.box();
  const Index3 n = b.n();
  skip = std::max(skip, 1);
  double num = 0.0;
  for (int k = skip; k < n[2] - skip; ++k)
    for (int j = skip; j < n[1] - skip; ++j)
      for (int i = skip; i < n[0] - skip; ++i) {
        double lap = 0.0;
        const double c = p(i, j, k);
        const Index3 q{i, j, k};
        for (int e = 0; e < 3; ++e) {
          Index3 a = q, z = q;
          ++a[e];
          --z[e];
          lap += (p(a[0], a[1], a[2]) - 2.0 * c + p(z[0], z[1], z[2])) / (b.spacing(e) * b.spacing(e));
        }
        num += lap * lap;
      }
  const double den = l2(p.data());
  if (den == 0.0) return 0.0;
  return std::sqrt(num) / den;
}

double harmonic_residual(const StokesSolution& ph_solution, const VectorGrid& u) {
  if (!(u.box() == ph_solution.p.box())) throw DomainError("stokes: velocity and pressure grids differ");
  return harmonic_residual(ph_solution.p, 2);
}

namespace {

// psi(rho) = exp(1 - 1/(1 - rho^2)) and the pieces needed for its derivatives.
struct Profile {
  double v = 0, g = 0, gp = 0;  // psi, psi'/psi, (psi'/psi)'
};

Profile profile(double rho) {
  Profile p;
  if (rho >= 1.0) return p;
  const double s = 1.0 - rho * rho;
  p.v = std::exp(1.0 - 1.0 / s);
  p.g = -2.0 * rho / (s * s);
  p.gp = -2.0 / (s * s) - 8.0 * rho * rho / (s * s * s);
  return p;
}

double time_tau(const BumpTest& b, double t) { return (2.0 * t - (b.t_begin + b.t_end)) / (b.t_end - b.t_begin); }

}  // namespace

double BumpTest::value(const Vec3& x, double t) const {
  const double tau = time_tau(*this, t);
  if (std::abs(tau) >= 1.0) return 0.0;
  return profile(regscan::norm(x - center) / radius).v * profile(std::abs(tau)).v;
}

Vec3 BumpTest::grad(const Vec3& x, double t) const {
  const double tau = time_tau(*this, t);
  if (std::abs(tau) >= 1.0) return {0, 0, 0};
  const Vec3 d = x - center;
  const double rho = regscan::norm(d) / radius;
  const Profile p = profile(rho);
  if (p.v == 0.0) return {0, 0, 0};
  // grad psi = psi g(rho) / R * d / |d| = psi (g / rho) d / R^2; g / rho is regular at 0
  const double s = 1.0 - rho * rho;
  const double g_over_rho = -2.0 / (s * s);
  const double c = p.v * g_over_rho / (radius * radius) * profile(std::abs(tau)).v;
  return c * d;
}

double BumpTest::laplacian(const Vec3& x, double t) const {
  const double tau = time_tau(*this, t);
  if (std::abs(tau) >= 1.0) return 0.0;
  const double rho = regscan::norm(x - center) / radius;
  const Profile p = profile(rho);
  if (p.v == 0.0) return 0.0;
  const double s = 1.0 - rho * rho;
  const double g_over_rho = -2.0 / (s * s);
  // psi'' + 2 psi' / rho = psi (g^2 + g' + 2 g / rho)
  const double lap = p.v * (p.g * p.g + p.gp + 2.0 * g_over_rho) / (radius * radius);
  return lap * profile(std::abs(tau)).v;
}

double BumpTest::dt(const Vec3& x, double t) const {
  const double tau = time_tau(*this, t);
  if (std::abs(tau) >= 1.0) return 0.0;
  const Profile pt = profile(std::abs(tau));
  const double s = 1.0 - tau * tau;
  const double db_dtau = pt.v * (-2.0 * tau / (s * s));
  return profile(regscan::norm(x - center) / radius).v * db_dtau * 2.0 / (t_end - t_begin);
}

namespace {

struct FrameTerms {
  double dissipation = 0, heat = 0, transport = 0, hessian = 0, flux = 0, energy = 0, div = 0;
};

FrameTerms frame_terms(const VectorGrid& frame, const CellRange& cube, const BumpTest& phi, double t, double nu,
                       double tol, StokesSolver& solver) {
  const LocalPressure lp = pressure_parts(frame, cube, tol, nu, &solver);
  const VectorGrid u = extract(frame, cube);
  const Box3& b = u.box();
  VectorGrid v(b);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < b.size(); ++i) v.component(c)[i] = u.component(c)[i] + lp.grad_ph.component(c)[i];
  const TensorGrid gv = gradient(v);
  const TensorGrid gu = gradient(u);
  const TensorGrid hp = gradient(lp.grad_ph);  // hp.d[i][j] = d_j d_i p_h
  const double cv = b.cell_volume();
  const Index3 n = b.n();

  FrameTerms out;
  double dis = 0, heat = 0, tr = 0, hs = 0, fl = 0, en = 0, dv = 0;
#pragma omp parallel for reduction(+ : dis, heat, tr, hs, fl, en, dv)
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const Vec3 x = b.center(i, j, k);
        const double ph = phi.value(x, t);
        if (ph == 0.0) continue;
        const std::size_t idx = b.index(i, j, k);
        const Vec3 vv = v.at(idx);
        const Vec3 gph = lp.grad_ph.at(idx);
        const Vec3 dphi = phi.grad(x, t);
        const double v2 = regscan::dot(vv, vv);
        double gvv = 0.0;
        for (int a = 0; a < 3; ++a)
          for (int e = 0; e < 3; ++e) gvv += gv.d[a][e][idx] * gv.d[a][e][idx];
        dis += 2.0 * nu * gvv * ph;
        heat += v2 * (phi.dt(x, t) + nu * phi.laplacian(x, t));
        tr += v2 * regscan::dot(vv - gph, dphi);
        double h = 0.0;
        for (int a = 0; a < 3; ++a)
          for (int e = 0; e < 3; ++e) h += (vv[a] * vv[e] - vv[a] * gph[e]) * hp.d[a][e][idx];
        hs += 2.0 * h * ph;
        const double pp = lp.p1.data()[idx] + lp.p2.data()[idx];
        fl += 2.0 * pp * regscan::dot(vv, dphi);
        en += v2 * ph;
        const double div_v = gv.d[0][0][idx] + gv.d[1][1][idx] + gv.d[2][2][idx];
        const double div_u = gu.d[0][0][idx] + gu.d[1][1][idx] + gu.d[2][2][idx];
        dv += std::abs(2.0 * pp * div_v * ph) + std::abs(2.0 * regscan::dot(u.at(idx), vv) * div_u * ph);
      }
  out.dissipation = dis * cv;
  out.heat = heat * cv;
  out.transport = tr * cv;
  out.hessian = hs * cv;
  out.flux = fl * cv;
  out.energy = en * cv;
  out.div = dv * cv;
  return out;
}

}  // namespace

LocalEnergyResult local_energy_residual(const SpaceTimeField& f, const CellRange& cube, const BumpTest& phi, double nu,
                                        double tol) {
  if (f.size() == 0) throw DomainError("local energy: empty field");
  if (!(nu >= 0.0)) throw DomainError("local energy: nu must be nonnegative");
  if (!(phi.radius > 0.0) || !(phi.t_end > phi.t_begin)) throw DomainError("local energy: degenerate test function");
  const Box3 sb = sub_box(f.box(), cube);
  check_cube(sb);
  const auto times = f.times();
  const double tspan = std::max(1.0, std::abs(times.back()));
  if (phi.t_begin < times.front() - 1e-12 * tspan)
    throw DomainError("local energy: test function starts before the first frame");
  std::size_t ns = times.size();
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - phi.s) <= 1e-9 * tspan) ns = i;
  if (ns == times.size()) throw DomainError("local energy: s is not a frame time");

  // support of phi in space must sit inside the cube, two cells from the walls
  for (int a = 0; a < 3; ++a) {
    const double h = sb.spacing(a);
    if (phi.center[a] - phi.radius < sb.lo()[a] + 2.0 * h || phi.center[a] + phi.radius > sb.hi()[a] - 2.0 * h)
      throw DomainError("local energy: test function support leaves the cube");
    if (phi.radius < 4.0 * h) throw DomainError("unresolved field: bump radius spans fewer than 4 cells");
  }
  int active = 0;
  for (std::size_t i = 0; i <= ns; ++i)
    if (times[i] > phi.t_begin && times[i] < phi.t_end) ++active;
  if (active < 8) throw DomainError("unresolved field: fewer than 8 frames inside the test function's time support");

  StokesSolver solver(sb);
  std::vector<FrameTerms> terms(ns + 1);
  LocalEnergyResult r;
  for (std::size_t i = 0; i <= ns; ++i) {
    const double t = times[i];
    const bool live = t > phi.t_begin && t < phi.t_end;
    if (!live) continue;
    terms[i] = frame_terms(f.frame(i), cube, phi, t, nu, tol, solver);
    ++r.frames_used;
  }

  // trapezoid in time over frames [0, ns]; phi vanishes outside its support
  auto integrate = [&](auto get, std::size_t stride) {
    double s = 0.0;
    std::size_t i = ns % stride;
    for (; i + stride <= ns; i += stride) s += 0.5 * (times[i + stride] - times[i]) * (get(terms[i]) + get(terms[i + stride]));
    return s;
  };
  auto slack_density = [](const FrameTerms& q) { return q.heat + q.transport + q.hessian + q.flux - q.dissipation; };

  r.dissipation = integrate([](const FrameTerms& q) { return q.dissipation; }, 1);
  r.heat = integrate([](const FrameTerms& q) { return q.heat; }, 1);
  r.transport = integrate([](const FrameTerms& q) { return q.transport; }, 1);
  r.pressure_hessian = integrate([](const FrameTerms& q) { return q.hessian; }, 1);
  r.pressure_flux = integrate([](const FrameTerms& q) { return q.flux; }, 1);
  r.energy_at_s = terms[ns].energy;
  r.lhs = r.energy_at_s + r.dissipation;
  r.rhs = r.heat + r.transport + r.pressure_hessian + r.pressure_flux;
  r.slack = r.rhs - r.lhs;
  const double scale = std::abs(r.energy_at_s) + std::abs(r.dissipation) + std::abs(r.heat) + std::abs(r.transport) +
                       std::abs(r.pressure_hessian) + std::abs(r.pressure_flux);
  r.relative_slack = scale > 0.0 ? r.slack / scale : 0.0;

  double richardson = 0.0;
  if (ns >= 4) {
    const double fine = integrate(slack_density, 1);
    const double coarse = integrate(slack_density, 2);
    richardson = std::abs(fine - coarse) / 3.0;
  }
  r.eta = richardson + integrate([](const FrameTerms& q) { return q.div; }, 1);
  r.eta_relative = scale > 0.0 ? r.eta / scale : 0.0;
  return r;
}

RigidityReport harmonic_rigidity_check(const ScalarGrid& f, const Vec3& x0, const std::vector<double>& radii,
                                       std::optional<double> M) {
  RigidityReport rep;
  rep.x0 = x0;
  rep.M = M ? *M : lorentz::weak_norm(f, 3.0);
  const Box3& b = f.box();
  const VectorGrid g = gradient(f);
  const double grad = regscan::norm(localquant::interpolate(g, x0));
  const double cv = b.cell_volume();
  for (double R : radii) {
    if (!(R > 0.0)) throw DomainError("rigidity: radii must be positive");
    RigidityRow row;
    row.R = R;
    row.grad = grad;
    for (int a = 0; a < 3; ++a)
      if (x0[a] - R < b.lo()[a] || x0[a] + R > b.hi()[a]) row.truncated = true;
    const CellRange cr = bounding_cells(b, Ball{x0, R});
    double integral = 0.0, ball = 0.0;
    for (int k = cr.lo[2]; k < cr.hi[2]; ++k)
      for (int j = cr.lo[1]; j < cr.hi[1]; ++j)
        for (int i = cr.lo[0]; i < cr.hi[0]; ++i) {
          if (regscan::norm(b.center(i, j, k) - x0) >= R) continue;
          integral += std::abs(f(i, j, k));
          ball += 1.0;
        }
    row.integral = integral * cv;
    const double ball_measure = ball * cv;
    const double R4 = R * R * R * R;
    row.mean_value_bound = kMeanValueConstant * row.integral / R4;
    const double H = 1.0 / R;
    row.layer_cake_bound =
        kMeanValueConstant * (ball_measure * H + rep.M * rep.M * rep.M / (2.0 * H * H)) / R4;
    rep.rows.push_back(row);
  }
  auto fit = [&](auto get) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& row : rep.rows) {
      const double y = get(row);
      if (!(y > 0.0)) continue;
      const double x = std::log(row.R);
      const double ly = std::log(y);
      sx += x;
      sy += ly;
      sxx += x * x;
      sxy += x * ly;
      ++n;
    }
    if (n < 2) return 0.0;
    const double den = n * sxx - sx * sx;
    return den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  };
  rep.slope = fit([](const RigidityRow& r) { return r.mean_value_bound; });
  rep.layer_cake_slope = fit([](const RigidityRow& r) { return r.layer_cake_bound; });
  return rep;
}

std::optional<double> crossover_radius(const RigidityReport& candidate, const RigidityReport& control) {
  const std::size_t n = std::min(candidate.rows.size(), control.rows.size());
  auto diff = [&](std::size_t i) {
    return std::log(candidate.rows[i].mean_value_bound) - std::log(control.rows[i].mean_value_bound);
  };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (candidate.rows[i].R != control.rows[i].R || candidate.rows[i + 1].R != control.rows[i + 1].R) return std::nullopt;
    const double a = diff(i), c = diff(i + 1);
    if (!std::isfinite(a) || !std::isfinite(c)) continue;
    if (a > 0.0 && c <= 0.0) {
      const double la = std::log(candidate.rows[i].R), lb = std::log(candidate.rows[i + 1].R);
      return std::exp(la + (lb - la) * a / (a - c));
    }
  }
  return std::nullopt;
}

}  // namespace regscan::stokes
