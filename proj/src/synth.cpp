#include "regscan/synth.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "fft.hpp"
#include "regscan/error.hpp"

namespace regscan::synth {

VectorGrid spike_field(const SpikeSpec& spec, const Box3& box) {
  if (spec.core_radius < 0.0) throw DomainError("spike: core radius must be nonnegative");
  for (const auto& s : spec.spikes) {
    if (!box.contains(s.center)) throw DomainError("spike: centre outside box");
    if (norm(s.axis) == 0.0) throw DomainError("spike: axis must be nonzero");
  }
  VectorGrid u(box);
  const Index3 n = box.n();
  const double d2 = spec.core_radius * spec.core_radius;
#pragma omp parallel for schedule(static)
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const Vec3 x = box.center(i, j, k);
        Vec3 acc{0, 0, 0};
        for (const auto& s : spec.spikes) {
          const Vec3 w = (1.0 / norm(s.axis)) * s.axis;
          const Vec3 r = x - s.center;
          const double denom = std::max(dot(r, r), d2);
          if (denom == 0.0) continue;  // exact centre with no core: rotation axis, set to 0
          acc = acc + (s.strength / denom) * cross(w, r);
        }
        for (int c = 0; c < 3; ++c) u(c, i, j, k) = acc[c];
      }
  return u;
}

double spike_level_volume(double c, double delta, double h) {
  if (!(h > 0.0)) throw DomainError("spike_level_volume: level must be positive");
  c = std::abs(c);
  if (c == 0.0) return 0.0;
  // m = 2 pi int_0^pi sin(t) (b^3 - a^3)/3 dt over directions where the shell
  // a < rho < b is nonempty, b = c sin t / h, a = h delta^2 / (c sin t).
  auto integrand = [&](double t) {
    const double s = c * std::sin(t);
    if (s <= h * delta || s <= 0.0) return 0.0;
    const double b = s / h;
    const double a = h * delta * delta / s;
    return std::sin(t) * (b * b * b - a * a * a) / 3.0;
  };
  const int m = 20000;  // composite Simpson, even
  const double dt = std::numbers::pi / m;
  double acc = integrand(0.0) + integrand(std::numbers::pi);
  for (int i = 1; i < m; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * integrand(i * dt);
  return 2.0 * std::numbers::pi * acc * dt / 3.0;
}

double spike_weak_norm(double strength) {
  return std::abs(strength) * std::cbrt(std::numbers::pi * std::numbers::pi / 4.0);
}

ScalarGrid capped_inverse_radius(const Box3& box, const Vec3& a, double delta) {
  if (!(delta > 0.0)) throw DomainError("capped profile: delta must be positive");
  return sample(box, [&](const Vec3& x) { return 1.0 / std::max(norm(x - a), delta); });
}

ScalarGrid sample(const Box3& box, const std::function<double(const Vec3&)>& f) {
  ScalarGrid g(box);
  const Index3 n = box.n();
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) g(i, j, k) = f(box.center(i, j, k));
  return g;
}

VectorGrid sample(const Box3& box, const std::function<Vec3(const Vec3&)>& f) {
  VectorGrid g(box);
  const Index3 n = box.n();
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const Vec3 v = f(box.center(i, j, k));
        for (int c = 0; c < 3; ++c) g(c, i, j, k) = v[c];
      }
  return g;
}

VectorGrid taylor_green(const Box3& box, double A) {
  for (int a = 0; a < 3; ++a)
    if (box.n()[a] < 8) throw DomainError("taylor_green: need n >= 8");
  return sample(box, [A](const Vec3& x) -> Vec3 {
    return {A * std::sin(x[0]) * std::cos(x[1]) * std::cos(x[2]), -A * std::cos(x[0]) * std::sin(x[1]) * std::cos(x[2]),
            0.0};
  });
}

VectorGrid random_solenoidal(std::uint64_t seed, const Spectrum& sp, const Box3& box) {
  const Index3 n = box.n();
  for (int a = 0; a < 3; ++a)
    if (n[a] < 8) throw DomainError("random_solenoidal: need n >= 8");
  if (!(sp.k_max >= sp.k_min) || sp.k_min < 0.0) throw DomainError("random_solenoidal: bad band");

  detail::RealFFT3 fft(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::array<std::vector<std::complex<double>>, 3> A;
  std::vector<double> noise(box.size());
  for (int c = 0; c < 3; ++c) {
    for (auto& x : noise) x = gauss(rng);
    fft.forward(noise, A[c]);
  }

  const Vec3 L{box.hi()[0] - box.lo()[0], box.hi()[1] - box.lo()[1], box.hi()[2] - box.lo()[2]};
  std::array<std::vector<std::complex<double>>, 3> U;
  for (auto& c : U) c.assign(fft.complex_size(), 0.0);
  const std::complex<double> I(0.0, 1.0);
  for (int kz = 0; kz < n[2]; ++kz)
    for (int ky = 0; ky < n[1]; ++ky)
      for (int kx = 0; kx < fft.nxc(); ++kx) {
        const int mx = detail::wavenumber(kx, n[0]);
        const int my = detail::wavenumber(ky, n[1]);
        const int mz = detail::wavenumber(kz, n[2]);
        if (2 * std::abs(mx) == n[0] || 2 * std::abs(my) == n[1] || 2 * std::abs(mz) == n[2]) continue;
        const double km = std::sqrt(double(mx) * mx + double(my) * my + double(mz) * mz);
        if (km < sp.k_min || km > sp.k_max || km == 0.0) continue;
        const double w = std::pow(km, sp.slope);
        const Vec3 k{2 * std::numbers::pi * mx / L[0], 2 * std::numbers::pi * my / L[1],
                     2 * std::numbers::pi * mz / L[2]};
        const std::size_t id = fft.cindex(kx, ky, kz);
        const std::complex<double> a0 = A[0][id], a1 = A[1][id], a2 = A[2][id];
        // curl: i k x A
        U[0][id] = w * I * (k[1] * a2 - k[2] * a1);
        U[1][id] = w * I * (k[2] * a0 - k[0] * a2);
        U[2][id] = w * I * (k[0] * a1 - k[1] * a0);
      }

  VectorGrid u(box);
  double sq = 0.0;
  for (int c = 0; c < 3; ++c) {
    fft.backward(U[c], u.component(c));
    for (double x : u.component(c)) sq += x * x;
  }
  const double rms = std::sqrt(sq / static_cast<double>(box.size()));
  if (rms > 0.0)
    for (int c = 0; c < 3; ++c)
      for (double& x : u.component(c)) x *= sp.amplitude / rms;
  return u;
}

double spectral_divergence(const VectorGrid& u) {
  const Box3& box = u.box();
  const Index3 n = box.n();
  detail::RealFFT3 fft(n);
  std::array<std::vector<std::complex<double>>, 3> U;
  for (int c = 0; c < 3; ++c) fft.forward(u.component(c), U[c]);
  const Vec3 L{box.hi()[0] - box.lo()[0], box.hi()[1] - box.lo()[1], box.hi()[2] - box.lo()[2]};
  double div = 0.0, ref = 0.0;
  for (int kz = 0; kz < n[2]; ++kz)
    for (int ky = 0; ky < n[1]; ++ky)
      for (int kx = 0; kx < fft.nxc(); ++kx) {
        const int mx = detail::wavenumber(kx, n[0]);
        const int my = detail::wavenumber(ky, n[1]);
        const int mz = detail::wavenumber(kz, n[2]);
        if (2 * std::abs(mx) == n[0] || 2 * std::abs(my) == n[1] || 2 * std::abs(mz) == n[2]) continue;
        const Vec3 k{2 * std::numbers::pi * mx / L[0], 2 * std::numbers::pi * my / L[1],
                     2 * std::numbers::pi * mz / L[2]};
        const std::size_t id = fft.cindex(kx, ky, kz);
        const std::complex<double> d = k[0] * U[0][id] + k[1] * U[1][id] + k[2] * U[2][id];
        div += std::norm(d);
        ref += dot(k, k) * (std::norm(U[0][id]) + std::norm(U[1][id]) + std::norm(U[2][id]));
      }
  return ref > 0.0 ? std::sqrt(div / ref) : 0.0;
}

VectorGrid spectral_resample(const VectorGrid& u, const Box3& target) {
  const Box3& box = u.box();
  const Index3 n = box.n();
  const Index3 m = target.n();
  detail::RealFFT3 fft(n);
  const int nxc = fft.nxc();
  const double total = static_cast<double>(box.size());
  using C = std::complex<double>;

  // e^{i k theta_a(x)} tables per axis, theta measured from the first node.
  auto table = [&](int a, int count) {
    const double L = box.hi()[a] - box.lo()[a];
    const double x0 = box.lo()[a] + 0.5 * box.spacing()[a];
    const double ht = target.spacing()[a];
    std::vector<C> t(static_cast<std::size_t>(count) * m[a]);
    for (int q = 0; q < m[a]; ++q) {
      const double theta = 2 * std::numbers::pi * (target.lo()[a] + (q + 0.5) * ht - x0) / L;
      for (int k = 0; k < count; ++k) {
        const int w = a == 0 ? k : detail::wavenumber(k, n[a]);
        t[static_cast<std::size_t>(q) * count + k] = std::polar(1.0, w * theta);
      }
    }
    return t;
  };
  const auto ex = table(0, nxc), ey = table(1, n[1]), ez = table(2, n[2]);
  auto nyquist = [&](int k, int a) { return 2 * std::abs(detail::wavenumber(k, n[a])) == n[a]; };

  VectorGrid out(target);
  std::vector<C> U;
  for (int c = 0; c < 3; ++c) {
    fft.forward(u.component(c), U);
    // z, then y, then x.
    std::vector<C> A(static_cast<std::size_t>(nxc) * n[1] * m[2], 0.0);
    for (int qz = 0; qz < m[2]; ++qz)
      for (int kz = 0; kz < n[2]; ++kz) {
        if (nyquist(kz, 2)) continue;
        const C e = ez[static_cast<std::size_t>(qz) * n[2] + kz];
        for (int ky = 0; ky < n[1]; ++ky)
          for (int kx = 0; kx < nxc; ++kx)
            A[kx + static_cast<std::size_t>(nxc) * (ky + static_cast<std::size_t>(n[1]) * qz)] +=
                e * U[fft.cindex(kx, ky, kz)];
      }
    std::vector<C> B(static_cast<std::size_t>(nxc) * m[1] * m[2], 0.0);
    for (int qz = 0; qz < m[2]; ++qz)
      for (int qy = 0; qy < m[1]; ++qy)
        for (int ky = 0; ky < n[1]; ++ky) {
          if (nyquist(ky, 1)) continue;
          const C e = ey[static_cast<std::size_t>(qy) * n[1] + ky];
          for (int kx = 0; kx < nxc; ++kx)
            B[kx + static_cast<std::size_t>(nxc) * (qy + static_cast<std::size_t>(m[1]) * qz)] +=
                e * A[kx + static_cast<std::size_t>(nxc) * (ky + static_cast<std::size_t>(n[1]) * qz)];
        }
#pragma omp parallel for schedule(static)
    for (int qz = 0; qz < m[2]; ++qz)
      for (int qy = 0; qy < m[1]; ++qy)
        for (int qx = 0; qx < m[0]; ++qx) {
          double acc = 0.0;
          for (int kx = 0; kx < nxc; ++kx) {
            if (2 * kx == n[0]) continue;
            const double w = kx == 0 ? 1.0 : 2.0;
            acc += w * (ex[static_cast<std::size_t>(qx) * nxc + kx] *
                        B[kx + static_cast<std::size_t>(nxc) * (qy + static_cast<std::size_t>(m[1]) * qz)])
                           .real();
          }
          out(c, qx, qy, qz) = acc / total;
        }
  }
  return out;
}

ScalarGrid central_divergence(const VectorGrid& u) {
  const Box3& box = u.box();
  const Index3 n = box.n();
  ScalarGrid d(box);
  const Vec3 h = box.spacing();
  for (int k = 1; k + 1 < n[2]; ++k)
    for (int j = 1; j + 1 < n[1]; ++j)
      for (int i = 1; i + 1 < n[0]; ++i)
        d(i, j, k) = (u(0, i + 1, j, k) - u(0, i - 1, j, k)) / (2 * h[0]) +
                     (u(1, i, j + 1, k) - u(1, i, j - 1, k)) / (2 * h[1]) +
                     (u(2, i, j, k + 1) - u(2, i, j, k - 1)) / (2 * h[2]);
  return d;
}

}  // namespace regscan::synth
