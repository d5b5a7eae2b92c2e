#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "fft.hpp"
#include "regscan/error.hpp"
#include "regscan/synth.hpp"

namespace regscan::synth {
namespace {

using cvec = std::vector<std::complex<double>>;
using Spectral = std::array<cvec, 3>;

// Galerkin-truncated rotational-form Navier-Stokes on [0, 2 pi)^3.
class PeriodicNS {
 public:
  PeriodicNS(int n, double nu, double dealias) : n_(n), nu_(nu), fft_({n, n, n}) {
    const std::size_t m = fft_.complex_size();
    kx_.resize(m);
    ky_.resize(m);
    kz_.resize(m);
    k2_.resize(m);
    keep_.resize(m);
    weight_.resize(m);
    const double cut = dealias * n / 2.0;
    for (int c = 0; c < n; ++c)
      for (int b = 0; b < n; ++b)
        for (int a = 0; a < fft_.nxc(); ++a) {
          const std::size_t id = fft_.cindex(a, b, c);
          const int mx = detail::wavenumber(a, n), my = detail::wavenumber(b, n), mz = detail::wavenumber(c, n);
          const bool nyq = 2 * std::abs(mx) == n || 2 * std::abs(my) == n || 2 * std::abs(mz) == n;
          kx_[id] = nyq ? 0.0 : mx;
          ky_[id] = nyq ? 0.0 : my;
          kz_[id] = nyq ? 0.0 : mz;
          k2_[id] = double(mx) * mx + double(my) * my + double(mz) * mz;
          keep_[id] = !nyq && std::abs(mx) < cut && std::abs(my) < cut && std::abs(mz) < cut;
          weight_[id] = (a == 0 || 2 * a == n) ? 1.0 : 2.0;
        }
    for (auto& s : scratch_) s.resize(fft_.real_size());
    for (auto& s : omega_) s.resize(fft_.real_size());
  }

  Spectral to_spectral(const VectorGrid& u) {
    Spectral U;
    for (int c = 0; c < 3; ++c) {
      fft_.forward(u.component(c), U[c]);
      for (std::size_t i = 0; i < U[c].size(); ++i)
        if (!keep_[i]) U[c][i] = 0.0;
    }
    project(U);
    return U;
  }

  VectorGrid to_physical(const Spectral& U, const Box3& box) {
    VectorGrid u(box);
    const double inv = 1.0 / static_cast<double>(fft_.real_size());
    for (int c = 0; c < 3; ++c) {
      fft_.backward(U[c], u.component(c));
      for (double& x : u.component(c)) x *= inv;
    }
    return u;
  }

  void project(Spectral& U) const {
    for (std::size_t i = 0; i < U[0].size(); ++i) {
      if (k2_[i] == 0.0) continue;
      const std::complex<double> kd = kx_[i] * U[0][i] + ky_[i] * U[1][i] + kz_[i] * U[2][i];
      const double kk = kx_[i] * kx_[i] + ky_[i] * ky_[i] + kz_[i] * kz_[i];
      if (kk == 0.0) continue;
      U[0][i] -= kx_[i] * kd / kk;
      U[1][i] -= ky_[i] * kd / kk;
      U[2][i] -= kz_[i] * kd / kk;
    }
  }

  // dU/dt = P(u x omega) - nu k^2 U; also returns the advective CFL speed.
  double rhs(const Spectral& U, Spectral& dU) {
    const std::complex<double> I(0.0, 1.0);
    const double inv = 1.0 / static_cast<double>(fft_.real_size());
    cvec tmp(U[0].size());
    for (int c = 0; c < 3; ++c) {
      fft_.backward(U[c], scratch_[c]);
      for (double& x : scratch_[c]) x *= inv;
    }
    // omega = i k x U
    for (int c = 0; c < 3; ++c) {
      const int a = (c + 1) % 3, b = (c + 2) % 3;
      const auto& ka = a == 0 ? kx_ : (a == 1 ? ky_ : kz_);
      const auto& kb = b == 0 ? kx_ : (b == 1 ? ky_ : kz_);
      for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = I * (ka[i] * U[b][i] - kb[i] * U[a][i]);
      fft_.backward(tmp, omega_[c]);
      for (double& x : omega_[c]) x *= inv;
    }
    double speed = 0.0;
    std::vector<double> prod(fft_.real_size());
    for (std::size_t i = 0; i < prod.size(); ++i)
      speed = std::max(speed, std::abs(scratch_[0][i]) + std::abs(scratch_[1][i]) + std::abs(scratch_[2][i]));
    for (int c = 0; c < 3; ++c) {
      const int a = (c + 1) % 3, b = (c + 2) % 3;
      for (std::size_t i = 0; i < prod.size(); ++i)
        prod[i] = scratch_[a][i] * omega_[b][i] - scratch_[b][i] * omega_[a][i];
      fft_.forward(prod, dU[c]);
    }
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < dU[c].size(); ++i) {
        if (!keep_[i] || k2_[i] == 0.0)
          dU[c][i] = 0.0;
        else
          dU[c][i] -= nu_ * k2_[i] * U[c][i];
      }
    project(dU);
    return speed;
  }

  // int |u|^2 and int |grad u|^2 by Parseval.
  std::pair<double, double> energy(const Spectral& U) const {
    const double n3 = static_cast<double>(fft_.real_size());
    const double scale = std::pow(2.0 * std::numbers::pi, 3) / (n3 * n3);
    double e = 0.0, d = 0.0;
    for (std::size_t i = 0; i < U[0].size(); ++i) {
      const double a = weight_[i] * (std::norm(U[0][i]) + std::norm(U[1][i]) + std::norm(U[2][i]));
      e += a;
      d += k2_[i] * a;
    }
    return {e * scale, d * scale};
  }

  Vec3 mean(const Spectral& U) const {
    const double n3 = static_cast<double>(fft_.real_size());
    return {U[0][0].real() / n3, U[1][0].real() / n3, U[2][0].real() / n3};
  }

  int n() const { return n_; }

 private:
  int n_;
  double nu_;
  detail::RealFFT3 fft_;
  std::vector<double> kx_, ky_, kz_, k2_, weight_;
  std::vector<char> keep_;
  std::array<std::vector<double>, 3> scratch_, omega_;
};

void axpy(Spectral& out, const Spectral& x, double a, const Spectral& y) {
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < out[c].size(); ++i) out[c][i] = x[c][i] + a * y[c][i];
}

}  // namespace

Box3 periodic_box(int n) {
  const double h = 2.0 * std::numbers::pi / n;
  return Box3({-h / 2, -h / 2, -h / 2}, {2 * std::numbers::pi - h / 2, 2 * std::numbers::pi - h / 2,
                                         2 * std::numbers::pi - h / 2},
              {n, n, n});
}

void validate(const SolverConfig& cfg) {
  if (cfg.n < 8) throw DomainError("solver: n must be at least 8");
  if (!(cfg.nu > 0.0)) throw DomainError("solver: nu must be positive");
  if (!(cfg.dt > 0.0)) throw DomainError("solver: dt must be positive");
  if (!(cfg.t_end >= 0.0)) throw DomainError("solver: t_end must be nonnegative");
  if (!(cfg.dealias > 0.0 && cfg.dealias <= 1.0)) throw DomainError("solver: dealias fraction must lie in (0, 1]");
  if (!(cfg.frame_every > 0.0)) throw DomainError("solver: frame_every must be positive");
  if (cfg.initial != "taylor_green" && cfg.initial != "zero" && cfg.initial != "random")
    throw DomainError("solver: unknown initial profile '" + cfg.initial + "'");
}

SolverResult run_solver(const SolverConfig& cfg) {
  validate(cfg);
  const Box3 box = periodic_box(cfg.n);
  PeriodicNS ns(cfg.n, cfg.nu, cfg.dealias);

  VectorGrid u0(box);
  if (cfg.initial == "taylor_green") {
    u0 = taylor_green(box, cfg.amplitude);
  } else if (cfg.initial == "random") {
    Spectrum sp;
    sp.amplitude = cfg.amplitude;
    u0 = random_solenoidal(cfg.seed, sp, box);
  }
  Spectral U = ns.to_spectral(u0);

  const long steps = std::lround(cfg.t_end / cfg.dt);
  const long stride = std::max(1L, std::lround(cfg.frame_every / cfg.dt));
  const double h = box.spacing(0);

  SolverResult res;
  std::vector<double> times;
  std::vector<VectorGrid> frames;
  auto record = [&](long step) {
    times.push_back(step * cfg.dt);
    frames.push_back(ns.to_physical(U, box));
  };

  Spectral k1, k2, k3, k4, tmp;
  for (auto* s : {&k1, &k2, &k3, &k4, &tmp})
    for (auto& c : *s) c.resize(U[0].size());

  auto [e0, d0] = ns.energy(U);
  const Vec3 m0 = ns.mean(U);
  res.history.push_back({0.0, e0, d0, 0.0, m0});
  record(0);

  for (long step = 1; step <= steps; ++step) {
    const double speed = ns.rhs(U, k1);
    const double cfl = speed * cfg.dt / h;
    if (cfl > cfg.max_cfl) {
      std::ostringstream os;
      os << "solver: CFL " << cfl << " exceeds " << cfg.max_cfl << " at t=" << (step - 1) * cfg.dt
         << " (max |u|_1 = " << speed << ", dt = " << cfg.dt << ", h = " << h << ")";
      throw NumericalError(os.str());
    }
    axpy(tmp, U, 0.5 * cfg.dt, k1);
    ns.rhs(tmp, k2);
    axpy(tmp, U, 0.5 * cfg.dt, k2);
    ns.rhs(tmp, k3);
    axpy(tmp, U, cfg.dt, k3);
    ns.rhs(tmp, k4);
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < U[c].size(); ++i)
        U[c][i] += cfg.dt / 6.0 * (k1[c][i] + 2.0 * k2[c][i] + 2.0 * k3[c][i] + k4[c][i]);

    auto [e, d] = ns.energy(U);
    if (!std::isfinite(e) || !std::isfinite(d)) {
      std::ostringstream os;
      os << "solver: non-finite state at t=" << step * cfg.dt;
      throw NumericalError(os.str());
    }
    const Vec3 m = ns.mean(U);
    res.history.push_back({step * cfg.dt, e, d, cfl, m});
    const auto& prev = res.history[res.history.size() - 2];
    const double balance = (e - prev.energy) / cfg.dt + cfg.nu * (prev.dissipation + d);
    res.max_balance_residual = std::max(res.max_balance_residual, std::abs(balance));
    res.max_momentum_drift = std::max(res.max_momentum_drift, norm(m - m0));
    if (step % stride == 0 || step == steps) record(step);
  }
  res.field = SpaceTimeField(std::move(times), std::move(frames));
  return res;
}

}  // namespace regscan::synth
