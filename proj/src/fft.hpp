#pragma once

// Thin RAII wrappers over FFTW used by the spectral generators, the periodic
// solver and the Stokes Poisson solves. Internal to the library.

#include <fftw3.h>

#include <complex>
#include <span>
#include <vector>

#include "regscan/grid.hpp"

namespace regscan::detail {

// Plan creation is not thread-safe in FFTW; every planner call goes through
// this lock. Also performs the one-time threads setup.
void lock_planner();
void unlock_planner();

struct PlannerGuard {
  PlannerGuard() { lock_planner(); }
  ~PlannerGuard() { unlock_planner(); }
  PlannerGuard(const PlannerGuard&) = delete;
  PlannerGuard& operator=(const PlannerGuard&) = delete;
};

// Signed integer wavenumber of index m on an axis with n points.
inline int wavenumber(int m, int n) { return m <= n / 2 ? m : m - n; }

// 3D real-to-complex transform on an x-fastest grid of n = (nx, ny, nz).
// Complex layout: kx fastest with nx/2+1 entries, then ky, then kz.
class RealFFT3 {
 public:
  explicit RealFFT3(Index3 n);
  ~RealFFT3();
  RealFFT3(const RealFFT3&) = delete;
  RealFFT3& operator=(const RealFFT3&) = delete;

  const Index3& n() const { return n_; }
  int nxc() const { return n_[0] / 2 + 1; }
  std::size_t real_size() const { return real_size_; }
  std::size_t complex_size() const { return complex_size_; }
  std::size_t cindex(int kx, int ky, int kz) const {
    return static_cast<std::size_t>(kx) +
           static_cast<std::size_t>(nxc()) * (static_cast<std::size_t>(ky) + static_cast<std::size_t>(n_[1]) * kz);
  }

  // Unnormalized forward transform.
  void forward(std::span<const double> in, std::vector<std::complex<double>>& out);
  // Unnormalized inverse; divide by real_size() to invert forward().
  void backward(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  Index3 n_;
  std::size_t real_size_ = 0;
  std::size_t complex_size_ = 0;
  double* real_ = nullptr;
  fftw_complex* cplx_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

// Separable 3D real-to-real transform with per-axis kinds, x-fastest data.
class R2R3 {
 public:
  R2R3(Index3 n, std::array<fftw_r2r_kind, 3> kinds);
  ~R2R3();
  R2R3(const R2R3&) = delete;
  R2R3& operator=(const R2R3&) = delete;

  void execute(std::span<const double> in, std::span<double> out);
  std::size_t size() const { return size_; }

 private:
  std::size_t size_ = 0;
  double* buf_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace regscan::detail
