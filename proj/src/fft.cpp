#include "fft.hpp"

#include <fftw3.h>
#include <omp.h>

#include <algorithm>
#include <cstring>
#include <mutex>

namespace regscan::detail {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void lock_planner() {
  planner_mutex().lock();
  static bool ready = false;
  if (!ready) {
    fftw_init_threads();
    ready = true;
  }
  fftw_plan_with_nthreads(omp_get_max_threads());
}

void unlock_planner() { planner_mutex().unlock(); }

RealFFT3::RealFFT3(Index3 n) : n_(n) {
  real_size_ = static_cast<std::size_t>(n[0]) * n[1] * n[2];
  complex_size_ = static_cast<std::size_t>(n[0] / 2 + 1) * n[1] * n[2];
  real_ = fftw_alloc_real(real_size_);
  cplx_ = fftw_alloc_complex(complex_size_);
  PlannerGuard guard;
  // FFTW takes the slowest dimension first.
  fwd_ = fftw_plan_dft_r2c_3d(n[2], n[1], n[0], real_, cplx_, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_c2r_3d(n[2], n[1], n[0], cplx_, real_, FFTW_ESTIMATE);
}

RealFFT3::~RealFFT3() {
  {
    PlannerGuard guard;
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }
  fftw_free(real_);
  fftw_free(cplx_);
}

void RealFFT3::forward(std::span<const double> in, std::vector<std::complex<double>>& out) {
  std::copy(in.begin(), in.end(), real_);
  fftw_execute(fwd_);
  out.resize(complex_size_);
  std::memcpy(static_cast<void*>(out.data()), cplx_, complex_size_ * sizeof(fftw_complex));
}

void RealFFT3::backward(std::span<const std::complex<double>> in, std::span<double> out) {
  std::memcpy(cplx_, in.data(), complex_size_ * sizeof(fftw_complex));
  fftw_execute(bwd_);
  std::copy(real_, real_ + real_size_, out.begin());
}

R2R3::R2R3(Index3 n, std::array<fftw_r2r_kind, 3> kinds) {
  size_ = static_cast<std::size_t>(n[0]) * n[1] * n[2];
  buf_ = fftw_alloc_real(size_);
  PlannerGuard guard;
  plan_ = fftw_plan_r2r_3d(n[2], n[1], n[0], buf_, buf_, kinds[2], kinds[1], kinds[0], FFTW_ESTIMATE);
}

R2R3::~R2R3() {
  {
    PlannerGuard guard;
    fftw_destroy_plan(plan_);
  }
  fftw_free(buf_);
}

void R2R3::execute(std::span<const double> in, std::span<double> out) {
  std::copy(in.begin(), in.end(), buf_);
  fftw_execute(plan_);
  std::copy(buf_, buf_ + size_, out.begin());
}

}  // namespace regscan::detail
