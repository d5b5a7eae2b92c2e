#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "regscan/grid.hpp"

namespace regscan::synth {

struct Spike {
  Vec3 center{0, 0, 0};
  Vec3 axis{0, 0, 1};  // normalized on use
  double strength = 1.0;
};

struct SpikeSpec {
  std::vector<Spike> spikes;
  double core_radius = 0.0;  // delta; the profile is c w x r / max(|r|, delta)^2
};

// Sum of solenoidal spikes sampled at cell centres. Exactly divergence-free in
// the continuum (rigid rotation inside the core, c w x r / |r|^2 outside).
VectorGrid spike_field(const SpikeSpec& spec, const Box3& box);

// Continuum level-set volume m{|u| > h} of one spike in R^3, by quadrature over
// the polar angle. Without a core this is (pi^2/4) (c/h)^3.
double spike_level_volume(double strength, double core_radius, double h);

// Closed-form weak-L3 norm of one spike in R^3: c (pi^2/4)^{1/3}. The core
// only removes volume at high levels, so the sup (approached as h -> 0) is
// unchanged by it.
double spike_weak_norm(double strength);

// min(1/|x - a|, 1/delta) at cell centres. Its weak-L3 norm in R^3 is
// (4 pi/3)^{1/3} for every delta, attained on all levels h <= 1/delta.
ScalarGrid capped_inverse_radius(const Box3& box, const Vec3& a, double delta);

// Samples any scalar function at cell centres.
ScalarGrid sample(const Box3& box, const std::function<double(const Vec3&)>& f);
VectorGrid sample(const Box3& box, const std::function<Vec3(const Vec3&)>& f);

// (A sin x cos y cos z, -A cos x sin y cos z, 0) at cell centres.
VectorGrid taylor_green(const Box3& box, double amplitude = 1.0);

struct Spectrum {
  double k_min = 1.0;     // integer wavenumber band, in units of 2 pi / L
  double k_max = 4.0;
  double slope = 0.0;     // amplitude ~ |k|^slope inside the band
  double amplitude = 1.0; // rms of the result
};

// Curl of band-limited white noise, built in Fourier space on the periodic box.
VectorGrid random_solenoidal(std::uint64_t seed, const Spectrum& spectrum, const Box3& box);

// ||i k . u_hat|| / ||k|| ||u_hat|| over all modes, treating the box as periodic.
double spectral_divergence(const VectorGrid& u);

// Trigonometric interpolant of a field on a periodic box, evaluated at the cell
// centres of any target box (points are wrapped into the period). Nyquist
// modes are dropped. Used to look at a coarse spectral solution on a fine
// local grid.
VectorGrid spectral_resample(const VectorGrid& periodic, const Box3& target);

// Central-difference divergence at interior cells (zero on the outer layer).
ScalarGrid central_divergence(const VectorGrid& u);

// ---------------------------------------------------------------------------
// Periodic pseudo-spectral Navier-Stokes on [0, 2 pi)^3.

struct SolverConfig {
  int n = 32;
  double nu = 0.1;
  double dt = 0.01;
  double t_end = 1.0;
  double dealias = 2.0 / 3.0;
  double frame_every = 0.1;   // output cadence; rounded to whole steps
  std::string initial = "taylor_green";  // taylor_green | zero | random
  double amplitude = 1.0;
  std::uint64_t seed = 1;
  double max_cfl = 0.5;
};

struct EnergySample {
  double t = 0.0;
  double energy = 0.0;       // int |u|^2
  double dissipation = 0.0;  // int |grad u|^2
  double cfl = 0.0;
  Vec3 momentum{0, 0, 0};    // mean velocity
};

struct SolverResult {
  SpaceTimeField field;
  std::vector<EnergySample> history;  // every step
  // max over steps of |(E_{n+1}-E_n)/dt + nu (D_n + D_{n+1})|
  double max_balance_residual = 0.0;
  double max_momentum_drift = 0.0;
};

// Box whose cell centres sit on the spectral nodes x_j = 2 pi j / n.
Box3 periodic_box(int n);

void validate(const SolverConfig& cfg);
SolverResult run_solver(const SolverConfig& cfg);

}  // namespace regscan::synth
