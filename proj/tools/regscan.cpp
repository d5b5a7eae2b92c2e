// regscan: command-line front end for the regularity analyzers.
//
// Exit codes: 0 success, 2 usage or invalid parameters, 3 malformed input
// file, 4 numerical or other runtime failure.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "regscan/dyadic.hpp"
#include "regscan/error.hpp"
#include "regscan/field_io.hpp"
#include "regscan/kernels.hpp"
#include "regscan/localquant.hpp"
#include "regscan/lorentz.hpp"
#include "regscan/report.hpp"
#include "regscan/stokes.hpp"
#include "regscan/synth.hpp"

using namespace regscan;
using nlohmann::json;

namespace {

struct Common {
  std::string out;
  bool json_flag = false;
  bool no_wall_time = false;
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size() && item.find_first_not_of(" \t", used) != std::string::npos) throw std::exception();
    } catch (...) {
      throw DomainError("cannot parse number '" + item + "' in '" + s + "'");
    }
  }
  return v;
}

Vec3 parse_vec3(const std::string& s) {
  const auto v = parse_list(s);
  if (v.size() != 3) throw DomainError("expected three comma-separated numbers, got '" + s + "'");
  return {v[0], v[1], v[2]};
}

// Scalar input: one-component files as is, velocity files as |u| at a time.
ScalarGrid load_scalar(const std::string& path, std::optional<double> t, double* used_time) {
  const io::FieldHeader h = io::read_header(path);
  if (h.components == 1) {
    if (used_time) *used_time = h.times.front();
    return io::read_scalar(path);
  }
  const SpaceTimeField f = io::read_field(path);
  const double tt = t ? *t : f.times().back();
  if (!f.covers(tt, tt)) throw DomainError("time outside the field's frames");
  if (used_time) *used_time = tt;
  return f.frame_at(tt).magnitude();
}

void emit(const Common& c, const std::string& kind, const json& payload, report::Manifest m,
          std::chrono::steady_clock::time_point start) {
  m.wall_time = c.no_wall_time ? 0.0 : std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!c.out.empty()) m.outputs.push_back(c.out);
  const std::string text = report::dump(report::make_report(kind, payload, m));
  if (c.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(c.out, std::ios::trunc);
    if (!f) throw Error("io error", "cannot write " + c.out);
    f << text;
  }
}

report::InputFile input(const std::string& path) { return {path, report::sha256_file(path)}; }

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out", c.out, "Write the report here instead of stdout");
  app->add_flag("--json", c.json_flag, "JSON output (the default for reports)");
  app->add_flag("--no-wall-time", c.no_wall_time, "Record wall time 0 so reruns are byte-identical");
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const DomainError*>(&e)) return 2;
  if (dynamic_cast<const FormatError*>(&e)) return 3;
  return 4;
}

void print_error(const std::string& kind, const std::string& msg) {
  std::cerr << json{{"error", kind}, {"message", msg}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  kernels::configure_threads_from_env();
  const auto start = std::chrono::steady_clock::now();

  CLI::App app{"Local regularity analysis of sampled incompressible velocity fields"};
  app.require_subcommand(1);
  app.set_version_flag("--version", report::kToolVersion);

  // norms
  Common c_norms;
  std::string norms_path;
  double norms_q = 3.0, norms_r = 1.0;
  std::optional<double> norms_time, norms_M;
  std::string norms_ball;
  auto* norms = app.add_subcommand("norms", "Weak-Lebesgue and Lebesgue norms, interpolation checks");
  norms->add_option("field", norms_path, "Field file")->required()->check(CLI::ExistingFile);
  norms->add_option("--q", norms_q, "Weak-norm exponent")->capture_default_str();
  norms->add_option("--r", norms_r, "Exponent of the equivalent norm, 0 < r < q")->capture_default_str();
  norms->add_option("--time", norms_time, "Frame time (default: last frame)");
  norms->add_option("--M", norms_M, "Weak-L3 bound for the interpolation checks (default: measured)");
  norms->add_option("--ball", norms_ball, "x,y,z,r for the local L2 check");
  add_common(norms, c_norms);

  // scan
  Common c_scan;
  std::string scan_path;
  std::optional<double> scan_t0;
  std::vector<std::string> scan_centers;
  int scan_grid = 0;
  std::string scan_radii = "0.25";
  localquant::AnalysisConfig scan_cfg;
  auto* scan = app.add_subcommand("scan", "Scaling-invariant quantities on parabolic cylinders");
  scan->add_option("field", scan_path, "Field file")->required()->check(CLI::ExistingFile);
  scan->add_option("--t0", scan_t0, "Cylinder top time (default: last frame)");
  scan->add_option("--center", scan_centers, "x,y,z (repeatable)");
  scan->add_option("--grid-centers", scan_grid, "Use k^3 evenly spaced centres");
  scan->add_option("--radii", scan_radii, "Comma-separated radii")->capture_default_str();
  scan->add_option("--M", scan_cfg.M, "Weak-L3 bound")->capture_default_str();
  scan->add_option("--eps", scan_cfg.epsilon, "Criterion parameter in (0, 1/4)")->capture_default_str();
  scan->add_option("--zeta", scan_cfg.zeta, "Regularity threshold on q3^(1/3)")->capture_default_str();
  add_common(scan, c_scan);

  // localize
  Common c_loc;
  std::string loc_path, loc_M = "auto";
  double loc_eps = 0.1;
  int loc_kmax = 6;
  std::optional<double> loc_time;
  dyadic::LocalizeOptions loc_opt;
  auto* loc = app.add_subcommand("localize", "Dyadic-cube localization of candidate singular points");
  loc->add_option("field", loc_path, "Field file")->required()->check(CLI::ExistingFile);
  loc->add_option("--eps", loc_eps, "Lattice parameter")->capture_default_str();
  loc->add_option("--M", loc_M, "Weak-L3 bound or 'auto' (measured)")->capture_default_str();
  loc->add_option("--kmax", loc_kmax, "Finest level")->capture_default_str();
  loc->add_option("--time", loc_time, "Frame time (default: last frame)");
  loc->add_option("--shape-factor", loc_opt.shape_factor, "Multiplies eps in the thresholds")->capture_default_str();
  loc->add_option("--min-cells", loc_opt.min_cells_per_side, "Cells per finest cube side")->capture_default_str();
  add_common(loc, c_loc);

  // stokes-check
  Common c_st;
  std::string st_path, st_cube, st_config;
  double st_tol = 1e-8, st_nu = 0.1;
  std::optional<double> st_time;
  std::vector<std::string> st_bumps;
  auto* st = app.add_subcommand("stokes-check", "Local pressure projection and local energy identity on a cube");
  st->add_option("field", st_path, "Field file")->required()->check(CLI::ExistingFile);
  st->add_option("--cube", st_cube, "x,y,z,side of the cube G (x,y,z is the low corner)")->required();
  st->add_option("--tol", st_tol, "Stokes solver tolerance")->capture_default_str();
  st->add_option("--nu", st_nu, "Viscosity of the run")->capture_default_str();
  st->add_option("--time", st_time, "Time of the pressure check (default: last frame)");
  st->add_option("--bump", st_bumps, "cx,cy,cz,R,t_begin,t_end,s (repeatable)");
  st->add_option("--config", st_config, "JSON file with {\"nu\", \"bumps\": [{center, radius, t_begin, t_end, s}]}")
      ->check(CLI::ExistingFile);
  add_common(st, c_st);

  // simulate
  Common c_sim;
  synth::SolverConfig sim_cfg;
  std::string sim_field;
  auto* sim = app.add_subcommand("simulate", "Periodic pseudo-spectral Navier-Stokes run");
  sim->add_option("--n", sim_cfg.n, "Grid points per axis")->capture_default_str();
  sim->add_option("--nu", sim_cfg.nu, "Viscosity")->capture_default_str();
  sim->add_option("--dt", sim_cfg.dt, "Time step")->capture_default_str();
  sim->add_option("--t-end", sim_cfg.t_end, "Final time")->capture_default_str();
  sim->add_option("--frame-every", sim_cfg.frame_every, "Output cadence")->capture_default_str();
  sim->add_option("--initial", sim_cfg.initial, "taylor_green | zero | random")->capture_default_str();
  sim->add_option("--amplitude", sim_cfg.amplitude, "Initial amplitude")->capture_default_str();
  sim->add_option("--seed", sim_cfg.seed, "Seed for random initial data")->capture_default_str();
  sim->add_option("--max-cfl", sim_cfg.max_cfl, "Abort above this CFL number")->capture_default_str();
  sim->add_option("--field", sim_field, "Write the frames to this field file");
  add_common(sim, c_sim);

  // synth
  Common c_syn;
  std::string syn_kind, syn_field;
  int syn_n = 64;
  double syn_half = 1.0, syn_core = 0.0, syn_strength = 1.0;
  std::vector<std::string> syn_centers;
  std::uint64_t syn_seed = 1;
  auto* syn = app.add_subcommand("synth", "Write a synthetic field: zero | spikes | capped | taylor-green | random");
  syn->add_option("kind", syn_kind, "Generator")->required()->check(
      CLI::IsMember({"zero", "spikes", "capped", "taylor-green", "random"}));
  syn->add_option("--field", syn_field, "Output field file")->required();
  syn->add_option("--n", syn_n, "Cells per axis")->capture_default_str();
  syn->add_option("--half-width", syn_half, "Box is [-w, w]^3 (periodic kinds use [0, 2 pi)^3)")->capture_default_str();
  syn->add_option("--center", syn_centers, "Spike or singularity centre x,y,z (repeatable)");
  syn->add_option("--core", syn_core, "Core radius delta")->capture_default_str();
  syn->add_option("--strength", syn_strength, "Spike strength or amplitude")->capture_default_str();
  syn->add_option("--seed", syn_seed, "Seed for 'random'")->capture_default_str();
  add_common(syn, c_syn);

  // count-bound
  double cb_M = 1.0, cb_eps = 0.1;
  bool cb_json = false;
  auto* cb = app.add_subcommand("count-bound", "Upper bound eps^-7 M^3 + eps^-3 on candidate points");
  cb->add_option("--M", cb_M, "Weak-L3 bound")->required();
  cb->add_option("--eps", cb_eps, "Lattice parameter")->required();
  cb->add_flag("--json", cb_json, "Print a JSON object");

  // report
  std::string rep_path;
  bool rep_csv = false;
  auto* rep = app.add_subcommand("report", "Validate a report file and print it (JSON or CSV)");
  rep->add_option("report", rep_path, "Report JSON file")->required()->check(CLI::ExistingFile);
  rep->add_flag("--csv", rep_csv, "Flatten the payload to key,value lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*norms) {
      double t_used = 0.0;
      const ScalarGrid g = load_scalar(norms_path, norms_time, &t_used);
      json payload;
      payload["time"] = t_used;
      payload["box"] = report::to_json(g.box());
      payload["norms"] = report::to_json(lorentz::norm_report(g, norms_q, norms_r));
      const double measured = lorentz::weak_norm(g, 3.0);
      const double M = norms_M ? *norms_M : measured;
      payload["weak_norm_3"] = measured;
      payload["l4_interpolation"] = report::to_json(lorentz::l4_interpolation_check(g, M));
      payload["chebyshev_ratio_6"] = lorentz::chebyshev_ratio(g, 6.0);
      if (!norms_ball.empty()) {
        const auto b = parse_list(norms_ball);
        if (b.size() != 4) throw DomainError("--ball expects x,y,z,r");
        payload["local_l2"] = report::to_json(lorentz::local_l2_check(g, Ball{{b[0], b[1], b[2]}, b[3]}, M));
      }
      report::Manifest m;
      m.command = "norms";
      m.config = {{"q", norms_q}, {"r", norms_r}, {"time", t_used}, {"M", M}, {"M_measured", !norms_M.has_value()},
                  {"ball", norms_ball}};
      m.inputs.push_back(input(norms_path));
      emit(c_norms, "norms", payload, m, start);
    } else if (*scan) {
      scan_cfg.validate();
      const SpaceTimeField f = io::read_field(scan_path);
      const double t0 = scan_t0 ? *scan_t0 : f.times().back();
      std::vector<Vec3> centers;
      for (const auto& s : scan_centers) centers.push_back(parse_vec3(s));
      if (scan_grid > 0) {
        const Box3& b = f.box();
        for (int k = 0; k < scan_grid; ++k)
          for (int j = 0; j < scan_grid; ++j)
            for (int i = 0; i < scan_grid; ++i) {
              const Index3 q{i, j, k};
              Vec3 x;
              for (int a = 0; a < 3; ++a) x[a] = b.lo()[a] + (q[a] + 0.5) * (b.hi()[a] - b.lo()[a]) / scan_grid;
              centers.push_back(x);
            }
      }
      if (centers.empty()) throw DomainError("scan needs --center or --grid-centers");
      const auto radii = parse_list(scan_radii);
      const auto rows = localquant::scan(f, t0, centers, radii, scan_cfg);
      json arr = json::array();
      for (const auto& r : rows) arr.push_back(report::to_json(r));
      std::size_t regular = 0;
      for (const auto& r : rows) regular += r.regular ? 1 : 0;
      json payload = {{"t0", t0}, {"cylinders", arr}, {"regular", regular}, {"total", rows.size()}};
      report::Manifest m;
      m.command = "scan";
      m.config = {{"t0", t0},         {"centers", centers.size()}, {"grid_centers", scan_grid}, {"radii", radii},
                  {"M", scan_cfg.M},  {"eps", scan_cfg.epsilon},   {"zeta", scan_cfg.zeta}};
      m.inputs.push_back(input(scan_path));
      emit(c_scan, "scan", payload, m, start);
    } else if (*loc) {
      const SpaceTimeField f = io::read_field(loc_path);
      const double t = loc_time ? *loc_time : f.times().back();
      if (!f.covers(t, t)) throw DomainError("time outside the field's frames");
      const VectorGrid frame = f.frame_at(t);
      const double measured = lorentz::weak_norm(frame.magnitude(), 3.0);
      double M = measured;
      if (loc_M != "auto") {
        const auto v = parse_list(loc_M);
        if (v.size() != 1) throw DomainError("--M expects a number or 'auto'");
        M = v[0];
      }
      const auto cs = dyadic::localize(frame, loc_eps, M, loc_kmax, loc_opt);
      json payload = report::to_json(cs);
      payload["time"] = t;
      payload["weak_norm_measured"] = measured;
      report::Manifest m;
      m.command = "localize";
      m.config = {{"eps", loc_eps},   {"M", M},  {"M_mode", loc_M}, {"kmax", loc_kmax}, {"time", t},
                  {"shape_factor", loc_opt.shape_factor}, {"min_cells", loc_opt.min_cells_per_side}};
      m.inputs.push_back(input(loc_path));
      emit(c_loc, "localize", payload, m, start);
    } else if (*st) {
      const SpaceTimeField f = io::read_field(st_path);
      const auto cv = parse_list(st_cube);
      if (cv.size() != 4) throw DomainError("--cube expects x,y,z,side");
      const CubeRegion cube{{cv[0], cv[1], cv[2]}, cv[3]};
      const CellRange cells = bounding_cells(f.box(), cube);
      std::vector<stokes::BumpTest> bumps;
      double nu = st_nu;
      if (!st_config.empty()) {
        std::ifstream in(st_config);
        json cfg;
        try {
          cfg = json::parse(in);
        } catch (const json::parse_error& e) {
          throw FormatError(std::string("config is not valid JSON: ") + e.what(), e.byte);
        }
        if (cfg.contains("nu")) nu = cfg.at("nu").get<double>();
        for (const auto& b : cfg.value("bumps", json::array())) {
          stokes::BumpTest bt;
          bt.center = b.at("center").get<Vec3>();
          bt.radius = b.at("radius").get<double>();
          bt.t_begin = b.at("t_begin").get<double>();
          bt.t_end = b.at("t_end").get<double>();
          bt.s = b.at("s").get<double>();
          bumps.push_back(bt);
        }
      }
      for (const auto& s : st_bumps) {
        const auto v = parse_list(s);
        if (v.size() != 7) throw DomainError("--bump expects cx,cy,cz,R,t_begin,t_end,s");
        bumps.push_back({{v[0], v[1], v[2]}, v[3], v[4], v[5], v[6]});
      }
      const double t = st_time ? *st_time : f.times().back();
      if (!f.covers(t, t)) throw DomainError("time outside the field's frames");
      const VectorGrid frame = f.frame_at(t);
      const auto lp = stokes::pressure_parts(frame, cells, st_tol, nu);
      const VectorGrid u = stokes::extract(frame, cells);
      json payload;
      payload["time"] = t;
      payload["cube_cells"] = {{"lo", cells.lo}, {"hi", cells.hi}};
      payload["residuals"] = {{"p_h", report::to_json(lp.residuals[0])},
                              {"p1", report::to_json(lp.residuals[1])},
                              {"p2", report::to_json(lp.residuals[2])}};
      payload["harmonic_residual"] = stokes::harmonic_residual(lp.ph, 2);
      payload["central_divergence_rms"] = [&] {
        const ScalarGrid d = synth::central_divergence(u);
        double s = 0.0;
        for (double x : d.data()) s += x * x;
        return std::sqrt(s / static_cast<double>(d.data().size()));
      }();
      json energy = json::array();
      for (const auto& b : bumps) {
        json e = report::to_json(stokes::local_energy_residual(f, cells, b, nu, st_tol));
        e["bump"] = {{"center", report::to_json(b.center)}, {"radius", b.radius}, {"t_begin", b.t_begin},
                     {"t_end", b.t_end},                    {"s", b.s}};
        energy.push_back(e);
      }
      payload["local_energy"] = energy;
      report::Manifest m;
      m.command = "stokes-check";
      m.config = {{"cube", cv}, {"tol", st_tol}, {"nu", nu}, {"time", t}, {"bumps", bumps.size()}};
      m.inputs.push_back(input(st_path));
      if (!st_config.empty()) m.inputs.push_back(input(st_config));
      emit(c_st, "stokes", payload, m, start);
    } else if (*sim) {
      const auto res = synth::run_solver(sim_cfg);
      if (!sim_field.empty()) io::write_field(sim_field, res.field);
      json payload = report::to_json(res, 10);
      report::Manifest m;
      m.command = "simulate";
      m.config = report::to_json(sim_cfg);
      if (!sim_field.empty()) m.outputs.push_back(sim_field);
      emit(c_sim, "simulate", payload, m, start);
    } else if (*syn) {
      std::vector<Vec3> centers;
      for (const auto& s : syn_centers) centers.push_back(parse_vec3(s));
      const Box3 box({-syn_half, -syn_half, -syn_half}, {syn_half, syn_half, syn_half}, {syn_n, syn_n, syn_n});
      json payload = {{"kind", syn_kind}, {"field", syn_field}};
      if (syn_kind == "zero") {
        io::write_field(syn_field, VectorGrid(box));
      } else if (syn_kind == "spikes") {
        synth::SpikeSpec spec;
        spec.core_radius = syn_core;
        if (centers.empty()) centers.push_back({0, 0, 0});
        for (const auto& c : centers) spec.spikes.push_back({c, {0, 0, 1}, syn_strength});
        io::write_field(syn_field, synth::spike_field(spec, box));
        payload["weak_norm_per_spike"] = synth::spike_weak_norm(syn_strength);
      } else if (syn_kind == "capped") {
        if (!(syn_core > 0.0)) throw DomainError("capped profile needs --core > 0");
        io::write_scalar(syn_field, synth::capped_inverse_radius(box, centers.empty() ? Vec3{0, 0, 0} : centers[0],
                                                                  syn_core));
      } else if (syn_kind == "taylor-green") {
        io::write_field(syn_field, synth::taylor_green(synth::periodic_box(syn_n), syn_strength));
      } else {
        synth::Spectrum sp;
        sp.amplitude = syn_strength;
        io::write_field(syn_field, synth::random_solenoidal(syn_seed, sp, synth::periodic_box(syn_n)));
      }
      report::Manifest m;
      m.command = "synth";
      m.config = {{"kind", syn_kind}, {"n", syn_n},       {"half_width", syn_half}, {"core", syn_core},
                  {"strength", syn_strength}, {"seed", syn_seed}, {"centers", centers.size()}};
      m.outputs.push_back(syn_field);
      emit(c_syn, "synth", payload, m, start);
    } else if (*cb) {
      const double b = dyadic::count_bound(cb_M, cb_eps);
      if (cb_json) {
        std::cout << json{{"M", cb_M}, {"eps", cb_eps}, {"bound", b}}.dump() << "\n";
      } else {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.0f", b);
        std::cout << buf << "\n";
      }
    } else if (*rep) {
      std::ifstream in(rep_path);
      json r;
      try {
        r = json::parse(in);
      } catch (const json::parse_error& e) {
        throw FormatError(std::string("report is not valid JSON: ") + e.what(), e.byte);
      }
      report::validate_report(r);
      std::cout << (rep_csv ? report::to_csv(r) : report::dump(r));
    }
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    print_error("runtime error", e.what());
    return 4;
  }
  return 0;
}
