#include "regscan/report.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "regscan/error.hpp"

namespace regscan::report {

std::string sha256_hex(const void* data, std::size_t size) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data, size, md, &len, EVP_sha256(), nullptr) != 1) throw Error("io error", "sha256 failed");
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    out += buf;
  }
  return out;
}

std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io error", "cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string out;
  char hex[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(hex, sizeof hex, "%02x", md[i]);
    out += hex;
  }
  return out;
}

std::string Manifest::config_hash() const { return sha256_hex(config.dump()); }

json Manifest::to_json() const {
  json in = json::array();
  for (const auto& f : inputs) in.push_back({{"path", f.path}, {"sha256", f.sha256}});
  return {{"command", command},       {"config", config},     {"config_sha256", config_hash()},
          {"inputs", in},             {"tool_version", tool_version},
          {"wall_time_s", wall_time}, {"outputs", outputs}};
}

bool all_finite(const json& j) {
  if (j.is_number_float()) return std::isfinite(j.get<double>());
  if (j.is_structured())
    for (const auto& v : j)
      if (!all_finite(v)) return false;
  return true;
}

json make_report(const std::string& kind, const json& payload, const Manifest& manifest) {
  if (!all_finite(payload)) throw DomainError("report: payload holds a non-finite number");
  return {{"schema_version", kSchemaVersion}, {"kind", kind}, {"payload", payload}, {"manifest", manifest.to_json()}};
}

void validate_report(const json& r) {
  if (!r.is_object()) throw FormatError("report is not a JSON object", 0);
  for (const char* key : {"schema_version", "kind", "payload", "manifest"})
    if (!r.contains(key)) throw FormatError(std::string("report lacks '") + key + "'", 0);
  if (r.at("schema_version") != kSchemaVersion) throw FormatError("unsupported report schema version", 0);
  if (!all_finite(r.at("payload"))) throw FormatError("report payload holds a non-finite number", 0);
}

std::string dump(const json& r) { return r.dump(2) + "\n"; }

namespace {
void flatten(const json& j, const std::string& prefix, std::ostringstream& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(*it, prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else {
    out << prefix << "," << (j.is_string() ? j.get<std::string>() : j.dump()) << "\n";
  }
}
}  // namespace

std::string to_csv(const json& r) {
  std::ostringstream out;
  out << "key,value\n";
  flatten(r.at("payload"), "", out);
  return out.str();
}

json to_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

json to_json(const Box3& b) { return {{"lo", to_json(b.lo())}, {"hi", to_json(b.hi())}, {"n", b.n()}}; }

json to_json(const lorentz::NormReport& r) {
  return {{"q", r.q},
          {"r", r.r},
          {"weak_norm", r.weak_norm},
          {"equivalent_norm", r.equivalent_norm},
          {"equivalence_bound", r.equivalence_bound},
          {"lp_norms", r.lp_norms}};
}

json to_json(const lorentz::L4Report& r) {
  return {{"lhs", r.lhs},       {"rhs", r.rhs},         {"constant", r.constant}, {"h_star", r.h_star},
          {"l6_norm", r.l6_norm}, {"weak_norm", r.weak_norm}, {"M", r.M},     {"hypothesis", r.hypothesis},
          {"holds", r.holds}};
}

json to_json(const lorentz::LocalL2Report& r) {
  return {{"lhs", r.lhs},         {"bound", r.bound},         {"constant", r.constant},
          {"H", r.H},             {"ball_measure", r.ball_measure}, {"weak_norm", r.weak_norm},
          {"M", r.M},             {"hypothesis", r.hypothesis}, {"holds", r.holds}};
}

json to_json(const localquant::QuantReport& r) {
  return {{"x0", to_json(r.cylinder.x0)},
          {"t0", r.cylinder.t0},
          {"r", r.cylinder.r},
          {"q3", r.q3},
          {"regular", r.regular},
          {"crit_measure", r.crit_measure},
          {"e16_pass", r.e16_pass},
          {"cacc_lhs", r.cacc_lhs},
          {"cacc_rhs", r.cacc_rhs},
          {"cacc_ratio", r.cacc_ratio},
          {"cacc_status", r.cacc_status},
          {"energy_sup", r.energy_sup}};
}

json to_json(const dyadic::LevelCertificate& c) {
  return {{"N", c.N},
          {"N_d", c.N_d},
          {"measure", c.measure},
          {"weak_bound", c.weak_bound},
          {"overlap_claim", c.overlap_claim},
          {"overlap_exact", c.overlap_exact},
          {"disjoint_lower", c.disjoint_lower},
          {"weak_upper", c.weak_upper},
          {"count_bound", c.count_bound}};
}

json to_json(const dyadic::CandidateSet& c) {
  json levels = json::array();
  for (const auto& l : c.levels)
    levels.push_back({{"k", l.k},
                      {"F", l.F},
                      {"G", l.G},
                      {"alive", l.alive},
                      {"terminated", l.terminated},
                      {"certificate", to_json(l.cert)}});
  json clusters = json::array();
  for (const auto& cl : c.clusters) {
    json chain = json::array();
    for (const auto& q : cl.chain) chain.push_back({{"k", q.k}, {"j", q.j}});
    clusters.push_back({{"centroid", to_json(cl.centroid)},
                        {"lo", to_json(cl.lo)},
                        {"hi", to_json(cl.hi)},
                        {"cubes", cl.cubes},
                        {"boundary", cl.boundary},
                        {"chain", chain}});
  }
  return {{"eps", c.eps},
          {"M", c.M},
          {"k_max", c.k_max},
          {"bound", c.bound},
          {"regular_at_t0", c.regular_at_t0},
          {"surviving_cubes", c.surviving_cubes},
          {"certificate_holds", c.certificate_holds()},
          {"candidates", clusters.size()},
          {"levels", levels},
          {"clusters", clusters}};
}

json to_json(const stokes::StokesResiduals& r) {
  return {{"momentum", r.momentum}, {"divergence", r.divergence}, {"mean_p", r.mean_p}, {"iterations", r.iterations}};
}

json to_json(const stokes::LocalEnergyResult& r) {
  return {{"lhs", r.lhs},
          {"rhs", r.rhs},
          {"slack", r.slack},
          {"relative_slack", r.relative_slack},
          {"eta", r.eta},
          {"eta_relative", r.eta_relative},
          {"terms",
           {{"energy_at_s", r.energy_at_s},
            {"dissipation", r.dissipation},
            {"heat", r.heat},
            {"transport", r.transport},
            {"pressure_hessian", r.pressure_hessian},
            {"pressure_flux", r.pressure_flux}}},
          {"frames_used", r.frames_used}};
}

json to_json(const stokes::RigidityReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"R", row.R},
                    {"grad", row.grad},
                    {"integral", row.integral},
                    {"mean_value_bound", row.mean_value_bound},
                    {"layer_cake_bound", row.layer_cake_bound},
                    {"truncated", row.truncated}});
  return {{"x0", to_json(r.x0)}, {"M", r.M}, {"slope", r.slope}, {"layer_cake_slope", r.layer_cake_slope}, {"rows", rows}};
}

json to_json(const synth::SolverConfig& c) {
  return {{"n", c.n},
          {"nu", c.nu},
          {"dt", c.dt},
          {"t_end", c.t_end},
          {"dealias", c.dealias},
          {"frame_every", c.frame_every},
          {"initial", c.initial},
          {"amplitude", c.amplitude},
          {"seed", c.seed},
          {"max_cfl", c.max_cfl}};
}

json to_json(const synth::SolverResult& r, std::size_t history_stride) {
  json hist = json::array();
  history_stride = std::max<std::size_t>(1, history_stride);
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    if (i % history_stride != 0 && i + 1 != r.history.size()) continue;
    const auto& s = r.history[i];
    hist.push_back({{"t", s.t}, {"energy", s.energy}, {"dissipation", s.dissipation}, {"cfl", s.cfl},
                    {"momentum", to_json(s.momentum)}});
  }
  const double e0 = r.history.empty() ? 0.0 : r.history.front().energy;
  return {{"frames", r.field.size()},
          {"box", r.field.size() ? to_json(r.field.box()) : json()},
          {"max_balance_residual", r.max_balance_residual},
          {"relative_balance_residual", e0 > 0.0 ? r.max_balance_residual / e0 : 0.0},
          {"max_momentum_drift", r.max_momentum_drift},
          {"history", hist}};
}

}  // namespace regscan::report
