#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "regscan/dyadic.hpp"
#include "regscan/localquant.hpp"
#include "regscan/lorentz.hpp"
#include "regscan/stokes.hpp"
#include "regscan/synth.hpp"

namespace regscan::report {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_hex(const std::string& s);
std::string sha256_file(const std::filesystem::path& path);

struct InputFile {
  std::string path;
  std::string sha256;
};

struct Manifest {
  std::string command;
  json config = json::object();  // every flag, defaults included
  std::vector<InputFile> inputs;
  std::string tool_version = kToolVersion;
  double wall_time = 0.0;  // seconds
  std::vector<std::string> outputs;

  // sha256 of the config's canonical dump
  std::string config_hash() const;
  json to_json() const;
};

// {schema_version, kind, payload, manifest}. Throws DomainError on a
// non-finite number anywhere in the payload.
json make_report(const std::string& kind, const json& payload, const Manifest& manifest);
// Schema check for reports read back from disk.
void validate_report(const json& r);
// Canonical text form: two-space indent, trailing newline.
std::string dump(const json& r);
// Flattens payload scalars into "key,value" lines.
std::string to_csv(const json& r);

bool all_finite(const json& j);

json to_json(const Vec3& v);
json to_json(const Box3& b);
json to_json(const lorentz::NormReport& r);
json to_json(const lorentz::L4Report& r);
json to_json(const lorentz::LocalL2Report& r);
json to_json(const localquant::QuantReport& r);
json to_json(const dyadic::LevelCertificate& c);
json to_json(const dyadic::CandidateSet& c);
json to_json(const stokes::StokesResiduals& r);
json to_json(const stokes::LocalEnergyResult& r);
json to_json(const stokes::RigidityReport& r);
json to_json(const synth::SolverConfig& c);
json to_json(const synth::SolverResult& r, std::size_t history_stride = 1);

}  // namespace regscan::report
