#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "regscan/grid.hpp"

namespace regscan::io {

// File layout: 8-byte magic "RSFIELD\x01", uint64 LE header length, JSON
// header, then little-endian float64 samples ordered frame-major, then
// component-major, then x-fastest within a component.
inline constexpr char kMagic[8] = {'R', 'S', 'F', 'I', 'E', 'L', 'D', '\x01'};

struct FieldHeader {
  Box3 box;
  int components = 3;
  std::vector<double> times;

  std::uint64_t payload_bytes() const;
};

std::vector<char> encode(const SpaceTimeField& f);
SpaceTimeField decode_field(const std::vector<char>& bytes);
// One-component files hold scalar fields, one frame.
std::vector<char> encode(const ScalarGrid& g);
ScalarGrid decode_scalar(const std::vector<char>& bytes);
FieldHeader decode_header(const std::vector<char>& bytes, std::uint64_t* payload_offset = nullptr);

void write_field(const std::filesystem::path& path, const SpaceTimeField& f);
void write_field(const std::filesystem::path& path, const VectorGrid& frame, double t = 0.0);
void write_scalar(const std::filesystem::path& path, const ScalarGrid& g);
SpaceTimeField read_field(const std::filesystem::path& path);
ScalarGrid read_scalar(const std::filesystem::path& path);
FieldHeader read_header(const std::filesystem::path& path);

std::vector<char> read_bytes(const std::filesystem::path& path);

}  // namespace regscan::io
