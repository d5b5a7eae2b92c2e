#include "regscan/field_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "regscan/error.hpp"

namespace regscan::io {
namespace {

using nlohmann::json;

void put_u64(std::vector<char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

void put_f64(char* dst, double x) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) dst[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
}

double get_f64(const char* p) { return std::bit_cast<double>(get_u64(p)); }

std::vector<char> frame_bytes(const FieldHeader& h, const std::vector<std::span<const double>>& chunks) {
  const std::string head = json{{"format", "regscan-field"},
                                {"version", 1},
                                {"box",
                                 {{"lo", h.box.lo()}, {"hi", h.box.hi()}, {"n", h.box.n()}}},
                                {"components", h.components},
                                {"times", h.times}}
                               .dump();
  std::vector<char> out(kMagic, kMagic + 8);
  put_u64(out, head.size());
  out.insert(out.end(), head.begin(), head.end());
  std::size_t pos = out.size();
  out.resize(pos + h.payload_bytes());
  for (const auto& c : chunks)
    for (double x : c) {
      put_f64(out.data() + pos, x);
      pos += 8;
    }
  return out;
}

}  // namespace

std::uint64_t FieldHeader::payload_bytes() const {
  return static_cast<std::uint64_t>(box.size()) * static_cast<std::uint64_t>(components) * times.size() * 8u;
}

std::vector<char> encode(const SpaceTimeField& f) {
  FieldHeader h{f.box(), 3, std::vector<double>(f.times().begin(), f.times().end())};
  std::vector<std::span<const double>> chunks;
  for (const auto& fr : f.frames())
    for (int c = 0; c < 3; ++c) chunks.push_back(fr.component(c));
  return frame_bytes(h, chunks);
}

std::vector<char> encode(const ScalarGrid& g) {
  FieldHeader h{g.box(), 1, {0.0}};
  return frame_bytes(h, {g.data()});
}

FieldHeader decode_header(const std::vector<char>& bytes, std::uint64_t* payload_offset) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw FormatError("bad magic: not a little-endian regscan field file", 0);
  if (bytes.size() < 16) throw FormatError("truncated header length", bytes.size());
  const std::uint64_t len = get_u64(bytes.data() + 8);
  if (len > bytes.size() - 16)
    throw FormatError("header length " + std::to_string(len) + " exceeds file size", 8);
  json j;
  try {
    j = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("header is not valid JSON: ") + e.what(), 16 + e.byte);
  }
  FieldHeader h;
  try {
    if (j.at("format") != "regscan-field") throw FormatError("unknown format tag", 16);
    if (j.at("version").get<int>() != 1) throw FormatError("unsupported field version", 16);
    const auto lo = j.at("box").at("lo").get<Vec3>();
    const auto hi = j.at("box").at("hi").get<Vec3>();
    const auto n = j.at("box").at("n").get<Index3>();
    h.box = Box3(lo, hi, n);
    h.components = j.at("components").get<int>();
    h.times = j.at("times").get<std::vector<double>>();
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(std::string("invalid header: ") + e.what(), 16);
  }
  if (h.components != 1 && h.components != 3) throw FormatError("component count must be 1 or 3", 16);
  if (h.times.empty()) throw FormatError("header lists no frame times", 16);
  for (std::size_t i = 1; i < h.times.size(); ++i)
    if (!(h.times[i] > h.times[i - 1])) throw FormatError("frame times not strictly increasing", 16);
  const std::uint64_t off = 16 + len;
  const std::uint64_t have = bytes.size() - off;
  if (have != h.payload_bytes())
    throw FormatError("payload length mismatch: expected " + std::to_string(h.payload_bytes()) + " bytes, found " +
                          std::to_string(have),
                      off + std::min(have, h.payload_bytes()));
  if (payload_offset) *payload_offset = off;
  return h;
}

SpaceTimeField decode_field(const std::vector<char>& bytes) {
  std::uint64_t off = 0;
  const FieldHeader h = decode_header(bytes, &off);
  if (h.components != 3) throw FormatError("expected a 3-component velocity field", 16);
  const std::size_t n = h.box.size();
  std::vector<VectorGrid> frames;
  std::uint64_t pos = off;
  for (std::size_t t = 0; t < h.times.size(); ++t) {
    std::array<std::vector<double>, 3> comp;
    for (int c = 0; c < 3; ++c) {
      comp[c].resize(n);
      for (std::size_t i = 0; i < n; ++i, pos += 8) {
        const double x = get_f64(bytes.data() + pos);
        if (!std::isfinite(x)) throw FormatError("non-finite sample in payload", pos);
        comp[c][i] = x;
      }
    }
    frames.emplace_back(h.box, std::move(comp));
  }
  return SpaceTimeField(h.times, std::move(frames));
}

ScalarGrid decode_scalar(const std::vector<char>& bytes) {
  std::uint64_t off = 0;
  const FieldHeader h = decode_header(bytes, &off);
  if (h.components != 1 || h.times.size() != 1) throw FormatError("expected a one-frame scalar field", 16);
  std::vector<double> d(h.box.size());
  std::uint64_t pos = off;
  for (auto& x : d) {
    x = get_f64(bytes.data() + pos);
    if (!std::isfinite(x)) throw FormatError("non-finite sample in payload", pos);
    pos += 8;
  }
  return ScalarGrid(h.box, std::move(d));
}

std::vector<char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io error", "cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

namespace {
void write_bytes(const std::filesystem::path& path, const std::vector<char>& b) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io error", "cannot write " + path.string());
  out.write(b.data(), static_cast<std::streamsize>(b.size()));
  if (!out) throw Error("io error", "short write to " + path.string());
}
}  // namespace

void write_field(const std::filesystem::path& path, const SpaceTimeField& f) { write_bytes(path, encode(f)); }

void write_field(const std::filesystem::path& path, const VectorGrid& frame, double t) {
  write_field(path, SpaceTimeField::stationary(frame, t));
}

void write_scalar(const std::filesystem::path& path, const ScalarGrid& g) { write_bytes(path, encode(g)); }

SpaceTimeField read_field(const std::filesystem::path& path) { return decode_field(read_bytes(path)); }
ScalarGrid read_scalar(const std::filesystem::path& path) { return decode_scalar(read_bytes(path)); }
FieldHeader read_header(const std::filesystem::path& path) { return decode_header(read_bytes(path)); }

}  // namespace regscan::io
