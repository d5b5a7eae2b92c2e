#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <limits>

#include "regscan/error.hpp"
#include "regscan/field_io.hpp"
#include "regscan/synth.hpp"

using namespace regscan;

namespace {
SpaceTimeField sample_field() {
  const Box3 b({-1, -0.5, 0}, {1, 0.5, 3}, {6, 5, 4});
  VectorGrid a = synth::sample(b, [](const Vec3& x) { return Vec3{x[0] * x[1], std::sin(x[2]), 1.0 / 3.0}; });
  VectorGrid c = synth::sample(b, [](const Vec3& x) { return Vec3{-x[2], 1e-300 * x[0], 0.1}; });
  return SpaceTimeField({0.0, 0.1, 0.30000000000000004}, {a, c, a});
}
}  // namespace

TEST_CASE("round trip is bit exact") {
  const SpaceTimeField f = sample_field();
  const auto bytes = io::encode(f);
  const SpaceTimeField g = io::decode_field(bytes);
  REQUIRE(g.size() == f.size());
  CHECK(g.box() == f.box());
  for (std::size_t t = 0; t < f.size(); ++t) {
    CHECK(g.times()[t] == f.times()[t]);
    for (int c = 0; c < 3; ++c) {
      auto a = f.frame(t).component(c);
      auto b = g.frame(t).component(c);
      CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
    }
  }
  CHECK(io::encode(g) == bytes);
}

TEST_CASE("files on disk") {
  const auto dir = std::filesystem::temp_directory_path() / "regscan_test_field_io";
  std::filesystem::create_directories(dir);
  const auto path = dir / "f.rsf";
  const SpaceTimeField f = sample_field();
  io::write_field(path, f);
  CHECK(io::encode(io::read_field(path)) == io::encode(f));
  const ScalarGrid s = f.frame(0).magnitude();
  io::write_scalar(dir / "s.rsf", s);
  const ScalarGrid s2 = io::read_scalar(dir / "s.rsf");
  CHECK(std::equal(s.data().begin(), s.data().end(), s2.data().begin()));
  CHECK(io::read_header(dir / "s.rsf").components == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("truncated payload reports sizes and offset") {
  auto bytes = io::encode(sample_field());
  bytes.resize(bytes.size() - 12);
  try {
    io::decode_field(bytes);
    FAIL("no error");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("expected") != std::string::npos);
    CHECK(msg.find("found") != std::string::npos);
    CHECK(e.offset() > 16);
  }
}

TEST_CASE("byte-swapped file fails the magic check") {
  auto bytes = io::encode(sample_field());
  std::reverse(bytes.begin(), bytes.begin() + 8);
  try {
    io::decode_field(bytes);
    FAIL("no error");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 0);
    CHECK(std::string(e.what()).find("magic") != std::string::npos);
  }
}

TEST_CASE("NaN payload is a format error at its offset") {
  auto bytes = io::encode(sample_field());
  std::uint64_t off = 0;
  io::decode_header(bytes, &off);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(bytes.data() + off + 8 * 5, &nan, 8);
  try {
    io::decode_field(bytes);
    FAIL("no error");
  } catch (const FormatError& e) {
    CHECK(e.offset() == off + 40);
  }
}

TEST_CASE("malformed headers") {
  auto bytes = io::encode(sample_field());
  SUBCASE("header longer than the file") {
    bytes[8] = static_cast<char>(0xff);
    bytes[13] = 0x7f;
    CHECK_THROWS_AS(io::decode_field(bytes), FormatError);
  }
  SUBCASE("broken JSON") {
    bytes[16] = '[';
    CHECK_THROWS_AS(io::decode_field(bytes), FormatError);
  }
  SUBCASE("scalar reader on a vector file") { CHECK_THROWS_AS(io::decode_scalar(bytes), FormatError); }
}
