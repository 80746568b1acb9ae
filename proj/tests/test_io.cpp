#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "pcqkit/error.hpp"
#include "pcqkit/ply.hpp"

using namespace pcqkit;
using pcqkit::testing::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  f << s;
}

template <typename T>
void put(std::string& out, T v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::InvalidArgument;
}

const char* kOneVertexHeader =
    "ply\nformat %s 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
    "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";

std::string header(const char* fmt) {
  char buf[512];
  std::snprintf(buf, sizeof buf, kOneVertexHeader, fmt);
  return buf;
}

}  // namespace

TEST_CASE("ascii single vertex with color") {
  TempDir dir;
  write_text(dir / "a.ply", header("ascii") + "0 0 0 255 0 0\n");
  const auto c = load_ply(dir / "a.ply");
  REQUIRE(c.size() == 1);
  CHECK(c.positions[0] == Vec3(0, 0, 0));
  REQUIRE(c.has_colors());
  CHECK((*c.colors)[0] == Rgb{255, 0, 0});
  CHECK_FALSE(c.has_normals());
}

TEST_CASE("binary little endian equals ascii") {
  TempDir dir;
  write_text(dir / "a.ply", header("ascii") + "1.5 2 -3.25 10 20 30\n");
  std::string bin = header("binary_little_endian");
  put(bin, 1.5f);
  put(bin, 2.0f);
  put(bin, -3.25f);
  put<std::uint8_t>(bin, 10);
  put<std::uint8_t>(bin, 20);
  put<std::uint8_t>(bin, 30);
  write_text(dir / "b.ply", bin);
  const auto a = load_ply(dir / "a.ply", 10);
  const auto b = load_ply(dir / "b.ply", 10);
  CHECK(a.positions == b.positions);
  CHECK(*a.colors == *b.colors);
}

TEST_CASE("unknown properties are skipped and normals picked up") {
  TempDir dir;
  write_text(dir / "n.ply",
             "ply\nformat ascii 1.0\ncomment scan\nelement vertex 2\nproperty double x\nproperty double y\n"
             "property double z\nproperty float intensity\nproperty float nx\nproperty float ny\nproperty float nz\n"
             "element face 0\nproperty list uchar int vertex_indices\nend_header\n"
             "1 2 3 0.5 0 0 2\n4 5 6 0.7 3 0 4\n");
  const auto c = load_ply(dir / "n.ply");
  REQUIRE(c.size() == 2);
  CHECK(c.positions[1] == Vec3(4, 5, 6));
  REQUIRE(c.has_normals());
  CHECK((*c.normals)[0].isApprox(Vec3(0, 0, 1)));
  CHECK((*c.normals)[1].isApprox(Vec3(0.6, 0, 0.8)));
  CHECK(c.bit_depth_inferred);
  CHECK(c.bit_depth == 3);
}

TEST_CASE("declared count larger than data") {
  TempDir dir;
  std::string body;
  for (int i = 0; i < 9; ++i) body += std::to_string(i) + " 0 0 1 2 3\n";
  std::string h = header("ascii");
  h.replace(h.find("vertex 1"), 8, "vertex 10");
  write_text(dir / "short.ply", h + body);
  CHECK(code_of([&] { load_ply(dir / "short.ply"); }) == ErrorCode::CountMismatch);

  std::string bin = h;
  bin.replace(bin.find("ascii"), 5, "binary_little_endian");
  for (int i = 0; i < 9; ++i) {
    put(bin, 1.0f);
    put(bin, 1.0f);
    put(bin, 1.0f);
    bin.append(3, '\0');
  }
  write_text(dir / "short_bin.ply", bin);
  CHECK(code_of([&] { load_ply(dir / "short_bin.ply"); }) == ErrorCode::CountMismatch);
}

TEST_CASE("header errors") {
  TempDir dir;
  write_text(dir / "nomagic.ply", "plx\nformat ascii 1.0\nelement vertex 0\nend_header\n");
  CHECK(code_of([&] { load_ply(dir / "nomagic.ply"); }) == ErrorCode::MalformedHeader);
  write_text(dir / "be.ply", header("binary_big_endian"));
  CHECK(code_of([&] { load_ply(dir / "be.ply"); }) == ErrorCode::UnsupportedFormat);
  write_text(dir / "noxyz.ply", "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n1\n");
  CHECK(code_of([&] { load_ply(dir / "noxyz.ply"); }) == ErrorCode::MalformedHeader);
  CHECK(code_of([&] { load_ply(dir / "missing.ply"); }) == ErrorCode::IoFailure);
}

TEST_CASE("save and load round trip") {
  TempDir dir;
  Rng rng(11);
  auto c = pcqkit::testing::random_cloud(100, 1023, rng);
  for (auto& p : c.positions) p = p.array().round().matrix();
  for (bool binary : {false, true}) {
    CAPTURE(binary);
    const auto path = dir / (binary ? "rt_bin.ply" : "rt_ascii.ply");
    save_ply(c, path, binary);
    const auto back = load_ply(path);
    CHECK(back.positions == c.positions);
    CHECK(*back.colors == *c.colors);
    CHECK(back.bit_depth == 10);
    const auto again = load_ply(path);
    CHECK(again.positions == back.positions);
  }
}

TEST_CASE("non-integer coordinates survive both encodings") {
  TempDir dir;
  Rng rng(5);
  auto c = pcqkit::testing::random_cloud(50, 3.0, rng);
  c.positions[0] = Vec3(0.1, 1.0 / 3.0, 1e-17);
  for (bool binary : {false, true}) {
    save_ply(c, dir / "f.ply", binary);
    CHECK(load_ply(dir / "f.ply", 10).positions == c.positions);
  }
}

TEST_CASE("unwritable path") {
  PointCloud c = pcqkit::testing::single_point(Vec3(1, 2, 3));
  CHECK(code_of([&] { save_ply(c, "/nonexistent-dir/x/y.ply", false); }) == ErrorCode::IoFailure);
}

TEST_CASE("bounding box") {
  PointCloud c;
  c.positions = {Vec3(0, 0, 0), Vec3(2, 4, 6)};
  auto b = bounding_box(c);
  CHECK(b.min_corner == Vec3(0, 0, 0));
  CHECK(b.max_corner == Vec3(2, 4, 6));
  CHECK(b.centroid() == Vec3(1, 2, 3));

  c.positions = {Vec3(3, -1, 2)};
  b = bounding_box(c);
  CHECK(b.min_corner == b.max_corner);

  c.positions.clear();
  for (int i = 0; i < 8; ++i) c.positions.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  b = bounding_box(c);
  CHECK(b.min_corner == Vec3(0, 0, 0));
  CHECK(b.max_corner == Vec3(1, 1, 1));

  c.positions.clear();
  CHECK(code_of([&] { bounding_box(c); }) == ErrorCode::EmptyCloud);
}

TEST_CASE("validation and bit depth inference") {
  PointCloud c;
  c.positions = {Vec3(0, 0, 0), Vec3(1023, 5, 5)};
  CHECK(infer_bit_depth(c) == 10);
  c.positions[1].x() = 1024;
  CHECK(infer_bit_depth(c) == 11);
  c.bit_depth = 10;
  CHECK_NOTHROW(validate(c));
  CHECK(code_of([&] { validate(c, true); }) == ErrorCode::InvalidCloud);
  c.colors = std::vector<Rgb>{{1, 2, 3}};
  CHECK(code_of([&] { validate(c); }) == ErrorCode::InvalidCloud);
  c.colors.reset();
  c.bit_depth = 33;
  CHECK(code_of([&] { validate(c); }) == ErrorCode::InvalidCloud);
  CHECK(code_of([&] { validate(PointCloud{}); }) == ErrorCode::EmptyCloud);
  c.bit_depth = 10;
  CHECK(c.peak() == 1023.0);
}
