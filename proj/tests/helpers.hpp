#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "pcqkit/point_cloud.hpp"
#include "pcqkit/util.hpp"

namespace pcqkit::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("pcqkit-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Rgb random_color(Rng& rng) {
  return {static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
          static_cast<std::uint8_t>(rng.below(256))};
}

/// Points on a sphere of the given radius centred in a 10-bit grid; colors
/// vary smoothly with position plus a little per-point jitter.
inline PointCloud sphere_cloud(std::size_t n, double radius, Rng& rng, bool colored = true) {
  PointCloud c;
  c.bit_depth = 10;
  c.positions.reserve(n);
  std::vector<Rgb> colors;
  const Vec3 centre(512, 512, 512);
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 d(rng.normal(), rng.normal(), rng.normal());
    if (d.norm() < 1e-9) d = Vec3(1, 0, 0);
    d.normalize();
    c.positions.push_back(centre + radius * d);
    if (colored) {
      auto ch = [&](double v) {
        const double x = 127.5 + 100.0 * v + rng.uniform(-10, 10);
        return static_cast<std::uint8_t>(std::clamp(std::lround(x), 0L, 255L));
      };
      colors.push_back({ch(d.x()), ch(d.y()), ch(d.z())});
    }
  }
  if (colored) c.colors = std::move(colors);
  return c;
}

/// Integer-grid samples of a wavy height field, the usual shape of a
/// voxelized scan. Duplicate voxels are not removed.
inline PointCloud surface_cloud(std::size_t side, Rng& rng, bool colored = true) {
  PointCloud c;
  c.bit_depth = 10;
  std::vector<Rgb> colors;
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      const double x = 100.0 + static_cast<double>(i);
      const double y = 100.0 + static_cast<double>(j);
      const double z = std::round(200.0 + 8.0 * std::sin(x / 9.0) * std::cos(y / 11.0));
      c.positions.emplace_back(x, y, z);
      if (colored) {
        const double u = 0.5 + 0.5 * std::sin(x / 7.0 + y / 13.0);
        colors.push_back({static_cast<std::uint8_t>(std::lround(40 + 180 * u)),
                          static_cast<std::uint8_t>(std::lround(200 - 150 * u)),
                          static_cast<std::uint8_t>(rng.below(40) + 100)});
      }
    }
  }
  if (colored) c.colors = std::move(colors);
  return c;
}

/// Uniform random points in a cube with random colors.
inline PointCloud random_cloud(std::size_t n, double extent, Rng& rng) {
  PointCloud c;
  c.bit_depth = 10;
  std::vector<Rgb> colors;
  for (std::size_t i = 0; i < n; ++i) {
    c.positions.emplace_back(rng.uniform(0, extent), rng.uniform(0, extent), rng.uniform(0, extent));
    colors.push_back(random_color(rng));
  }
  c.colors = std::move(colors);
  return c;
}

/// Adds isotropic Gaussian noise of standard deviation sigma to every
/// position; attributes are kept.
inline PointCloud add_geometry_noise(const PointCloud& cloud, double sigma, Rng& rng) {
  PointCloud out = cloud;
  out.normals.reset();
  for (auto& p : out.positions) p += sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
  return out;
}

inline PointCloud single_point(const Vec3& p, Rgb color = {0, 0, 0}) {
  PointCloud c;
  c.bit_depth = 10;
  c.positions = {p};
  c.colors = std::vector<Rgb>{color};
  return c;
}

}  // namespace pcqkit::testing
