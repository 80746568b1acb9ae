#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace pcqkit {

using Vec3 = Eigen::Vector3d;
using Rgb = std::array<std::uint8_t, 3>;

/// Positions are always stored as doubles regardless of the on-disk type.
/// Colors and normals, when present, are parallel to `positions`.
struct PointCloud {
  std::vector<Vec3> positions;
  std::optional<std::vector<Rgb>> colors;
  std::optional<std::vector<Vec3>> normals;
  int bit_depth = 10;
  bool bit_depth_inferred = false;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  bool has_colors() const { return colors.has_value(); }
  bool has_normals() const { return normals.has_value(); }

  /// Largest representable coordinate of the voxel grid, 2^bit_depth - 1.
  double peak() const;
};

struct BoundingBox {
  Vec3 min_corner;
  Vec3 max_corner;

  Vec3 centroid() const { return 0.5 * (min_corner + max_corner); }
  double diagonal() const { return (max_corner - min_corner).norm(); }
};

BoundingBox bounding_box(const PointCloud& cloud);

/// Checks the structural invariants (non-empty, parallel attribute arrays,
/// unit normals, bit depth range). When `voxelized` is set, positions must
/// also lie on [0, 2^bit_depth - 1]. Throws InvalidCloud / EmptyCloud.
void validate(const PointCloud& cloud, bool voxelized = false);

/// ceil(log2(max coordinate + 1)), at least 1.
int infer_bit_depth(const PointCloud& cloud);

}  // namespace pcqkit
