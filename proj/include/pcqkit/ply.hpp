#pragma once

#include <filesystem>
#include <optional>

#include "pcqkit/point_cloud.hpp"

namespace pcqkit {

/// Reads the `vertex` element of an ASCII or binary little-endian PLY 1.0
/// file. x/y/z are required; red/green/blue and nx/ny/nz are picked up when
/// present and every other property is skipped. Normals are renormalized.
///
/// `bit_depth` overrides the stored depth; when absent the depth is inferred
/// from the largest coordinate and `bit_depth_inferred` is set.
PointCloud load_ply(const std::filesystem::path& path, std::optional<int> bit_depth = std::nullopt);

void save_ply(const PointCloud& cloud, const std::filesystem::path& path, bool binary);

}  // namespace pcqkit
