#include "pcqkit/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcqkit/error.hpp"

namespace pcqkit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::InvalidCloud: return "InvalidCloud";
    case ErrorCode::MissingAttribute: return "MissingAttribute";
    case ErrorCode::MissingNormalsUnrecoverable: return "MissingNormalsUnrecoverable";
    case ErrorCode::DegenerateNeighborhood: return "DegenerateNeighborhood";
    case ErrorCode::TableMissing: return "TableMissing";
    case ErrorCode::SettingsMismatch: return "SettingsMismatch";
    case ErrorCode::UnknownFeatureName: return "UnknownFeatureName";
    case ErrorCode::EmptyNeighborhood: return "EmptyNeighborhood";
    case ErrorCode::AllKeypointsEmpty: return "AllKeypointsEmpty";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::BadMosValue: return "BadMosValue";
    case ErrorCode::ConstantFeature: return "ConstantFeature";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::MissingFeatureColumn: return "MissingFeatureColumn";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::TooFewGroups: return "TooFewGroups";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::JoinMismatch: return "JoinMismatch";
    case ErrorCode::SchemaVersion: return "SchemaVersion";
    case ErrorCode::ConfigHashMismatch: return "ConfigHashMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

double PointCloud::peak() const { return std::ldexp(1.0, bit_depth) - 1.0; }

BoundingBox bounding_box(const PointCloud& cloud) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "bounding box of an empty cloud");
  BoundingBox box{cloud.positions.front(), cloud.positions.front()};
  for (const auto& p : cloud.positions) {
    box.min_corner = box.min_corner.cwiseMin(p);
    box.max_corner = box.max_corner.cwiseMax(p);
  }
  return box;
}

void validate(const PointCloud& cloud, bool voxelized) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "cloud has no points");
  const auto n = cloud.size();
  if (cloud.colors && cloud.colors->size() != n)
    throw Error(ErrorCode::InvalidCloud, "color count differs from position count");
  if (cloud.normals) {
    if (cloud.normals->size() != n)
      throw Error(ErrorCode::InvalidCloud, "normal count differs from position count");
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs((*cloud.normals)[i].norm() - 1.0) > 1e-6)
        throw Error(ErrorCode::InvalidCloud, "normal " + std::to_string(i) + " is not unit length");
    }
  }
  if (cloud.bit_depth < 1 || cloud.bit_depth > 32)
    throw Error(ErrorCode::InvalidCloud, "bit_depth outside [1, 32]");
  for (const auto& p : cloud.positions) {
    if (!p.allFinite()) throw Error(ErrorCode::InvalidCloud, "non-finite coordinate");
  }
  if (voxelized) {
    const double peak = cloud.peak();
    for (const auto& p : cloud.positions) {
      if (p.minCoeff() < 0.0 || p.maxCoeff() > peak)
        throw Error(ErrorCode::InvalidCloud, "position outside the declared voxel grid");
    }
  }
}

int infer_bit_depth(const PointCloud& cloud) {
  double max_coord = 0.0;
  for (const auto& p : cloud.positions) max_coord = std::max(max_coord, p.maxCoeff());
  const int depth = static_cast<int>(std::ceil(std::log2(max_coord + 1.0)));
  return std::clamp(depth, 1, 32);
}

}  // namespace pcqkit
