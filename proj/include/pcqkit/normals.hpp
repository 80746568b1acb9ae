#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pcqkit/point_cloud.hpp"
#include "pcqkit/spatial_index.hpp"

namespace pcqkit {

/// Height field z = a x^2 + b xy + c y^2 + d x + e y + f fitted in a local
/// PCA frame whose origin is the query point. Columns of `frame` are the
/// tangent axes u, v and the plane normal w.
struct LocalSurface {
  Vec3 origin = Vec3::Zero();
  Eigen::Matrix3d frame = Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, 6, 1> coeffs = Eigen::Matrix<double, 6, 1>::Zero();
  bool degenerate = false;  // neighbors collinear (or fewer than 3)
  bool plane_only = false;  // fewer than 6 neighbors, PCA plane used

  /// Unit surface normal at the origin's projection (unoriented).
  Vec3 normal() const;
  /// |mean curvature| at the origin's projection; 0 for plane-only fits.
  double mean_curvature() const;
};

LocalSurface fit_local_surface(std::span<const Vec3> neighbors, const Vec3& origin);

struct NormalEstimation {
  PointCloud cloud;             // input cloud with `normals` filled in
  std::vector<bool> degenerate; // per point: fallback normal (0,0,1) used
  std::size_t degenerate_count = 0;
};

/// Per point, fits the quadric above to the radius neighborhood and takes the
/// surface normal, oriented away from the bounding-box centroid. Radius
/// neighborhoods with fewer than 3 points are topped up with nearest
/// neighbors so isolated points still get a plane estimate.
NormalEstimation estimate_normals(const PointCloud& cloud, double radius = 20.0);
NormalEstimation estimate_normals(const PointCloud& cloud, const SpatialIndex& index, double radius = 20.0);

}  // namespace pcqkit
