#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "pcqkit/point_cloud.hpp"

namespace pcqkit {

/// Result of a neighbor query, sorted ascending by (distance, index).
struct Neighborhood {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  std::size_t center = npos;  // source point when the query was a cloud point
  std::vector<std::size_t> indices;
  std::vector<double> distances;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

/// Exact kd-tree over a copy of the positions. Immutable after construction,
/// so concurrent queries are safe.
///
/// Distances are compared as squared sums dx*dx + dy*dy + dz*dz evaluated in
/// that order; the radius test is d^2 <= r*r. Ties resolve to the lower
/// point index.
class SpatialIndex {
 public:
  explicit SpatialIndex(std::span<const Vec3> points, std::size_t leaf_size = 8);

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  /// k nearest points (all points when k >= size()).
  Neighborhood knn(const Vec3& query, std::size_t k) const;
  /// Single nearest neighbor index; cheaper than knn(query, 1).
  std::size_t nearest(const Vec3& query, double* squared_distance = nullptr) const;
  /// Every point within distance r (inclusive).
  Neighborhood radius(const Vec3& query, double r) const;

 private:
  struct Node {
    Vec3 box_min;
    Vec3 box_max;
    std::size_t begin = 0;
    std::size_t end = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t begin, std::size_t end, std::size_t leaf_size);

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

SpatialIndex build_index(const PointCloud& cloud);

inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace pcqkit
