#include "pcqkit/normals.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "pcqkit/error.hpp"

namespace pcqkit {

Vec3 LocalSurface::normal() const {
  if (degenerate) return Vec3(0.0, 0.0, 1.0);
  if (plane_only) return frame.col(2);
  const double fx = coeffs[3];
  const double fy = coeffs[4];
  Vec3 n = -fx * frame.col(0) - fy * frame.col(1) + frame.col(2);
  return n.normalized();
}

double LocalSurface::mean_curvature() const {
  if (degenerate || plane_only) return 0.0;
  const double fxx = 2.0 * coeffs[0];
  const double fxy = coeffs[1];
  const double fyy = 2.0 * coeffs[2];
  const double fx = coeffs[3];
  const double fy = coeffs[4];
  const double g = 1.0 + fx * fx + fy * fy;
  const double h = ((1.0 + fy * fy) * fxx - 2.0 * fx * fy * fxy + (1.0 + fx * fx) * fyy) / (2.0 * std::pow(g, 1.5));
  return std::abs(h);
}

LocalSurface fit_local_surface(std::span<const Vec3> neighbors, const Vec3& origin) {
  LocalSurface s;
  s.origin = origin;
  const auto n = neighbors.size();
  if (n < 3) {
    s.degenerate = true;
    return s;
  }

  Vec3 mean = Vec3::Zero();
  for (const auto& p : neighbors) mean += p;
  mean /= static_cast<double>(n);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : neighbors) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Vec3 ev = eig.eigenvalues();  // ascending
  if (!(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2]) {
    s.degenerate = true;
    return s;
  }
  const Eigen::Matrix3d vecs = eig.eigenvectors();
  s.frame.col(0) = vecs.col(2);
  s.frame.col(1) = vecs.col(1);
  s.frame.col(2) = vecs.col(2).cross(vecs.col(1)).normalized();

  if (n < 6) {
    s.plane_only = true;
    return s;
  }

  // Local coordinates, normalized by the tangent extent for conditioning.
  Eigen::MatrixXd design(n, 6);
  Eigen::VectorXd rhs(n);
  double extent = 0.0;
  std::vector<Vec3> local(n);
  for (std::size_t i = 0; i < n; ++i) {
    local[i] = s.frame.transpose() * (neighbors[i] - origin);
    extent = std::max({extent, std::abs(local[i].x()), std::abs(local[i].y())});
  }
  if (!(extent > 0.0)) {
    s.plane_only = true;
    return s;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double x = local[i].x() / extent;
    const double y = local[i].y() / extent;
    design.row(static_cast<Eigen::Index>(i)) << x * x, x * y, y * y, x, y, 1.0;
    rhs[static_cast<Eigen::Index>(i)] = local[i].z();
  }
  Eigen::Matrix<double, 6, 1> c = design.colPivHouseholderQr().solve(rhs);
  if (!c.allFinite()) {
    s.plane_only = true;
    return s;
  }
  const double e2 = extent * extent;
  s.coeffs << c[0] / e2, c[1] / e2, c[2] / e2, c[3] / extent, c[4] / extent, c[5];
  return s;
}

NormalEstimation estimate_normals(const PointCloud& cloud, double radius) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "normal estimation on an empty cloud");
  return estimate_normals(cloud, build_index(cloud), radius);
}

NormalEstimation estimate_normals(const PointCloud& cloud, const SpatialIndex& index, double radius) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "normal estimation on an empty cloud");
  NormalEstimation out{cloud, std::vector<bool>(cloud.size(), false), 0};
  const Vec3 centroid = bounding_box(cloud).centroid();
  std::vector<Vec3> normals(cloud.size());
  std::vector<Vec3> pts;

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    Neighborhood nb = index.radius(p, radius);
    if (nb.size() < 3) nb = index.knn(p, std::min<std::size_t>(6, cloud.size()));
    pts.clear();
    for (auto idx : nb.indices) pts.push_back(cloud.positions[idx]);

    const LocalSurface surface = fit_local_surface(pts, p);
    Vec3 normal = surface.normal();
    if (surface.degenerate) {
      out.degenerate[i] = true;
      ++out.degenerate_count;
    } else if (normal.dot(p - centroid) < 0.0) {
      normal = -normal;
    }
    normals[i] = normal;
  }
  out.cloud.normals = std::move(normals);
  return out;
}

}  // namespace pcqkit
