#include "pcqkit/psnr.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "pcqkit/error.hpp"
#include "pcqkit/normals.hpp"

namespace pcqkit {
namespace {

void require_non_empty(const PointCloud& ref, const PointCloud& dist) {
  if (ref.empty() || dist.empty()) throw Error(ErrorCode::EmptyCloud, "PSNR needs two non-empty clouds");
}

// Mean over `from` of the squared distance to the nearest point of `to`.
double mean_point_error(const PointCloud& from, const SpatialIndex& to_index) {
  double sum = 0.0;
  for (const auto& p : from.positions) {
    double d2 = 0.0;
    to_index.nearest(p, &d2);
    sum += d2;
  }
  return sum / static_cast<double>(from.size());
}

// Mean over `from` of (v . n)^2 where v = p - nn(p) and n = normal at nn(p).
double mean_plane_error(const PointCloud& from, const PointCloud& to, const SpatialIndex& to_index) {
  double sum = 0.0;
  const auto& normals = *to.normals;
  for (const auto& p : from.positions) {
    const std::size_t j = to_index.nearest(p);
    const double e = (p - to.positions[j]).dot(normals[j]);
    sum += e * e;
  }
  return sum / static_cast<double>(from.size());
}

PsnrResult finish(double forward, double backward, double peak, double scale) {
  PsnrResult r;
  r.mse_forward = forward;
  r.mse_backward = backward;
  r.mse_symmetric = std::max(forward, backward);
  r.peak = peak;
  r.psnr_db = psnr_from_mse(r.mse_symmetric, peak, scale);
  return r;
}

const PointCloud& with_normals(const PointCloud& cloud, const SpatialIndex& index, double radius,
                               std::optional<PointCloud>& storage) {
  if (cloud.has_normals()) return cloud;
  if (cloud.size() < 3)
    throw Error(ErrorCode::MissingNormalsUnrecoverable, "cloud without normals has fewer than 3 points");
  storage = estimate_normals(cloud, index, radius).cloud;
  return *storage;
}

}  // namespace

double psnr_from_mse(double mse, double peak, double scale) {
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(scale * peak * peak / mse);
}

PsnrResult compute_d1(const PointCloud& ref, const PointCloud& dist, double peak) {
  require_non_empty(ref, dist);
  return compute_d1(ref, build_index(ref), dist, build_index(dist), peak);
}

PsnrResult compute_d1(const PointCloud& ref, const SpatialIndex& ref_index, const PointCloud& dist,
                      const SpatialIndex& dist_index, double peak) {
  require_non_empty(ref, dist);
  return finish(mean_point_error(dist, ref_index), mean_point_error(ref, dist_index), peak, 3.0);
}

PsnrResult compute_d2(const PointCloud& ref, const PointCloud& dist, double peak, double normal_radius) {
  require_non_empty(ref, dist);
  return compute_d2(ref, build_index(ref), dist, build_index(dist), peak, normal_radius);
}

PsnrResult compute_d2(const PointCloud& ref, const SpatialIndex& ref_index, const PointCloud& dist,
                      const SpatialIndex& dist_index, double peak, double normal_radius) {
  require_non_empty(ref, dist);
  std::optional<PointCloud> ref_storage, dist_storage;
  const PointCloud& ref_n = with_normals(ref, ref_index, normal_radius, ref_storage);
  const PointCloud& dist_n = with_normals(dist, dist_index, normal_radius, dist_storage);
  return finish(mean_plane_error(dist_n, ref_n, ref_index), mean_plane_error(ref_n, dist_n, dist_index), peak, 3.0);
}

YuvResult compute_yuv(const PointCloud& ref, const PointCloud& dist, const YuvOptions& options) {
  require_non_empty(ref, dist);
  return compute_yuv(ref, build_index(ref), dist, build_index(dist), options);
}

YuvResult compute_yuv(const PointCloud& ref, const SpatialIndex& ref_index, const PointCloud& dist,
                      const SpatialIndex& dist_index, const YuvOptions& options) {
  require_non_empty(ref, dist);
  if (!ref.has_colors() || !dist.has_colors())
    throw Error(ErrorCode::MissingAttribute, "PSNR YUV needs colors on both clouds");

  auto to_ycc = [&](const PointCloud& c) {
    std::vector<YCbCr> out;
    out.reserve(c.size());
    for (const auto& rgb : *c.colors) out.push_back(rgb_to_ycbcr(rgb, options.coefficients));
    return out;
  };
  const auto ref_ycc = to_ycc(ref);
  const auto dist_ycc = to_ycc(dist);

  auto channel_mse = [](const PointCloud& from, const std::vector<YCbCr>& from_ycc,
                        const std::vector<YCbCr>& to_ycc, const SpatialIndex& to_index) {
    std::array<double, 3> sum{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < from.size(); ++i) {
      const YCbCr& a = from_ycc[i];
      const YCbCr& b = to_ycc[to_index.nearest(from.positions[i])];
      const double dy = a.y - b.y;
      const double du = a.cb - b.cb;
      const double dv = a.cr - b.cr;
      sum[0] += dy * dy;
      sum[1] += du * du;
      sum[2] += dv * dv;
    }
    for (auto& s : sum) s /= static_cast<double>(from.size());
    return sum;
  };
  const auto forward = channel_mse(dist, dist_ycc, ref_ycc, ref_index);
  const auto backward = channel_mse(ref, ref_ycc, dist_ycc, dist_index);

  constexpr double peak = 255.0;
  std::array<PsnrResult, 3> ch;
  for (int c = 0; c < 3; ++c) {
    ch[c] = finish(forward[c], backward[c], peak, 1.0);
    if (options.symmetry == YuvSymmetry::MaxPsnr) {
      const double pf = psnr_from_mse(forward[c], peak, 1.0);
      const double pb = psnr_from_mse(backward[c], peak, 1.0);
      ch[c].psnr_db = std::max(pf, pb);
      ch[c].mse_symmetric = std::min(forward[c], backward[c]);
    }
  }
  YuvResult r{ch[0], ch[1], ch[2], 0.0};
  r.psnr_combined = (6.0 * capped(r.psnr_y.psnr_db, options.cap_db) + capped(r.psnr_u.psnr_db, options.cap_db) +
                     capped(r.psnr_v.psnr_db, options.cap_db)) /
                    8.0;
  return r;
}

}  // namespace pcqkit
