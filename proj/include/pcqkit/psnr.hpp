#pragma once

#include <limits>
#include <optional>

#include "pcqkit/colorspace.hpp"
#include "pcqkit/point_cloud.hpp"
#include "pcqkit/spatial_index.hpp"

namespace pcqkit {

struct PsnrResult {
  double mse_forward = 0.0;   // dist points against their nearest ref point
  double mse_backward = 0.0;  // ref points against their nearest dist point
  double mse_symmetric = 0.0;
  double psnr_db = std::numeric_limits<double>::infinity();
  double peak = 0.0;
};

/// 10 log10(scale * peak^2 / mse); +inf for mse == 0.
double psnr_from_mse(double mse, double peak, double scale);

/// Finite stand-in for +inf in fused features and in the YUV combination.
inline double capped(double psnr_db, double cap) { return psnr_db > cap ? cap : psnr_db; }

/// Point-to-point geometry PSNR with the 3 * peak^2 convention.
PsnrResult compute_d1(const PointCloud& ref, const PointCloud& dist, double peak);
PsnrResult compute_d1(const PointCloud& ref, const SpatialIndex& ref_index, const PointCloud& dist,
                      const SpatialIndex& dist_index, double peak);

/// Point-to-plane geometry PSNR: squared projection of each error vector on
/// the normal of its nearest neighbor. The backward pass projects on the
/// dist-side normals. Clouds lacking normals get them estimated with
/// `normal_radius`; clouds too small for that raise
/// MissingNormalsUnrecoverable.
PsnrResult compute_d2(const PointCloud& ref, const PointCloud& dist, double peak, double normal_radius = 20.0);
PsnrResult compute_d2(const PointCloud& ref, const SpatialIndex& ref_index, const PointCloud& dist,
                      const SpatialIndex& dist_index, double peak, double normal_radius = 20.0);

enum class YuvSymmetry {
  MaxMse,   // worst direction per channel, i.e. minimum PSNR
  MaxPsnr,  // literal "maximum between the two computations"
};

struct YuvOptions {
  YCbCrCoefficients coefficients{};
  YuvSymmetry symmetry = YuvSymmetry::MaxMse;
  double cap_db = 100.0;
};

struct YuvResult {
  PsnrResult psnr_y;
  PsnrResult psnr_u;
  PsnrResult psnr_v;
  double psnr_combined = 0.0;  // (6 Y + U + V) / 8 over capped channel values
};

YuvResult compute_yuv(const PointCloud& ref, const PointCloud& dist, const YuvOptions& options = {});
YuvResult compute_yuv(const PointCloud& ref, const SpatialIndex& ref_index, const PointCloud& dist,
                      const SpatialIndex& dist_index, const YuvOptions& options = {});

}  // namespace pcqkit
