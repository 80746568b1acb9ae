#pragma once

#include <span>
#include <string>
#include <vector>

#include "pcqkit/colorspace.hpp"
#include "pcqkit/point_cloud.hpp"
#include "pcqkit/spatial_index.hpp"

namespace pcqkit {

enum class DispersionAttribute { Geometry, Luminance };

enum class DispersionEstimator { Variance, Median, MeanAbsDev, MedianAbsDev, Cov, Qcd };

std::string to_string(DispersionEstimator e);
DispersionEstimator dispersion_estimator_from_string(const std::string& name);

/// Applies `e` to a sample. Variance is the population variance; quartiles
/// use linear interpolation between order statistics.
double dispersion(std::span<const double> values, DispersionEstimator e);

struct DispersionField {
  std::vector<double> values;  // one per point
  DispersionAttribute attribute = DispersionAttribute::Geometry;
  DispersionEstimator estimator = DispersionEstimator::Variance;
  std::size_t k_neighbors = 12;
};

/// Geometry: the estimator over the distances to the k nearest neighbors
/// (the point itself included, at distance 0). Luminance: over the Y values
/// of those neighbors.
DispersionField extract_dispersion(const PointCloud& cloud, const SpatialIndex& index, DispersionAttribute attribute,
                                   DispersionEstimator estimator = DispersionEstimator::Variance,
                                   std::size_t k_neighbors = 12, const YCbCrCoefficients& ycc = {});
DispersionField extract_dispersion(const PointCloud& cloud, DispersionAttribute attribute,
                                   DispersionEstimator estimator = DispersionEstimator::Variance,
                                   std::size_t k_neighbors = 12, const YCbCrCoefficients& ycc = {});

struct PointSsimScore {
  double score = 0.0;
  double pooling_exponent = 1.0;
};

inline constexpr double kPointSsimEpsilon = 1e-9;

/// |fx - fy| / (max(|fx|, |fy|) + eps)
double relative_difference(double fx, double fy, double eps = kPointSsimEpsilon);

/// Each dist point is paired with its nearest ref point; the per-point
/// relative differences are raised to `pooling_exponent` and averaged.
PointSsimScore pointssim_score(const DispersionField& ref_field, const DispersionField& dist_field,
                               const SpatialIndex& ref_index, const PointCloud& dist, double pooling_exponent = 1.0);
PointSsimScore pointssim_score(const DispersionField& ref_field, const DispersionField& dist_field,
                               const PointCloud& ref, const PointCloud& dist, double pooling_exponent = 1.0);

}  // namespace pcqkit
