#include "pcqkit/pointssim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcqkit/error.hpp"

namespace pcqkit {
namespace {

// Linear interpolation between order statistics of a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return sorted[lo] + t * (sorted[hi] - sorted[lo]);
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Mean of v - v[0]; deviations taken against it vanish exactly on constant input.
double shifted_mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x - v[0];
  return s / static_cast<double>(v.size());
}

}  // namespace

std::string to_string(DispersionEstimator e) {
  switch (e) {
    case DispersionEstimator::Variance: return "variance";
    case DispersionEstimator::Median: return "median";
    case DispersionEstimator::MeanAbsDev: return "mean_abs_dev";
    case DispersionEstimator::MedianAbsDev: return "median_abs_dev";
    case DispersionEstimator::Cov: return "cov";
    case DispersionEstimator::Qcd: return "qcd";
  }
  return "variance";
}

DispersionEstimator dispersion_estimator_from_string(const std::string& name) {
  for (auto e : {DispersionEstimator::Variance, DispersionEstimator::Median, DispersionEstimator::MeanAbsDev,
                 DispersionEstimator::MedianAbsDev, DispersionEstimator::Cov, DispersionEstimator::Qcd}) {
    if (to_string(e) == name) return e;
  }
  throw Error(ErrorCode::BadConfig, "unknown dispersion estimator '" + name + "'");
}

double dispersion(std::span<const double> values, DispersionEstimator e) {
  if (values.empty()) return 0.0;
  switch (e) {
    case DispersionEstimator::Variance: {
      const double m = shifted_mean(values);
      double s = 0.0;
      for (double v : values) s += ((v - values[0]) - m) * ((v - values[0]) - m);
      return s / static_cast<double>(values.size());
    }
    case DispersionEstimator::Median: {
      std::vector<double> sorted(values.begin(), values.end());
      std::sort(sorted.begin(), sorted.end());
      return quantile_sorted(sorted, 0.5);
    }
    case DispersionEstimator::MeanAbsDev: {
      const double m = shifted_mean(values);
      double s = 0.0;
      for (double v : values) s += std::abs((v - values[0]) - m);
      return s / static_cast<double>(values.size());
    }
    case DispersionEstimator::MedianAbsDev: {
      std::vector<double> sorted(values.begin(), values.end());
      std::sort(sorted.begin(), sorted.end());
      const double med = quantile_sorted(sorted, 0.5);
      for (auto& v : sorted) v = std::abs(v - med);
      std::sort(sorted.begin(), sorted.end());
      return quantile_sorted(sorted, 0.5);
    }
    case DispersionEstimator::Cov: {
      const double m = mean_of(values);
      if (m == 0.0) return 0.0;
      return std::sqrt(dispersion(values, DispersionEstimator::Variance)) / std::abs(m);
    }
    case DispersionEstimator::Qcd: {
      std::vector<double> sorted(values.begin(), values.end());
      std::sort(sorted.begin(), sorted.end());
      const double q1 = quantile_sorted(sorted, 0.25);
      const double q3 = quantile_sorted(sorted, 0.75);
      return q1 + q3 == 0.0 ? 0.0 : std::abs(q3 - q1) / std::abs(q3 + q1);
    }
  }
  return 0.0;
}

DispersionField extract_dispersion(const PointCloud& cloud, DispersionAttribute attribute,
                                   DispersionEstimator estimator, std::size_t k_neighbors,
                                   const YCbCrCoefficients& ycc) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "dispersion of an empty cloud");
  return extract_dispersion(cloud, build_index(cloud), attribute, estimator, k_neighbors, ycc);
}

DispersionField extract_dispersion(const PointCloud& cloud, const SpatialIndex& index, DispersionAttribute attribute,
                                   DispersionEstimator estimator, std::size_t k_neighbors,
                                   const YCbCrCoefficients& ycc) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "dispersion of an empty cloud");
  if (k_neighbors == 0) throw Error(ErrorCode::InvalidArgument, "k_neighbors must be positive");
  std::vector<double> luma;
  if (attribute == DispersionAttribute::Luminance) {
    if (!cloud.has_colors()) throw Error(ErrorCode::MissingAttribute, "luminance dispersion needs colors");
    luma.reserve(cloud.size());
    for (const auto& c : *cloud.colors) luma.push_back(rgb_to_ycbcr(c, ycc).y);
  }

  DispersionField field;
  field.attribute = attribute;
  field.estimator = estimator;
  field.k_neighbors = k_neighbors;
  field.values.resize(cloud.size());
  std::vector<double> sample;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Neighborhood nb = index.knn(cloud.positions[i], k_neighbors);
    if (attribute == DispersionAttribute::Geometry) {
      sample = nb.distances;
    } else {
      sample.clear();
      for (auto j : nb.indices) sample.push_back(luma[j]);
    }
    field.values[i] = dispersion(sample, estimator);
  }
  return field;
}

double relative_difference(double fx, double fy, double eps) {
  return std::abs(fx - fy) / (std::max(std::abs(fx), std::abs(fy)) + eps);
}

PointSsimScore pointssim_score(const DispersionField& ref_field, const DispersionField& dist_field,
                               const SpatialIndex& ref_index, const PointCloud& dist, double pooling_exponent) {
  if (ref_field.attribute != dist_field.attribute || ref_field.estimator != dist_field.estimator ||
      ref_field.k_neighbors != dist_field.k_neighbors)
    throw Error(ErrorCode::SettingsMismatch, "dispersion fields were computed with different settings");
  if (dist_field.values.size() != dist.size() || ref_field.values.size() != ref_index.size())
    throw Error(ErrorCode::SettingsMismatch, "dispersion field length differs from its cloud");
  if (dist.empty()) throw Error(ErrorCode::EmptyCloud, "PointSSIM on an empty cloud");

  double sum = 0.0;
  for (std::size_t p = 0; p < dist.size(); ++p) {
    const std::size_t q = ref_index.nearest(dist.positions[p]);
    const double s = relative_difference(ref_field.values[q], dist_field.values[p]);
    sum += pooling_exponent == 1.0 ? s : std::pow(s, pooling_exponent);
  }
  return {sum / static_cast<double>(dist.size()), pooling_exponent};
}

PointSsimScore pointssim_score(const DispersionField& ref_field, const DispersionField& dist_field,
                               const PointCloud& ref, const PointCloud& dist, double pooling_exponent) {
  if (ref.empty()) throw Error(ErrorCode::EmptyCloud, "PointSSIM on an empty cloud");
  return pointssim_score(ref_field, dist_field, build_index(ref), dist, pooling_exponent);
}

}  // namespace pcqkit
