#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "pcqkit/colorspace.hpp"
#include "pcqkit/normals.hpp"
#include "pcqkit/point_cloud.hpp"
#include "pcqkit/spatial_index.hpp"

namespace pcqkit {

/// Where the curvature quadric for a reference point comes from.
enum class QuadricFit {
  TargetNeighbors,  // fit to the target points inside the ball around the ref point
  OwnNeighbors,     // fit per target point on its own neighborhood, transferred by nearest neighbor
};

struct CorrespondenceOptions {
  QuadricFit fit = QuadricFit::TargetNeighbors;
  PerceptualMode color_mode = PerceptualMode::CIELAB;
  const Lab2000hlTable* table = nullptr;
};

/// For every reference point: the quadric fitted around it, the mean
/// curvature of that quadric, and the perceptual color of the nearest target
/// point. Built once against the reference itself and once against the
/// distorted cloud; the two are then compared sample by sample.
struct Correspondence {
  double radius = 0.0;
  QuadricFit fit = QuadricFit::TargetNeighbors;
  PerceptualMode color_mode = PerceptualMode::CIELAB;
  std::vector<LocalSurface> surfaces;
  std::vector<double> curvature;
  std::vector<PerceptualColor> colors;
  std::vector<std::size_t> nearest;  // index into the target cloud
  std::size_t degenerate_count = 0;  // quadrics that fell back to a plane
};

Correspondence build_correspondence(const PointCloud& ref, const PointCloud& target, const SpatialIndex& target_index,
                                    double radius, const CorrespondenceOptions& options = {});
Correspondence build_correspondence(const PointCloud& ref, const PointCloud& target, double radius,
                                    const CorrespondenceOptions& options = {});

/// Defaults: k1 = k2 = k3 = k5 = k6 = 1e-8 and k4 = k7 = k8 = 0.01.
struct PcqmConstants {
  std::array<double, 8> k{1e-8, 1e-8, 1e-8, 0.01, 1e-8, 1e-8, 0.01, 0.01};
};

/// Gaussian-weighted local statistics at one reference point; "ref" values
/// come from the reference correspondence and "dist" ones from the distorted.
struct PcqmLocalStats {
  double mu_rho_ref = 0, mu_rho_dist = 0;
  double var_rho_ref = 0, var_rho_dist = 0, cov_rho = 0;
  double mu_l_ref = 0, mu_l_dist = 0;
  double var_l_ref = 0, var_l_dist = 0, cov_l = 0;
  double mu_c_ref = 0, mu_c_dist = 0;
  double mean_delta_hue = 0;
};

/// f1..f8 at one point, each clamped to [0, 1]. f1-f3 are 0 and f4-f8 are 1
/// for identical statistics.
std::array<double, 8> pcqm_point_features(const PcqmLocalStats& s, const PcqmConstants& constants = {});

struct PcqmFeatures {
  std::array<double, 8> f{};  // average-pooled over reference points
  PcqmConstants constants;
  PerceptualMode color_mode = PerceptualMode::CIELAB;
  std::vector<std::array<double, 8>> per_point;  // filled on request
};

/// Weights are w(d) = exp(-d^2 / (2 (h/3)^2)) over the radius-h reference
/// neighborhood of each point.
PcqmFeatures compute_pcqm_features(const PointCloud& ref, const SpatialIndex& ref_index, const Correspondence& corr_ref,
                                   const Correspondence& corr_dist, const PcqmConstants& constants = {},
                                   bool keep_per_point = false);

/// Names are "f1".."f8". f1-f3 enter as is, f4-f8 as (1 - f) so that 0 means
/// pristine and larger values mean worse.
double pcqm_aggregate(const PcqmFeatures& features, const std::map<std::string, double>& weights);
/// 0.18 f3 + 0.44 (1 - f4) + 0.38 (1 - f6)
double pcqm_aggregate(const PcqmFeatures& features);

/// 0.02 x bounding-box diagonal of `ref`.
double default_pcqm_radius(const PointCloud& ref, double fraction = 0.02);

}  // namespace pcqkit
