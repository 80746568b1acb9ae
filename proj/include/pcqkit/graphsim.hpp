#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pcqkit/colorspace.hpp"
#include "pcqkit/point_cloud.hpp"
#include "pcqkit/spatial_index.hpp"

namespace pcqkit {

struct KeypointSet {
  std::vector<std::size_t> indices;  // descending response, ties by ascending index
  std::vector<double> responses;     // parallel to `indices`
  double fraction = 0.1;
};

/// High-pass response ||p_i - mean(kNN(p_i))|| on the k-NN graph (the point
/// itself excluded); keeps the top ceil(fraction * N) points.
KeypointSet extract_keypoints(const PointCloud& ref, const SpatialIndex& ref_index, double fraction = 0.1,
                              std::size_t k_graph = 10);
KeypointSet extract_keypoints(const PointCloud& ref, double fraction = 0.1, std::size_t k_graph = 10);

/// Members of a keypoint-centred graph, sorted by distance to the query
/// position. Member 0 acts as the graph centre.
struct LocalGraph {
  Vec3 query = Vec3::Zero();
  std::vector<std::size_t> members;
  std::vector<Vec3> positions;
  std::vector<GaussianColor> signal;

  std::size_t size() const { return members.size(); }
};

LocalGraph build_local_graph(const PointCloud& cloud, const SpatialIndex& index, const Vec3& center, double radius,
                             const Eigen::Matrix3d& gaussian = default_gaussian_color_matrix());

/// Scale 0 is the identity. Scale s >= 1 keeps members 0, 2^s, 2*2^s, ...
/// and contracts positions toward the box centroid: p -> c + (p - c) / 2^s.
LocalGraph scale_transform(const LocalGraph& graph, int scale, const BoundingBox& bbox);

struct GradientFeatures {
  double mass = 0.0;      // m_g
  double mean = 0.0;      // mu_g
  double variance = 0.0;  // sigma_g^2
  std::vector<double> gradients;  // g_j per non-centre member, in member order

  std::size_t count() const { return gradients.size(); }
  bool empty() const { return gradients.empty(); }
};

/// g_j = sqrt(w_j) * diff_j, m_g = sum g_j, mu_g = m_g / N, sigma_g^2 the
/// population variance of the g_j.
GradientFeatures gradient_features(std::span<const double> weights, std::span<const double> differences);

/// Edge weights exp(-d^2 / sigma^2) against the centre member, sigma being
/// the mean member-to-centre distance. With `smoothing`, the signal first
/// goes through one normalized low-pass step over all member pairs.
/// Returns empty features when the graph has no member besides its centre.
GradientFeatures graph_gradient_features(const LocalGraph& graph, int channel, bool smoothing);

/// Builds the graph around `center` and returns its features; throws
/// EmptyNeighborhood when nothing but the centre falls inside `radius`.
GradientFeatures local_graph_features(const PointCloud& cloud, const Vec3& center, double radius, int channel,
                                      bool smoothing = true);

struct SimConstants {
  double t0 = 0.001;
  double t1 = 0.001;
  double t2 = 0.001;
};

/// (2 a b + t) / (a^2 + b^2 + t)
double similarity(double a, double b, double t);

struct ComponentSims {
  double mg = 1.0;
  double ug = 1.0;
  double cg = 1.0;
};

/// Covariance similarity pairs the first min(n_ref, n_dist) gradients of
/// the two graphs (both in distance order).
ComponentSims compare_gradients(const GradientFeatures& ref, const GradientFeatures& dist, const SimConstants& t);

struct GraphSimOptions {
  double keypoint_fraction = 0.1;
  std::size_t k_graph = 10;
  double radius = 0.0;         // <= 0: radius_factor x mean NN distance of ref
  double radius_factor = 2.0;
  bool smoothing = true;
  int num_scales = 3;
  std::array<double, 3> scale_weights{1.0, 1.0, 1.0};
  std::array<double, 3> channel_weights{6.0, 1.0, 1.0};
  SimConstants constants{};
  Eigen::Matrix3d gaussian = default_gaussian_color_matrix();
};

struct ScaleScore {
  double mg = 1.0;     // keypoint mean of channel-pooled |SIM_mg|
  double ug = 1.0;
  double cg = 1.0;
  double score = 1.0;  // keypoint mean of channel-pooled |SIM_mg SIM_ug SIM_cg|
  std::size_t keypoints_used = 0;
  std::size_t keypoints_skipped = 0;  // ref graph had no members besides the centre
  std::size_t dist_holes = 0;         // dist graph was empty, scored against zero features
};

struct GraphSimScore {
  std::vector<ScaleScore> scales;
  double overall = 1.0;   // weighted mean of scale scores
  double graphsim = 1.0;  // scale 0 score
  double radius = 0.0;
  std::size_t keypoints = 0;
};

/// sum w_i S_i / sum w_i over the first scores.size() weights.
double pool_scales(std::span<const double> scores, std::span<const double> weights);

double mean_nearest_neighbor_distance(const PointCloud& cloud, const SpatialIndex& index);

GraphSimScore msgraphsim_score(const PointCloud& ref, const SpatialIndex& ref_index, const PointCloud& dist,
                               const SpatialIndex& dist_index, const GraphSimOptions& options = {});
GraphSimScore msgraphsim_score(const PointCloud& ref, const PointCloud& dist, const GraphSimOptions& options = {});

}  // namespace pcqkit
