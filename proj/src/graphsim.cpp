#include "pcqkit/graphsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pcqkit/error.hpp"

namespace pcqkit {

KeypointSet extract_keypoints(const PointCloud& ref, double fraction, std::size_t k_graph) {
  if (ref.empty()) throw Error(ErrorCode::EmptyCloud, "keypoints of an empty cloud");
  return extract_keypoints(ref, build_index(ref), fraction, k_graph);
}

KeypointSet extract_keypoints(const PointCloud& ref, const SpatialIndex& ref_index, double fraction,
                              std::size_t k_graph) {
  const std::size_t n = ref.size();
  if (n == 0) throw Error(ErrorCode::EmptyCloud, "keypoints of an empty cloud");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorCode::InvalidArgument, "keypoint fraction must be in (0, 1]");
  const std::size_t k = std::min(k_graph, n - 1);

  std::vector<double> response(n, 0.0);
  if (k > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      const Neighborhood nb = ref_index.knn(ref.positions[i], k + 1);
      Vec3 mean = Vec3::Zero();
      std::size_t used = 0;
      for (auto j : nb.indices) {
        if (j == i || used == k) continue;
        mean += ref.positions[j];
        ++used;
      }
      mean /= static_cast<double>(used);
      response[i] = (ref.positions[i] - mean).norm();
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto count = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
  std::partial_sort(order.begin(), order.begin() + count, order.end(), [&](std::size_t a, std::size_t b) {
    return response[a] > response[b] || (response[a] == response[b] && a < b);
  });
  KeypointSet ks;
  ks.fraction = fraction;
  ks.indices.assign(order.begin(), order.begin() + count);
  for (auto i : ks.indices) ks.responses.push_back(response[i]);
  return ks;
}

LocalGraph build_local_graph(const PointCloud& cloud, const SpatialIndex& index, const Vec3& center, double radius,
                             const Eigen::Matrix3d& gaussian) {
  if (!cloud.has_colors()) throw Error(ErrorCode::MissingAttribute, "graph signal needs colors");
  LocalGraph g;
  g.query = center;
  const Neighborhood nb = index.radius(center, radius);
  g.members = nb.indices;
  g.positions.reserve(nb.size());
  g.signal.reserve(nb.size());
  for (auto j : nb.indices) {
    g.positions.push_back(cloud.positions[j]);
    g.signal.push_back(rgb_to_gaussian((*cloud.colors)[j], gaussian));
  }
  return g;
}

LocalGraph scale_transform(const LocalGraph& graph, int scale, const BoundingBox& bbox) {
  if (scale < 0 || scale > 2) throw Error(ErrorCode::InvalidArgument, "scale must be 0, 1 or 2");
  if (scale == 0) return graph;
  const std::size_t step = std::size_t{1} << scale;
  const double shrink = 1.0 / static_cast<double>(step);
  const Vec3 c = bbox.centroid();
  LocalGraph out;
  out.query = c + (graph.query - c) * shrink;
  for (std::size_t i = 0; i < graph.size(); i += step) {
    out.members.push_back(graph.members[i]);
    out.positions.push_back(c + (graph.positions[i] - c) * shrink);
    out.signal.push_back(graph.signal[i]);
  }
  return out;
}

GradientFeatures gradient_features(std::span<const double> weights, std::span<const double> differences) {
  GradientFeatures f;
  const std::size_t n = std::min(weights.size(), differences.size());
  f.gradients.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    f.gradients[j] = std::sqrt(weights[j]) * differences[j];
    f.mass += f.gradients[j];
  }
  if (n == 0) return f;
  f.mean = f.mass / static_cast<double>(n);
  for (double g : f.gradients) f.variance += (g - f.mean) * (g - f.mean);
  f.variance /= static_cast<double>(n);
  return f;
}

GradientFeatures graph_gradient_features(const LocalGraph& graph, int channel, bool smoothing) {
  const std::size_t m = graph.size();
  if (m <= 1) return {};
  const Vec3& c = graph.positions[0];

  double sigma = 0.0;
  for (std::size_t j = 1; j < m; ++j) sigma += (graph.positions[j] - c).norm();
  sigma /= static_cast<double>(m - 1);
  const double inv_sigma2 = sigma > 0.0 ? 1.0 / (sigma * sigma) : 0.0;
  auto weight = [&](const Vec3& a, const Vec3& b) { return std::exp(-squared_distance(a, b) * inv_sigma2); };

  std::vector<double> signal(m);
  for (std::size_t j = 0; j < m; ++j) signal[j] = graph.signal[j][channel];
  if (smoothing) {
    std::vector<double> smoothed(m);
    for (std::size_t j = 0; j < m; ++j) {
      double num = 0.0;
      double den = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double w = i == j ? 1.0 : weight(graph.positions[j], graph.positions[i]);
        num += w * (signal[i] - signal[0]);
        den += w;
      }
      smoothed[j] = signal[0] + num / den;
    }
    signal = std::move(smoothed);
  }

  std::vector<double> w(m - 1), diff(m - 1);
  for (std::size_t j = 1; j < m; ++j) {
    w[j - 1] = weight(graph.positions[j], c);
    diff[j - 1] = signal[j] - signal[0];
  }
  return gradient_features(w, diff);
}

GradientFeatures local_graph_features(const PointCloud& cloud, const Vec3& center, double radius, int channel,
                                      bool smoothing) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "graph features on an empty cloud");
  if (channel < 0 || channel > 2) throw Error(ErrorCode::InvalidArgument, "channel must be 0, 1 or 2");
  const LocalGraph g = build_local_graph(cloud, build_index(cloud), center, radius);
  if (g.size() <= 1) throw Error(ErrorCode::EmptyNeighborhood, "no graph members besides the centre");
  return graph_gradient_features(g, channel, smoothing);
}

double similarity(double a, double b, double t) { return (2.0 * (a * b) + t) / (a * a + b * b + t); }

ComponentSims compare_gradients(const GradientFeatures& ref, const GradientFeatures& dist, const SimConstants& t) {
  ComponentSims s;
  s.mg = similarity(ref.mass, dist.mass, t.t0);
  s.ug = similarity(ref.mean, dist.mean, t.t1);

  const std::size_t p = std::min(ref.count(), dist.count());
  double cov = 0.0, var_r = 0.0, var_d = 0.0;
  if (p > 0) {
    double mr = 0.0, md = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      mr += ref.gradients[j];
      md += dist.gradients[j];
    }
    mr /= static_cast<double>(p);
    md /= static_cast<double>(p);
    for (std::size_t j = 0; j < p; ++j) {
      const double dr = ref.gradients[j] - mr;
      const double dd = dist.gradients[j] - md;
      var_r += dr * dr;
      var_d += dd * dd;
      cov += dr * dd;
    }
    cov /= static_cast<double>(p);
    var_r /= static_cast<double>(p);
    var_d /= static_cast<double>(p);
  }
  s.cg = (cov + t.t2) / (std::sqrt(var_r * var_d) + t.t2);
  return s;
}

double pool_scales(std::span<const double> scores, std::span<const double> weights) {
  if (scores.empty() || weights.size() < scores.size())
    throw Error(ErrorCode::InvalidArgument, "scale pooling needs one weight per scale");
  double weighted = 0.0, total = 0.0;
  for (std::size_t s = 0; s < scores.size(); ++s) {
    weighted += weights[s] * scores[s];
    total += weights[s];
  }
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "scale weights must sum to a positive value");
  return weighted / total;
}

double mean_nearest_neighbor_distance(const PointCloud& cloud, const SpatialIndex& index) {
  if (cloud.size() < 2) return 0.0;
  double sum = 0.0;
  for (const auto& p : cloud.positions) sum += index.knn(p, 2).distances.back();
  return sum / static_cast<double>(cloud.size());
}

GraphSimScore msgraphsim_score(const PointCloud& ref, const PointCloud& dist, const GraphSimOptions& options) {
  if (ref.empty() || dist.empty()) throw Error(ErrorCode::EmptyCloud, "GraphSIM needs two non-empty clouds");
  return msgraphsim_score(ref, build_index(ref), dist, build_index(dist), options);
}

GraphSimScore msgraphsim_score(const PointCloud& ref, const SpatialIndex& ref_index, const PointCloud& dist,
                               const SpatialIndex& dist_index, const GraphSimOptions& options) {
  if (ref.empty() || dist.empty()) throw Error(ErrorCode::EmptyCloud, "GraphSIM needs two non-empty clouds");
  if (!ref.has_colors() || !dist.has_colors()) throw Error(ErrorCode::MissingAttribute, "GraphSIM needs colors");
  if (options.num_scales < 1 || options.num_scales > 3)
    throw Error(ErrorCode::InvalidArgument, "GraphSIM supports 1 to 3 scales");

  GraphSimScore out;
  out.radius = options.radius > 0.0 ? options.radius
                                    : options.radius_factor * mean_nearest_neighbor_distance(ref, ref_index);
  if (!(out.radius > 0.0)) out.radius = 1.0;

  const KeypointSet keypoints = extract_keypoints(ref, ref_index, options.keypoint_fraction, options.k_graph);
  out.keypoints = keypoints.indices.size();
  const BoundingBox bbox = bounding_box(ref);
  const double channel_total =
      std::accumulate(options.channel_weights.begin(), options.channel_weights.end(), 0.0);

  out.scales.assign(static_cast<std::size_t>(options.num_scales), ScaleScore{});
  std::vector<std::array<double, 4>> sums(out.scales.size(), {0.0, 0.0, 0.0, 0.0});

  // Fixed keypoint order keeps the summation order, and hence the result, reproducible.
  for (auto kp : keypoints.indices) {
    const Vec3& center = ref.positions[kp];
    const LocalGraph ref_graph = build_local_graph(ref, ref_index, center, out.radius, options.gaussian);
    const LocalGraph dist_graph = build_local_graph(dist, dist_index, center, out.radius, options.gaussian);
    for (int s = 0; s < options.num_scales; ++s) {
      ScaleScore& sc = out.scales[s];
      const LocalGraph rg = scale_transform(ref_graph, s, bbox);
      if (rg.size() <= 1) {
        ++sc.keypoints_skipped;
        continue;
      }
      const LocalGraph dg = scale_transform(dist_graph, s, bbox);
      if (dg.size() <= 1) ++sc.dist_holes;

      double pooled_s = 0.0, pooled_mg = 0.0, pooled_ug = 0.0, pooled_cg = 0.0;
      for (int ch = 0; ch < 3; ++ch) {
        const GradientFeatures fr = graph_gradient_features(rg, ch, options.smoothing);
        const GradientFeatures fd = graph_gradient_features(dg, ch, options.smoothing);
        const ComponentSims sim = compare_gradients(fr, fd, options.constants);
        const double gamma = options.channel_weights[ch];
        pooled_s += gamma * std::abs(sim.mg * sim.ug * sim.cg);
        pooled_mg += gamma * std::abs(sim.mg);
        pooled_ug += gamma * std::abs(sim.ug);
        pooled_cg += gamma * std::abs(sim.cg);
      }
      sums[s][0] += pooled_mg / channel_total;
      sums[s][1] += pooled_ug / channel_total;
      sums[s][2] += pooled_cg / channel_total;
      sums[s][3] += pooled_s / channel_total;
      ++sc.keypoints_used;
    }
  }

  std::vector<double> scale_scores;
  for (int s = 0; s < options.num_scales; ++s) {
    ScaleScore& sc = out.scales[s];
    if (sc.keypoints_used == 0)
      throw Error(ErrorCode::AllKeypointsEmpty,
                  "every keypoint graph is empty at scale " + std::to_string(s) + " (radius " +
                      std::to_string(out.radius) + "); increase the graph radius");
    const double n = static_cast<double>(sc.keypoints_used);
    sc.mg = sums[s][0] / n;
    sc.ug = sums[s][1] / n;
    sc.cg = sums[s][2] / n;
    sc.score = sums[s][3] / n;
    scale_scores.push_back(sc.score);
  }
  out.overall = pool_scales(scale_scores, options.scale_weights);
  out.graphsim = out.scales[0].score;
  return out;
}

}  // namespace pcqkit
