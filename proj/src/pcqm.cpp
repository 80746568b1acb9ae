#include "pcqkit/pcqm.hpp"

#include <algorithm>
#include <cmath>

#include "pcqkit/error.hpp"

namespace pcqkit {
namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

struct WeightedMoments {
  double mean_x = 0, mean_y = 0, var_x = 0, var_y = 0, cov = 0;
};

// Weighted mean/variance/covariance of paired samples. Variance and
// covariance share one expression so identical inputs give var == cov bitwise.
WeightedMoments moments(std::span<const double> w, std::span<const double> x, std::span<const double> y) {
  WeightedMoments m;
  double sw = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    sw += w[i];
    m.mean_x += w[i] * x[i];
    m.mean_y += w[i] * y[i];
  }
  m.mean_x /= sw;
  m.mean_y /= sw;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double dx = x[i] - m.mean_x;
    const double dy = y[i] - m.mean_y;
    m.var_x += w[i] * (dx * dx);
    m.var_y += w[i] * (dy * dy);
    m.cov += w[i] * (dx * dy);
  }
  m.var_x /= sw;
  m.var_y /= sw;
  m.cov /= sw;
  return m;
}

}  // namespace

double default_pcqm_radius(const PointCloud& ref, double fraction) {
  const double diag = bounding_box(ref).diagonal();
  return diag > 0.0 ? fraction * diag : 1.0;
}

Correspondence build_correspondence(const PointCloud& ref, const PointCloud& target, double radius,
                                    const CorrespondenceOptions& options) {
  if (target.empty()) throw Error(ErrorCode::EmptyCloud, "PCQM target cloud is empty");
  return build_correspondence(ref, target, build_index(target), radius, options);
}

Correspondence build_correspondence(const PointCloud& ref, const PointCloud& target, const SpatialIndex& target_index,
                                    double radius, const CorrespondenceOptions& options) {
  if (ref.empty() || target.empty()) throw Error(ErrorCode::EmptyCloud, "PCQM needs two non-empty clouds");
  if (!ref.has_colors() || !target.has_colors()) throw Error(ErrorCode::MissingAttribute, "PCQM needs colors");
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "PCQM radius must be positive");

  Correspondence c;
  c.radius = radius;
  c.fit = options.fit;
  c.color_mode = options.color_mode;
  const std::size_t n = ref.size();
  c.surfaces.resize(n);
  c.curvature.resize(n);
  c.colors.resize(n);
  c.nearest.resize(n);

  // Target colors converted once.
  std::vector<PerceptualColor> target_colors;
  target_colors.reserve(target.size());
  for (const auto& rgb : *target.colors)
    target_colors.push_back(rgb_to_perceptual(rgb, options.color_mode, options.table));

  auto fit_at = [&](const Vec3& center, std::vector<Vec3>& pts) {
    pts.clear();
    for (auto j : target_index.radius(center, radius).indices) pts.push_back(target.positions[j]);
    return fit_local_surface(pts, center);
  };

  std::vector<Vec3> pts;
  std::vector<LocalSurface> own;  // OwnNeighbors: one quadric per target point
  if (options.fit == QuadricFit::OwnNeighbors) {
    own.resize(target.size());
    for (std::size_t j = 0; j < target.size(); ++j) own[j] = fit_at(target.positions[j], pts);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& p = ref.positions[i];
    const std::size_t nn = target_index.nearest(p);
    c.nearest[i] = nn;
    c.colors[i] = target_colors[nn];
    c.surfaces[i] = options.fit == QuadricFit::TargetNeighbors ? fit_at(p, pts) : own[nn];
    if (c.surfaces[i].degenerate || c.surfaces[i].plane_only) ++c.degenerate_count;
    c.curvature[i] = c.surfaces[i].mean_curvature();
  }
  return c;
}

std::array<double, 8> pcqm_point_features(const PcqmLocalStats& s, const PcqmConstants& constants) {
  const auto& k = constants.k;
  std::array<double, 8> f{};
  const double sd_rho_ref = std::sqrt(s.var_rho_ref);
  const double sd_rho_dist = std::sqrt(s.var_rho_dist);
  // sqrt(a * b) rather than sqrt(a) * sqrt(b): exact when a == b.
  const double sd_rho_prod = std::sqrt(s.var_rho_ref * s.var_rho_dist);
  const double sd_l_prod = std::sqrt(s.var_l_ref * s.var_l_dist);

  f[0] = std::abs(s.mu_rho_ref - s.mu_rho_dist) / (std::max(s.mu_rho_ref, s.mu_rho_dist) + k[0]);
  f[1] = std::abs(sd_rho_ref - sd_rho_dist) / (std::max(sd_rho_ref, sd_rho_dist) + k[1]);
  f[2] = std::abs(sd_rho_prod - s.cov_rho) / (sd_rho_prod + k[2]);
  const double dl = s.mu_l_ref - s.mu_l_dist;
  f[3] = 1.0 / (k[3] * dl * dl + 1.0);
  f[4] = (2.0 * sd_l_prod + k[4]) / (s.var_l_ref + s.var_l_dist + k[4]);
  f[5] = (s.cov_l + k[5]) / (sd_l_prod + k[5]);
  const double dc = s.mu_c_ref - s.mu_c_dist;
  f[6] = 1.0 / (k[6] * dc * dc + 1.0);
  f[7] = 1.0 / (k[7] * s.mean_delta_hue * s.mean_delta_hue + 1.0);
  for (auto& v : f) v = clamp01(v);
  return f;
}

PcqmFeatures compute_pcqm_features(const PointCloud& ref, const SpatialIndex& ref_index, const Correspondence& corr_ref,
                                   const Correspondence& corr_dist, const PcqmConstants& constants,
                                   bool keep_per_point) {
  const std::size_t n = ref.size();
  if (corr_ref.radius != corr_dist.radius || corr_ref.fit != corr_dist.fit ||
      corr_ref.color_mode != corr_dist.color_mode)
    throw Error(ErrorCode::SettingsMismatch, "PCQM correspondences were built with different settings");
  if (corr_ref.curvature.size() != n || corr_dist.curvature.size() != n || ref_index.size() != n)
    throw Error(ErrorCode::SettingsMismatch, "PCQM correspondences do not match the reference cloud");

  const double h = corr_ref.radius;
  const double sigma = h / 3.0;
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);

  PcqmFeatures out;
  out.constants = constants;
  out.color_mode = corr_ref.color_mode;
  if (keep_per_point) out.per_point.resize(n);

  std::vector<double> w, xr, yr, xl, yl, xc, yc, dh;
  std::array<double, 8> sums{};
  for (std::size_t i = 0; i < n; ++i) {
    const Neighborhood nb = ref_index.radius(ref.positions[i], h);
    const std::size_t m = nb.size();
    w.resize(m);
    xr.resize(m), yr.resize(m), xl.resize(m), yl.resize(m), xc.resize(m), yc.resize(m), dh.resize(m);
    for (std::size_t t = 0; t < m; ++t) {
      const std::size_t q = nb.indices[t];
      const double d = nb.distances[t];
      w[t] = std::exp(-d * d * inv_two_sigma2);
      xr[t] = corr_ref.curvature[q];
      yr[t] = corr_dist.curvature[q];
      const PerceptualColor& a = corr_ref.colors[q];
      const PerceptualColor& b = corr_dist.colors[q];
      xl[t] = a.L;
      yl[t] = b.L;
      xc[t] = a.C;
      yc[t] = b.C;
      const double da = a.a - b.a;
      const double db = a.b - b.b;
      const double dcc = a.C - b.C;
      dh[t] = std::sqrt(da * da + db * db + dcc * dcc);
    }
    const WeightedMoments rho = moments(w, xr, yr);
    const WeightedMoments lum = moments(w, xl, yl);
    const WeightedMoments chroma = moments(w, xc, yc);
    const WeightedMoments hue = moments(w, dh, dh);

    PcqmLocalStats s;
    s.mu_rho_ref = rho.mean_x;
    s.mu_rho_dist = rho.mean_y;
    s.var_rho_ref = rho.var_x;
    s.var_rho_dist = rho.var_y;
    s.cov_rho = rho.cov;
    s.mu_l_ref = lum.mean_x;
    s.mu_l_dist = lum.mean_y;
    s.var_l_ref = lum.var_x;
    s.var_l_dist = lum.var_y;
    s.cov_l = lum.cov;
    s.mu_c_ref = chroma.mean_x;
    s.mu_c_dist = chroma.mean_y;
    s.mean_delta_hue = hue.mean_x;

    const auto f = pcqm_point_features(s, constants);
    for (int k = 0; k < 8; ++k) sums[k] += f[k];
    if (keep_per_point) out.per_point[i] = f;
  }
  for (int k = 0; k < 8; ++k) out.f[k] = sums[k] / static_cast<double>(n);
  return out;
}

double pcqm_aggregate(const PcqmFeatures& features, const std::map<std::string, double>& weights) {
  double total = 0.0;
  for (const auto& [name, weight] : weights) {
    int idx = -1;
    if (name.size() == 2 && name[0] == 'f' && name[1] >= '1' && name[1] <= '8') idx = name[1] - '1';
    if (idx < 0) throw Error(ErrorCode::UnknownFeatureName, "unknown PCQM feature '" + name + "'");
    const double v = features.f[idx];
    total += weight * (idx < 3 ? v : 1.0 - v);
  }
  return total;
}

double pcqm_aggregate(const PcqmFeatures& features) {
  return pcqm_aggregate(features, {{"f3", 0.18}, {"f4", 0.44}, {"f6", 0.38}});
}

}  // namespace pcqkit
