#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pcqkit/config.hpp"
#include "pcqkit/graphsim.hpp"
#include "pcqkit/pcqm.hpp"
#include "pcqkit/point_cloud.hpp"
#include "pcqkit/pointssim.hpp"
#include "pcqkit/psnr.hpp"

namespace pcqkit {

struct ManifestRow {
  std::string group_id;
  std::string ref;  // as written in the manifest; used as row identity
  std::string dist;
  std::filesystem::path ref_path;  // resolved against the manifest directory
  std::filesystem::path dist_path;
  double mos = 0.0;
  std::optional<double> mos_std;
  std::string codec;
  std::string rate;
};

struct DatasetManifest {
  std::vector<ManifestRow> rows;
  std::size_t group_count() const;
};

/// Columns: ref (or ref_path), dist (or dist_path), mos required; group_id,
/// mos_std, codec, rate optional. Without group_id the ref path is the group.
DatasetManifest load_manifest(const std::filesystem::path& path, bool strict = false);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

inline constexpr int kFeatureSchemaVersion = 1;
inline constexpr std::size_t kFeatureCount = 23;
extern const std::array<std::string_view, kFeatureCount> kFeatureNames;

/// Single-metric benchmark columns written after the fusion features.
inline constexpr std::size_t kBenchmarkCount = 5;
extern const std::array<std::string_view, kBenchmarkCount> kBenchmarkNames;
inline constexpr std::size_t kColumnCount = kFeatureCount + kBenchmarkCount;
std::size_t feature_index(std::string_view name);  // throws UnknownFeatureName

/// Metric settings resolved from a Config.
struct MetricConfig {
  std::optional<int> bit_depth;
  double normal_radius = 20.0;
  double cap_db = 100.0;
  YuvOptions yuv{};
  DispersionEstimator pointssim_estimator = DispersionEstimator::Variance;
  std::size_t pointssim_k = 12;
  double pointssim_exponent = 1.0;
  double pcqm_radius = 0.0;
  double pcqm_radius_fraction = 0.02;
  PcqmConstants pcqm_constants{};
  PerceptualMode color_mode = PerceptualMode::CIELAB;
  std::string lab2000hl_table;
  QuadricFit quadric_fit = QuadricFit::TargetNeighbors;
  GraphSimOptions graphsim{};

  static MetricConfig from_config(const Config& config);
};

struct MetricSelection {
  bool d1 = true, d2 = true, yuv = true, pointssim = true, pcqm = true, graphsim = true;

  static MetricSelection all() { return {}; }
  /// Comma-separated subset of d1,d2,yuv,pointssim,pcqm,graphsim or "all".
  static MetricSelection parse(const std::string& list);
};

struct PairMetrics {
  std::optional<PsnrResult> d1;
  std::optional<PsnrResult> d2;
  std::optional<YuvResult> yuv;
  std::optional<PointSsimScore> pointssim_geo;
  std::optional<PointSsimScore> pointssim_lum;
  std::optional<PcqmFeatures> pcqm;
  double pcqm_radius = 0.0;
  std::optional<double> pcqm_aggregate;
  std::optional<GraphSimScore> graphsim;
};

PairMetrics compute_pair(const PointCloud& ref, const PointCloud& dist, const MetricConfig& config,
                         const MetricSelection& selection = MetricSelection::all());

/// The 23-value vector; PSNR entries are capped at config.cap_db. Requires
/// every metric to have been computed.
std::array<double, kFeatureCount> feature_vector(const PairMetrics& metrics, const MetricConfig& config);
/// Fusion features followed by psnr_d1, psnr_yuv, pcqm_rec, msgsim_overall
/// and graphsim (PSNR values capped).
std::array<double, kColumnCount> column_vector(const PairMetrics& metrics, const MetricConfig& config);
std::vector<std::string> column_names();

/// A table of per-pair numeric columns keyed by (ref, dist). Used for
/// feature CSVs and score CSVs alike.
struct FeatureTable {
  struct Row {
    std::string group_id;
    std::string ref;
    std::string dist;
    double mos = 0.0;
    std::vector<double> values;  // parallel to `columns`
  };

  std::map<std::string, std::string> meta;  // from the schema line
  std::vector<std::string> columns;
  std::vector<Row> rows;

  std::size_t size() const { return rows.size(); }
  std::size_t column(std::string_view name) const;  // throws MissingFeatureColumn
  Eigen::MatrixXd matrix(const std::vector<std::string>& names) const;
  Eigen::VectorXd mos() const;
  std::vector<std::string> groups() const;
  std::string config_hash() const;  // "" when absent
};

FeatureTable read_feature_csv(const std::filesystem::path& path);
std::string format_feature_csv(const FeatureTable& table);
void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path);

struct ExtractionStats {
  std::size_t computed = 0;    // pairs for which metrics ran
  std::size_t cache_hits = 0;  // pairs served from the cache
};

/// Runs every metric for each manifest row on `jobs` workers (0 = hardware
/// concurrency). Rows come back in manifest order. With a cache directory,
/// results are keyed by the SHA-256 of both files plus the extraction hash.
FeatureTable extract_features(const DatasetManifest& manifest, const Config& config,
                              const std::optional<std::filesystem::path>& cache_dir = std::nullopt,
                              std::size_t jobs = 0, ExtractionStats* stats = nullptr);

}  // namespace pcqkit
