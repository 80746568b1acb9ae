#include "pcqkit/features.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pcqkit/error.hpp"
#include "pcqkit/ply.hpp"
#include "pcqkit/spatial_index.hpp"
#include "pcqkit/util.hpp"

namespace pcqkit {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::optional<std::size_t> find_column(const std::vector<std::string>& header,
                                       std::initializer_list<std::string_view> names) {
  for (auto name : names)
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------- manifest

std::size_t DatasetManifest::group_count() const {
  std::set<std::string> groups;
  for (const auto& r : rows) groups.insert(r.group_id);
  return groups.size();
}

DatasetManifest load_manifest(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open manifest " + path.string());
  const auto base = path.parent_path();

  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  for (auto& h : header) h = lower(trim(h));

  const auto c_ref = find_column(header, {"ref", "ref_path"});
  const auto c_dist = find_column(header, {"dist", "dist_path"});
  const auto c_mos = find_column(header, {"mos"});
  for (auto [col, name] : {std::pair{c_ref, "ref"}, std::pair{c_dist, "dist"}, std::pair{c_mos, "mos"}})
    if (!col) throw Error(ErrorCode::MissingColumn, path.string() + ": manifest has no '" + name + "' column");
  const auto c_group = find_column(header, {"group_id", "group"});
  const auto c_std = find_column(header, {"mos_std"});
  const auto c_codec = find_column(header, {"codec"});
  const auto c_rate = find_column(header, {"rate"});

  DatasetManifest manifest;
  std::map<std::string, std::string> group_of_ref;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    ++row_number;
    const auto f = split_csv_line(line);
    auto field = [&](std::optional<std::size_t> c) -> std::string {
      return c && *c < f.size() ? trim(f[*c]) : std::string();
    };
    const std::string where = path.string() + " row " + std::to_string(row_number);

    ManifestRow row;
    row.ref = field(c_ref);
    row.dist = field(c_dist);
    if (row.ref.empty() || row.dist.empty()) throw Error(ErrorCode::MissingColumn, where + ": empty ref or dist path");
    row.ref_path = std::filesystem::path(row.ref).is_absolute() ? std::filesystem::path(row.ref) : base / row.ref;
    row.dist_path = std::filesystem::path(row.dist).is_absolute() ? std::filesystem::path(row.dist) : base / row.dist;
    try {
      row.mos = parse_double(field(c_mos));
    } catch (const std::invalid_argument&) {
      throw Error(ErrorCode::BadMosValue, where + ": mos '" + field(c_mos) + "' is not a number");
    }
    if (!std::isfinite(row.mos)) throw Error(ErrorCode::BadMosValue, where + ": mos must be finite");
    if (c_std && !field(c_std).empty()) {
      try {
        row.mos_std = parse_double(field(c_std));
      } catch (const std::invalid_argument&) {
        throw Error(ErrorCode::BadMosValue, where + ": mos_std '" + field(c_std) + "' is not a number");
      }
    }
    row.group_id = c_group ? field(c_group) : row.ref;
    if (row.group_id.empty()) row.group_id = row.ref;
    row.codec = field(c_codec);
    row.rate = field(c_rate);

    auto [it, inserted] = group_of_ref.emplace(row.ref, row.group_id);
    if (!inserted && it->second != row.group_id)
      throw Error(ErrorCode::InvalidArgument, where + ": ref '" + row.ref + "' appears under groups '" + it->second +
                                                  "' and '" + row.group_id + "'");
    if (strict) {
      for (const auto& p : {row.ref_path, row.dist_path})
        if (!std::filesystem::exists(p)) throw Error(ErrorCode::IoFailure, where + ": file not found: " + p.string());
    }
    manifest.rows.push_back(std::move(row));
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::string out = "group_id,ref,dist,mos,mos_std,codec,rate\n";
  for (const auto& r : manifest.rows) {
    out += join_csv_line({r.group_id, r.ref, r.dist, format_double(r.mos),
                          r.mos_std ? format_double(*r.mos_std) : std::string(), r.codec, r.rate});
    out += '\n';
  }
  write_file_atomic(path, out);
}

// ---------------------------------------------------------------- feature names

const std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "psnr_d2",      "psnr_y",       "psnr_u",       "psnr_v",       "pointssim_lum", "pointssim_geo",
    "pcqm_f1",      "pcqm_f2",      "pcqm_f3",      "pcqm_f4",      "pcqm_f5",       "pcqm_f6",
    "pcqm_f7",      "pcqm_f8",      "msgsim_mg_s0", "msgsim_ug_s0", "msgsim_cg_s0",  "msgsim_mg_s1",
    "msgsim_ug_s1", "msgsim_cg_s1", "msgsim_mg_s2", "msgsim_ug_s2", "msgsim_cg_s2"};

const std::array<std::string_view, kBenchmarkCount> kBenchmarkNames = {"psnr_d1", "psnr_yuv", "pcqm_rec",
                                                                       "msgsim_overall", "graphsim"};

std::vector<std::string> column_names() {
  std::vector<std::string> names(kFeatureNames.begin(), kFeatureNames.end());
  names.insert(names.end(), kBenchmarkNames.begin(), kBenchmarkNames.end());
  return names;
}

std::size_t feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureNames.size(); ++i)
    if (kFeatureNames[i] == name) return i;
  throw Error(ErrorCode::UnknownFeatureName, "unknown feature '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- metric config

MetricConfig MetricConfig::from_config(const Config& c) {
  MetricConfig m;
  const auto bd = c.get_int("io.bitdepth");
  if (bd < 0 || bd > 32) throw Error(ErrorCode::BadConfig, "io.bitdepth must be in [0, 32]");
  if (bd > 0) m.bit_depth = static_cast<int>(bd);
  m.normal_radius = c.get_double("normals.radius");
  m.cap_db = c.get_double("psnr.cap_db");
  m.yuv.coefficients = YCbCrCoefficients::by_name(c.get("psnr.ycbcr"));
  const auto& sym = c.get("psnr.yuv_symmetry");
  if (sym == "max_mse")
    m.yuv.symmetry = YuvSymmetry::MaxMse;
  else if (sym == "max_psnr")
    m.yuv.symmetry = YuvSymmetry::MaxPsnr;
  else
    throw Error(ErrorCode::BadConfig, "psnr.yuv_symmetry must be max_mse or max_psnr");
  m.yuv.cap_db = m.cap_db;
  m.pointssim_estimator = dispersion_estimator_from_string(c.get("pointssim.estimator"));
  const auto k = c.get_int("pointssim.k_neighbors");
  if (k < 1) throw Error(ErrorCode::BadConfig, "pointssim.k_neighbors must be positive");
  m.pointssim_k = static_cast<std::size_t>(k);
  m.pointssim_exponent = c.get_double("pointssim.pooling_exponent");
  m.pcqm_radius = c.get_double("pcqm.radius");
  m.pcqm_radius_fraction = c.get_double("pcqm.radius_fraction");
  for (int i = 0; i < 8; ++i) m.pcqm_constants.k[i] = c.get_double("pcqm.k" + std::to_string(i + 1));
  m.color_mode = perceptual_mode_from_string(c.get("pcqm.color_mode"));
  m.lab2000hl_table = c.get("pcqm.lab2000hl_table");
  const auto& fit = c.get("pcqm.quadric_fit");
  if (fit == "target")
    m.quadric_fit = QuadricFit::TargetNeighbors;
  else if (fit == "own")
    m.quadric_fit = QuadricFit::OwnNeighbors;
  else
    throw Error(ErrorCode::BadConfig, "pcqm.quadric_fit must be target or own");
  auto& g = m.graphsim;
  g.keypoint_fraction = c.get_double("graphsim.keypoint_fraction");
  const auto kg = c.get_int("graphsim.k_graph");
  if (kg < 1) throw Error(ErrorCode::BadConfig, "graphsim.k_graph must be positive");
  g.k_graph = static_cast<std::size_t>(kg);
  g.radius = c.get_double("graphsim.radius");
  g.radius_factor = c.get_double("graphsim.radius_factor");
  g.smoothing = c.get_bool("graphsim.smoothing");
  const auto w = c.get_doubles("graphsim.scale_weights");
  if (w.size() != 3) throw Error(ErrorCode::BadConfig, "graphsim.scale_weights needs three values");
  std::copy(w.begin(), w.end(), g.scale_weights.begin());
  g.constants = {c.get_double("graphsim.t0"), c.get_double("graphsim.t1"), c.get_double("graphsim.t2")};
  return m;
}

MetricSelection MetricSelection::parse(const std::string& list) {
  if (list.empty() || list == "all") return all();
  MetricSelection s{false, false, false, false, false, false};
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = lower(trim(item));
    if (item == "all")
      s = all();
    else if (item == "d1")
      s.d1 = true;
    else if (item == "d2")
      s.d2 = true;
    else if (item == "yuv")
      s.yuv = true;
    else if (item == "pointssim")
      s.pointssim = true;
    else if (item == "pcqm")
      s.pcqm = true;
    else if (item == "graphsim" || item == "msgraphsim")
      s.graphsim = true;
    else
      throw Error(ErrorCode::InvalidArgument,
                  "unknown metric '" + item + "' (expected d1, d2, yuv, pointssim, pcqm, graphsim or all)");
  }
  return s;
}

// ---------------------------------------------------------------- metrics

PairMetrics compute_pair(const PointCloud& ref, const PointCloud& dist, const MetricConfig& config,
                         const MetricSelection& selection) {
  validate(ref);
  validate(dist);
  const SpatialIndex ref_index = build_index(ref);
  const SpatialIndex dist_index = build_index(dist);
  const double peak = ref.peak();

  PairMetrics m;
  if (selection.d1) m.d1 = compute_d1(ref, ref_index, dist, dist_index, peak);
  if (selection.d2) m.d2 = compute_d2(ref, ref_index, dist, dist_index, peak, config.normal_radius);
  if (selection.yuv) m.yuv = compute_yuv(ref, ref_index, dist, dist_index, config.yuv);
  if (selection.pointssim) {
    const auto geo_r = extract_dispersion(ref, ref_index, DispersionAttribute::Geometry, config.pointssim_estimator,
                                          config.pointssim_k, config.yuv.coefficients);
    const auto geo_d = extract_dispersion(dist, dist_index, DispersionAttribute::Geometry,
                                          config.pointssim_estimator, config.pointssim_k, config.yuv.coefficients);
    m.pointssim_geo = pointssim_score(geo_r, geo_d, ref_index, dist, config.pointssim_exponent);
    const auto lum_r = extract_dispersion(ref, ref_index, DispersionAttribute::Luminance, config.pointssim_estimator,
                                          config.pointssim_k, config.yuv.coefficients);
    const auto lum_d = extract_dispersion(dist, dist_index, DispersionAttribute::Luminance,
                                          config.pointssim_estimator, config.pointssim_k, config.yuv.coefficients);
    m.pointssim_lum = pointssim_score(lum_r, lum_d, ref_index, dist, config.pointssim_exponent);
  }
  if (selection.pcqm) {
    std::optional<Lab2000hlTable> table;
    if (config.color_mode == PerceptualMode::LAB2000HL) {
      if (config.lab2000hl_table.empty())
        throw Error(ErrorCode::TableMissing, "pcqm.color_mode = lab2000hl requires pcqm.lab2000hl_table");
      table = Lab2000hlTable::load(config.lab2000hl_table);
    }
    CorrespondenceOptions opts;
    opts.fit = config.quadric_fit;
    opts.color_mode = config.color_mode;
    opts.table = table ? &*table : nullptr;
    const double h = config.pcqm_radius > 0 ? config.pcqm_radius : default_pcqm_radius(ref, config.pcqm_radius_fraction);
    const auto corr_ref = build_correspondence(ref, ref, ref_index, h, opts);
    const auto corr_dist = build_correspondence(ref, dist, dist_index, h, opts);
    m.pcqm = compute_pcqm_features(ref, ref_index, corr_ref, corr_dist, config.pcqm_constants);
    m.pcqm_radius = h;
    m.pcqm_aggregate = pcqm_aggregate(*m.pcqm);
  }
  if (selection.graphsim) m.graphsim = msgraphsim_score(ref, ref_index, dist, dist_index, config.graphsim);
  return m;
}

std::array<double, kFeatureCount> feature_vector(const PairMetrics& m, const MetricConfig& config) {
  if (!m.d2 || !m.yuv || !m.pointssim_geo || !m.pointssim_lum || !m.pcqm || !m.graphsim)
    throw Error(ErrorCode::InvalidArgument, "feature vector needs d2, yuv, pointssim, pcqm and graphsim");
  if (m.graphsim->scales.size() < 3) throw Error(ErrorCode::InvalidArgument, "feature vector needs three graph scales");
  std::array<double, kFeatureCount> v{};
  v[0] = capped(m.d2->psnr_db, config.cap_db);
  v[1] = capped(m.yuv->psnr_y.psnr_db, config.cap_db);
  v[2] = capped(m.yuv->psnr_u.psnr_db, config.cap_db);
  v[3] = capped(m.yuv->psnr_v.psnr_db, config.cap_db);
  v[4] = m.pointssim_lum->score;
  v[5] = m.pointssim_geo->score;
  for (int i = 0; i < 8; ++i) v[6 + i] = m.pcqm->f[i];
  for (int s = 0; s < 3; ++s) {
    const auto& sc = m.graphsim->scales[s];
    v[14 + 3 * s] = sc.mg;
    v[15 + 3 * s] = sc.ug;
    v[16 + 3 * s] = sc.cg;
  }
  return v;
}

std::array<double, kColumnCount> column_vector(const PairMetrics& m, const MetricConfig& config) {
  if (!m.d1 || !m.pcqm_aggregate) throw Error(ErrorCode::InvalidArgument, "column vector needs d1 and pcqm");
  const auto f = feature_vector(m, config);
  std::array<double, kColumnCount> v{};
  std::copy(f.begin(), f.end(), v.begin());
  v[kFeatureCount + 0] = capped(m.d1->psnr_db, config.cap_db);
  v[kFeatureCount + 1] = m.yuv->psnr_combined;
  v[kFeatureCount + 2] = *m.pcqm_aggregate;
  v[kFeatureCount + 3] = m.graphsim->overall;
  v[kFeatureCount + 4] = m.graphsim->graphsim;
  return v;
}

// ---------------------------------------------------------------- tables

std::size_t FeatureTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw Error(ErrorCode::MissingFeatureColumn, "table has no column '" + std::string(name) + "'");
}

Eigen::MatrixXd FeatureTable::matrix(const std::vector<std::string>& names) const {
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(column(n));
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t j = 0; j < idx.size(); ++j) x(r, j) = rows[r].values[idx[j]];
  return x;
}

Eigen::VectorXd FeatureTable::mos() const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) y(r) = rows[r].mos;
  return y;
}

std::vector<std::string> FeatureTable::groups() const {
  std::vector<std::string> g;
  for (const auto& r : rows) g.push_back(r.group_id);
  return g;
}

std::string FeatureTable::config_hash() const {
  auto it = meta.find("config_hash");
  return it == meta.end() ? std::string() : it->second;
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  FeatureTable t;
  std::string line;
  if (!std::getline(in, line) || line.rfind("#schema_version=", 0) != 0)
    throw Error(ErrorCode::SchemaVersion, path.string() + ": missing '#schema_version=' line");
  std::stringstream ss(trim(line.substr(1)));
  std::string kv;
  while (std::getline(ss, kv, ';')) {
    const auto eq = kv.find('=');
    if (eq != std::string::npos) t.meta[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (t.meta["schema_version"] != std::to_string(kFeatureSchemaVersion))
    throw Error(ErrorCode::SchemaVersion,
                path.string() + ": unsupported schema_version '" + t.meta["schema_version"] + "'");
  if (!std::getline(in, line)) throw Error(ErrorCode::MissingColumn, path.string() + ": missing header row");
  auto header = split_csv_line(line);
  const std::vector<std::string> fixed{"group_id", "ref", "dist", "mos"};
  if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin()))
    throw Error(ErrorCode::MissingColumn, path.string() + ": header must start with group_id,ref,dist,mos");
  t.columns.assign(header.begin() + 4, header.end());
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != header.size())
      throw Error(ErrorCode::CountMismatch, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                                std::to_string(header.size()) + " fields, got " +
                                                std::to_string(f.size()));
    FeatureTable::Row row{f[0], f[1], f[2], 0.0, {}};
    try {
      row.mos = f[3].empty() ? std::numeric_limits<double>::quiet_NaN() : parse_double(f[3]);
      for (std::size_t j = 4; j < f.size(); ++j) row.values.push_back(parse_double(f[j]));
    } catch (const std::invalid_argument& e) {
      throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string format_feature_csv(const FeatureTable& t) {
  auto meta = t.meta;
  meta["schema_version"] = std::to_string(kFeatureSchemaVersion);
  std::string out = "#schema_version=" + meta["schema_version"];
  for (const auto& [k, v] : meta)
    if (k != "schema_version") out += ";" + k + "=" + v;
  out += '\n';
  std::vector<std::string> header{"group_id", "ref", "dist", "mos"};
  header.insert(header.end(), t.columns.begin(), t.columns.end());
  out += join_csv_line(header) + '\n';
  for (const auto& r : t.rows) {
    std::vector<std::string> f{r.group_id, r.ref, r.dist, std::isnan(r.mos) ? std::string() : format_double(r.mos)};
    for (double v : r.values) f.push_back(format_double(v));
    out += join_csv_line(f) + '\n';
  }
  return out;
}

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path) {
  write_file_atomic(path, format_feature_csv(table));
}

// ---------------------------------------------------------------- extraction

namespace {

struct FileHashes {
  std::mutex mutex;
  std::map<std::filesystem::path, std::string> known;

  std::string get(const std::filesystem::path& p) {
    {
      std::lock_guard lock(mutex);
      if (auto it = known.find(p); it != known.end()) return it->second;
    }
    auto h = sha256_file(p);
    std::lock_guard lock(mutex);
    known.emplace(p, h);
    return h;
  }
};

std::optional<std::array<double, kColumnCount>> read_cache(const std::filesystem::path& file) {
  std::error_code ec;
  if (!std::filesystem::exists(file, ec)) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(read_file(file));
    if (j.at("schema_version").get<int>() != kFeatureSchemaVersion) return std::nullopt;
    std::array<double, kColumnCount> v{};
    const auto& values = j.at("columns");
    const auto names = column_names();
    for (std::size_t i = 0; i < kColumnCount; ++i) v[i] = parse_double(values.at(names[i]).get<std::string>());
    return v;
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entries are recomputed and overwritten
  }
}

void write_cache(const std::filesystem::path& file, const std::array<double, kColumnCount>& v,
                 const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["schema_version"] = kFeatureSchemaVersion;
  j["config_hash"] = config_hash;
  const auto names = column_names();
  for (std::size_t i = 0; i < kColumnCount; ++i) j["columns"][names[i]] = format_double(v[i]);
  write_file_atomic(file, j.dump(1));
}

}  // namespace

FeatureTable extract_features(const DatasetManifest& manifest, const Config& config,
                              const std::optional<std::filesystem::path>& cache_dir, std::size_t jobs,
                              ExtractionStats* stats) {
  const MetricConfig mc = MetricConfig::from_config(config);
  const std::string config_hash = config.extraction_hash();
  if (cache_dir) std::filesystem::create_directories(*cache_dir);

  const std::size_t n = manifest.rows.size();
  std::vector<std::array<double, kColumnCount>> values(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0}, computed{0}, hits{0};
  std::atomic<bool> failed{false};
  FileHashes hashes;

  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < n && !failed; i = next.fetch_add(1)) {
      const auto& row = manifest.rows[i];
      try {
        std::optional<std::filesystem::path> entry;
        if (cache_dir) {
          const auto key =
              sha256_hex(hashes.get(row.ref_path) + ":" + hashes.get(row.dist_path) + ":" + config_hash + ":" +
                         std::to_string(kFeatureSchemaVersion));
          entry = *cache_dir / (key + ".json");
          if (auto cached = read_cache(*entry)) {
            values[i] = *cached;
            ++hits;
            continue;
          }
        }
        const auto ref = load_ply(row.ref_path, mc.bit_depth);
        const auto dist = load_ply(row.dist_path, mc.bit_depth);
        values[i] = column_vector(compute_pair(ref, dist, mc), mc);
        ++computed;
        if (entry) write_cache(*entry, values[i], config_hash);
      } catch (const Error& e) {
        errors[i] = std::make_exception_ptr(Error(
            e.code(), "row " + std::to_string(i + 1) + " (ref " + row.ref + ", dist " + row.dist + "): " + e.detail()));
        failed = true;
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };

  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, std::max<std::size_t>(n, 1));
  if (jobs <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  FeatureTable table;
  table.meta["config_hash"] = config_hash;
  table.meta["color_mode"] = to_string(mc.color_mode);
  table.meta["psnr_cap_db"] = format_double(mc.cap_db);
  table.columns = column_names();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = manifest.rows[i];
    table.rows.push_back({r.group_id, r.ref, r.dist, r.mos, std::vector<double>(values[i].begin(), values[i].end())});
  }
  if (stats) *stats = {computed.load(), hits.load()};
  return table;
}

}  // namespace pcqkit
