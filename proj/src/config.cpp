#include "pcqkit/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pcqkit/error.hpp"
#include "pcqkit/util.hpp"

namespace pcqkit {
namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::defaults() {
  Config c;
  auto& e = c.entries_;
  e["io.bitdepth"] = {"0", "geometry bit depth; 0 = PLY comment or inferred from the largest coordinate"};
  e["normals.radius"] = {"20", "neighborhood radius for normal estimation (geometry units)"};
  e["psnr.cap_db"] = {"100", "finite value substituted for infinite PSNR in features and YUV combination"};
  e["psnr.ycbcr"] = {"bt709", "YCbCr matrix: bt709 or bt601 (full range)"};
  e["psnr.yuv_symmetry"] = {"max_mse", "per-channel symmetric rule: max_mse or max_psnr"};
  e["pointssim.k_neighbors"] = {"12", "neighborhood size for dispersion statistics"};
  e["pointssim.estimator"] = {"variance", "variance, median, mean_abs_dev, median_abs_dev, cov or qcd"};
  e["pointssim.pooling_exponent"] = {"1", "exponent applied to per-point scores before averaging"};
  e["pcqm.radius"] = {"0", "neighborhood radius h; 0 = radius_fraction x bounding-box diagonal"};
  e["pcqm.radius_fraction"] = {"0.02", "h as a fraction of the reference bounding-box diagonal"};
  e["pcqm.k1"] = {"1e-8", "curvature comparison constant"};
  e["pcqm.k2"] = {"1e-8", "curvature contrast constant"};
  e["pcqm.k3"] = {"1e-8", "curvature structure constant"};
  e["pcqm.k4"] = {"0.01", "lightness comparison constant"};
  e["pcqm.k5"] = {"1e-8", "lightness contrast constant"};
  e["pcqm.k6"] = {"1e-8", "lightness structure constant"};
  e["pcqm.k7"] = {"0.01", "chroma comparison constant"};
  e["pcqm.k8"] = {"0.01", "hue comparison constant"};
  e["pcqm.color_mode"] = {"cielab", "cielab or lab2000hl"};
  e["pcqm.lab2000hl_table"] = {"", "path to the LAB2000HL (a,b) remap table"};
  e["pcqm.quadric_fit"] = {"target", "target: fit on the compared cloud around each ref point; own: per-cloud fits"};
  e["graphsim.keypoint_fraction"] = {"0.1", "fraction of reference points kept as keypoints"};
  e["graphsim.k_graph"] = {"10", "k of the k-NN graph used for the high-pass keypoint response"};
  e["graphsim.radius"] = {"0", "local graph radius; 0 = radius_factor x mean NN distance"};
  e["graphsim.radius_factor"] = {"2", "graph radius as a multiple of the mean NN distance"};
  e["graphsim.smoothing"] = {"true", "apply the low-pass graph step before gradients"};
  e["graphsim.scale_weights"] = {"1,1,1", "pooling weights of scales 0, 1, 2"};
  e["graphsim.t0"] = {"0.001", "gradient-mass similarity constant"};
  e["graphsim.t1"] = {"0.001", "gradient-mean similarity constant"};
  e["graphsim.t2"] = {"0.001", "gradient-covariance similarity constant"};
  e["regression.alpha"] = {"1", "ridge penalty"};
  e["regression.svr_c"] = {"1", "SVR box constraint C"};
  e["regression.svr_epsilon"] = {"0.1", "SVR tube half-width"};
  e["regression.svr_gamma"] = {"0", "RBF gamma; 0 = 1 / (n_features x variance of scaled X)"};
  e["regression.svr_tolerance"] = {"1e-3", "SMO stopping tolerance on the KKT gap"};
  e["regression.svr_max_iter"] = {"10000000", "SMO iteration limit"};
  e["regression.rfe_step"] = {"1", "features removed per RFE round"};
  e["regression.permutation_repeats"] = {"10", "permutations per feature for SVR importance"};
  e["regression.seed"] = {"0", "seed for fold assignment and permutations"};
  e["regression.folds"] = {"10", "cross-validation folds"};
  e["evaluation.normalize_mos"] = {"true", "rescale MOS (and MOS std) to [0,1] using the observed range"};
  e["evaluation.outlier_multiplier"] = {"2", "outlier threshold in units of MOS std (or RMSE fallback)"};
  e["evaluation.restarts"] = {"20", "logistic-fit restarts"};
  e["run.jobs"] = {"0", "extraction worker threads; 0 = logical cores"};
  return c;
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::BadConfig, "cannot open config file " + path.string());
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::BadConfig, path.string() + ":" + std::to_string(lineno) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::BadConfig, path.string() + ":" + std::to_string(lineno) + ": expected name = value");
    const std::string name = trim(line.substr(0, eq));
    const std::string key = section.empty() ? name : section + "." + name;
    set(key, trim(line.substr(eq + 1)));
  }
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(ErrorCode::BadConfig, "unknown configuration key '" + key + "'");
  it->second.value = value;
}

const std::string& Config::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(ErrorCode::BadConfig, "unknown configuration key '" + key + "'");
  return it->second.value;
}

double Config::get_double(const std::string& key) const {
  try {
    return parse_double(get(key));
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::BadConfig, key + " must be a number, got '" + get(key) + "'");
  }
}

long long Config::get_int(const std::string& key) const {
  const double v = get_double(key);
  if (v != static_cast<double>(static_cast<long long>(v)))
    throw Error(ErrorCode::BadConfig, key + " must be an integer, got '" + get(key) + "'");
  return static_cast<long long>(v);
}

bool Config::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::BadConfig, key + " must be a boolean, got '" + v + "'");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(parse_double(item));
    } catch (const std::invalid_argument&) {
      throw Error(ErrorCode::BadConfig, key + " must be a comma-separated list of numbers");
    }
  }
  return out;
}

std::string Config::canonical(std::initializer_list<std::string_view> sections) const {
  std::string out;
  for (const auto& [key, entry] : entries_) {
    const std::string_view section = std::string_view(key).substr(0, key.find('.'));
    if (sections.size() != 0 && std::find(sections.begin(), sections.end(), section) == sections.end()) continue;
    out += key + "=" + entry.value + "\n";
  }
  return out;
}

std::string Config::hash(std::initializer_list<std::string_view> sections) const {
  return sha256_hex(canonical(sections)).substr(0, 16);
}

std::string Config::extraction_hash() const {
  return hash({"io", "normals", "psnr", "pointssim", "pcqm", "graphsim"});
}

}  // namespace pcqkit
