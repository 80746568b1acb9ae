#include "pcqkit/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcqkit/config.hpp"
#include "pcqkit/error.hpp"
#include "pcqkit/evaluation.hpp"
#include "pcqkit/features.hpp"
#include "pcqkit/fusion.hpp"
#include "pcqkit/graphsim.hpp"
#include "pcqkit/ply.hpp"
#include "pcqkit/regression.hpp"
#include "pcqkit/spatial_index.hpp"
#include "pcqkit/util.hpp"

namespace pcqkit {
namespace {

using json = nlohmann::ordered_json;

struct Options {
  std::string config_path;
  std::vector<std::string> sets;
  std::string ref, dist, manifest, features, scores, model, out, metric = "all", cache, estimator = "ridge",
      columns;
  std::optional<long long> jobs, seed, folds, bitdepth, step;
  bool force = false;
  bool strict = false;
};

bool is_usage_error(ErrorCode c) {
  return c == ErrorCode::InvalidArgument || c == ErrorCode::BadConfig || c == ErrorCode::UnknownModel ||
         c == ErrorCode::UnknownFeatureName;
}

Config effective_config(const Options& o) {
  Config c = Config::defaults();
  std::string path = o.config_path;
  if (path.empty())
    if (const char* env = std::getenv("PCQKIT_CONFIG"); env && *env) path = env;
  if (!path.empty()) c.load_file(path);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.bitdepth) c.set("io.bitdepth", std::to_string(*o.bitdepth));
  if (o.jobs) c.set("run.jobs", std::to_string(*o.jobs));
  if (o.seed) c.set("regression.seed", std::to_string(*o.seed));
  if (o.folds) c.set("regression.folds", std::to_string(*o.folds));
  if (o.step) c.set("regression.rfe_step", std::to_string(*o.step));
  return c;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorCode::InvalidArgument, std::string("missing required option ") + flag);
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    write_file_atomic(path, text);
}

json psnr_json(const PsnrResult& r, double cap) {
  return {{"psnr_db", capped(r.psnr_db, cap)},
          {"capped", !(r.psnr_db <= cap)},
          {"mse_forward", r.mse_forward},
          {"mse_backward", r.mse_backward},
          {"mse_symmetric", r.mse_symmetric},
          {"peak", r.peak}};
}

json config_json(const Config& c) {
  json j = json::object();
  for (const auto& [k, e] : c.entries()) j[k] = e.value;
  return j;
}

// ---------------------------------------------------------------- subcommands

int cmd_info(const Options& o, const Config& c, std::ostream& out) {
  require(o.ref, "--ref");
  const auto mc = MetricConfig::from_config(c);
  const auto cloud = load_ply(o.ref, mc.bit_depth);
  validate(cloud);
  const auto box = bounding_box(cloud);
  const auto index = build_index(cloud);
  json j;
  j["file"] = o.ref;
  j["points"] = cloud.size();
  j["has_colors"] = cloud.has_colors();
  j["has_normals"] = cloud.has_normals();
  j["bit_depth"] = cloud.bit_depth;
  j["bit_depth_inferred"] = cloud.bit_depth_inferred;
  j["peak"] = cloud.peak();
  j["bbox_min"] = {box.min_corner.x(), box.min_corner.y(), box.min_corner.z()};
  j["bbox_max"] = {box.max_corner.x(), box.max_corner.y(), box.max_corner.z()};
  j["bbox_diagonal"] = box.diagonal();
  j["mean_nn_distance"] = cloud.size() > 1 ? mean_nearest_neighbor_distance(cloud, index) : 0.0;
  emit(j.dump(2) + "\n", o.out, out);
  return 0;
}

int cmd_metric(const Options& o, const Config& c, std::ostream& out) {
  require(o.ref, "--ref");
  require(o.dist, "--dist");
  const auto mc = MetricConfig::from_config(c);
  const auto sel = MetricSelection::parse(o.metric);
  const auto ref = load_ply(o.ref, mc.bit_depth);
  const auto dist = load_ply(o.dist, mc.bit_depth);
  const auto m = compute_pair(ref, dist, mc, sel);

  json j;
  j["ref"] = o.ref;
  j["dist"] = o.dist;
  j["config_hash"] = c.extraction_hash();
  j["config"] = config_json(c);
  if (m.d1) j["d1"] = psnr_json(*m.d1, mc.cap_db);
  if (m.d2) j["d2"] = psnr_json(*m.d2, mc.cap_db);
  if (m.yuv) {
    j["yuv"] = {{"y", psnr_json(m.yuv->psnr_y, mc.cap_db)},
                {"u", psnr_json(m.yuv->psnr_u, mc.cap_db)},
                {"v", psnr_json(m.yuv->psnr_v, mc.cap_db)},
                {"combined_db", m.yuv->psnr_combined}};
  }
  if (m.pointssim_geo) j["pointssim"] = {{"geometry", m.pointssim_geo->score}, {"luminance", m.pointssim_lum->score}};
  if (m.pcqm) {
    j["pcqm"] = {{"f", m.pcqm->f}, {"aggregate", *m.pcqm_aggregate}, {"radius", m.pcqm_radius},
                 {"color_mode", to_string(m.pcqm->color_mode)}};
  }
  if (m.graphsim) {
    json scales = json::array();
    for (const auto& s : m.graphsim->scales)
      scales.push_back({{"mg", s.mg},
                        {"ug", s.ug},
                        {"cg", s.cg},
                        {"score", s.score},
                        {"keypoints_used", s.keypoints_used},
                        {"keypoints_skipped", s.keypoints_skipped},
                        {"dist_holes", s.dist_holes}});
    j["msgraphsim"] = {{"overall", m.graphsim->overall},
                       {"graphsim", m.graphsim->graphsim},
                       {"radius", m.graphsim->radius},
                       {"keypoints", m.graphsim->keypoints},
                       {"scales", scales}};
  }
  emit(j.dump(2) + "\n", o.out, out);
  return 0;
}

int cmd_extract(const Options& o, const Config& c, std::ostream& out, std::ostream& err) {
  require(o.manifest, "--manifest");
  const auto manifest = load_manifest(o.manifest, o.strict);
  std::optional<std::filesystem::path> cache;
  if (!o.cache.empty()) cache = o.cache;
  ExtractionStats stats;
  const auto table =
      extract_features(manifest, c, cache, static_cast<std::size_t>(std::max(0LL, c.get_int("run.jobs"))), &stats);
  emit(format_feature_csv(table), o.out, out);
  err << "extracted " << table.size() << " rows (" << stats.computed << " computed, " << stats.cache_hits
      << " from cache)\n";
  return 0;
}

int cmd_train(const Options& o, const Config& c, std::ostream& out) {
  require(o.features, "--features");
  require(o.model, "--model");
  const auto table = read_feature_csv(o.features);
  const auto spec = model_registry(o.model);
  const auto model = train_model(table, spec, regressor_params(c), c.hash());
  emit(model.to_json(), o.out, out);
  return 0;
}

int cmd_rfe(const Options& o, const Config& c, std::ostream& out) {
  require(o.features, "--features");
  const auto table = read_feature_csv(o.features);
  std::vector<std::string> names = table.columns;
  RegressorKind kind = regressor_kind_from_string(o.estimator);
  if (!o.model.empty()) {
    const auto spec = model_registry(o.model);
    names = spec.features;
    kind = spec.kind;
  }
  const auto seed = static_cast<std::uint64_t>(c.get_int("regression.seed"));
  const auto ranking = rfe_rank(table.matrix(names), table.mos(), names, kind, regressor_params(c),
                                static_cast<std::size_t>(c.get_int("regression.rfe_step")), seed);
  json j;
  j["estimator"] = to_string(kind);
  j["seed"] = seed;
  j["config_hash"] = table.config_hash();
  j["ranking"] = ranking.names;
  j["rounds"] = json::array();
  for (const auto& r : ranking.rounds) {
    json round;
    for (std::size_t i = 0; i < r.features.size(); ++i) round["importance"][r.features[i]] = r.importance[i];
    round["removed"] = r.removed;
    j["rounds"].push_back(round);
  }
  emit(j.dump(2) + "\n", o.out, out);
  return 0;
}

int cmd_predict(const Options& o, std::ostream& out) {
  require(o.features, "--features");
  require(o.model, "--model");
  const auto model = FusionModel::load(o.model);
  const auto table = read_feature_csv(o.features);
  if (!o.force && table.config_hash() != model.feature_config_hash)
    throw Error(ErrorCode::ConfigHashMismatch,
                "features were extracted with config " + table.config_hash() + " but the model was trained on " +
                    model.feature_config_hash + " features; re-extract or pass --force");
  emit(format_feature_csv(score_table(model, table)), o.out, out);
  return 0;
}

int cmd_evaluate(const Options& o, const Config& c, std::ostream& out, std::ostream& err) {
  const std::string scores_path = o.scores.empty() ? o.features : o.scores;
  require(scores_path, "--scores");
  require(o.manifest, "--manifest");
  const auto scores = read_feature_csv(scores_path);
  const auto manifest = load_manifest(o.manifest);
  std::vector<std::string> cols;
  std::stringstream ss(o.columns);
  for (std::string col; std::getline(ss, col, ',');)
    if (!col.empty()) cols.push_back(col);
  const auto report = evaluate(scores, manifest, cols, evaluation_options(c));
  emit(report.to_json(), o.out, out);
  err << report.text_table();
  return 0;
}

int cmd_crossval(const Options& o, const Config& c, std::ostream& out, std::ostream& err) {
  require(o.features, "--features");
  require(o.model, "--model");
  const auto table = read_feature_csv(o.features);
  const auto spec = model_registry(o.model);
  const auto result = crossval(table, spec, regressor_params(c), static_cast<std::size_t>(c.get_int("regression.folds")),
                               static_cast<std::uint64_t>(c.get_int("regression.seed")), evaluation_options(c));
  emit(result.to_json(), o.out, out);
  err << result.text_table();
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Full-reference point cloud quality metrics and feature-fusion models", "pcqkit"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "INI config file (default: $PCQKIT_CONFIG)");
  app.add_option("--set", o.sets, "Override a config key, e.g. --set pcqm.radius=4");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "INI config file (default: $PCQKIT_CONFIG)");
    sub->add_option("--set", o.sets, "Override a config key, e.g. --set pcqm.radius=4");
    sub->add_option("--out", o.out, "Output file (default: stdout)");
  };

  auto* info = app.add_subcommand("info", "Print statistics of one cloud");
  add_common(info);
  info->add_option("--ref", o.ref, "PLY file");
  info->add_option("--bitdepth", o.bitdepth, "Geometry bit depth");

  auto* metric = app.add_subcommand("metric", "Compare one reference/distorted pair");
  add_common(metric);
  metric->add_option("--ref", o.ref, "Reference PLY");
  metric->add_option("--dist", o.dist, "Distorted PLY");
  metric->add_option("--metric", o.metric, "all or a list of d1,d2,yuv,pointssim,pcqm,graphsim");
  metric->add_option("--bitdepth", o.bitdepth, "Geometry bit depth");

  auto* extract = app.add_subcommand("extract", "Compute the feature CSV of a dataset manifest");
  add_common(extract);
  extract->add_option("--manifest", o.manifest, "Manifest CSV");
  extract->add_option("--jobs", o.jobs, "Worker threads (0 = logical cores)");
  extract->add_option("--cache", o.cache, "Feature cache directory");
  extract->add_option("--bitdepth", o.bitdepth, "Geometry bit depth");
  extract->add_flag("--strict", o.strict, "Check that every listed file exists before extracting");

  auto* train = app.add_subcommand("train", "Fit a fusion model on a feature CSV");
  add_common(train);
  train->add_option("--features", o.features, "Feature CSV");
  train->add_option("--model", o.model, "model1..model8, fsm, ridge:<features> or svr:<features>");

  auto* rfe = app.add_subcommand("rfe", "Rank features by recursive elimination");
  add_common(rfe);
  rfe->add_option("--features", o.features, "Feature CSV");
  rfe->add_option("--model", o.model, "Restrict to a registry model's features and regressor");
  rfe->add_option("--estimator", o.estimator, "ridge or svr (when --model is absent)");
  rfe->add_option("--step", o.step, "Features removed per round");
  rfe->add_option("--seed", o.seed, "Permutation seed");

  auto* predict = app.add_subcommand("predict", "Score a feature CSV with a trained model");
  add_common(predict);
  predict->add_option("--model", o.model, "Model JSON");
  predict->add_option("--features", o.features, "Feature CSV");
  predict->add_flag("--force", o.force, "Accept features extracted with a different config");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Correlate score columns with MOS");
  add_common(evaluate_cmd);
  evaluate_cmd->add_option("--scores,--features", o.scores, "Score or feature CSV");
  evaluate_cmd->add_option("--manifest", o.manifest, "Manifest CSV with MOS");
  evaluate_cmd->add_option("--metric", o.columns, "Comma-separated columns to evaluate (default: all)");

  auto* cv = app.add_subcommand("crossval", "Group k-fold cross-validation of a model");
  add_common(cv);
  cv->add_option("--features", o.features, "Feature CSV");
  cv->add_option("--model", o.model, "Registry model name");
  cv->add_option("--folds", o.folds, "Number of folds");
  cv->add_option("--seed", o.seed, "Fold assignment seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    const Config c = effective_config(o);
    if (*info) return cmd_info(o, c, out);
    if (*metric) return cmd_metric(o, c, out);
    if (*extract) return cmd_extract(o, c, out, err);
    if (*train) return cmd_train(o, c, out);
    if (*rfe) return cmd_rfe(o, c, out);
    if (*predict) return cmd_predict(o, out);
    if (*evaluate_cmd) return cmd_evaluate(o, c, out, err);
    if (*cv) return cmd_crossval(o, c, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_usage_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace pcqkit
