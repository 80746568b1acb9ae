#include "pcqkit/fusion.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "pcqkit/error.hpp"
#include "pcqkit/util.hpp"

namespace pcqkit {
namespace {

using json = nlohmann::ordered_json;

json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Eigen::VectorXd FusionModel::predict(const Eigen::MatrixXd& raw) const {
  if (static_cast<std::size_t>(raw.cols()) != features.size())
    throw Error(ErrorCode::MissingFeatureColumn, "model '" + name + "' expects " + std::to_string(features.size()) +
                                                     " feature columns, got " + std::to_string(raw.cols()));
  const Eigen::MatrixXd x = scaler.transform(raw);
  if (kind == RegressorKind::Ridge) return ridge->predict(x);
  return svr->predict(x);
}

Eigen::VectorXd FusionModel::predict(const FeatureTable& table) const { return predict(table.matrix(features)); }

std::string FusionModel::to_json() const {
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["name"] = name;
  j["features"] = features;
  j["scaler"]["min"] = vec_to_json(scaler.min);
  j["scaler"]["max"] = vec_to_json(scaler.max);
  j["scaler"]["constant"] = scaler.constant;
  j["regressor"]["kind"] = to_string(kind);
  if (kind == RegressorKind::Ridge) {
    j["regressor"]["alpha"] = ridge->alpha;
    j["regressor"]["coefficients"] = vec_to_json(ridge->coefficients);
    j["regressor"]["intercept"] = ridge->intercept;
  } else {
    j["regressor"]["c"] = svr->c;
    j["regressor"]["epsilon"] = svr->epsilon;
    j["regressor"]["gamma"] = svr->gamma;
    j["regressor"]["bias"] = svr->bias;
    j["regressor"]["dual_coefficients"] = vec_to_json(svr->coefficients);
    json sv = json::array();
    for (Eigen::Index i = 0; i < svr->support.rows(); ++i) sv.push_back(vec_to_json(svr->support.row(i).transpose()));
    j["regressor"]["support_vectors"] = sv;
  }
  j["training"]["rows"] = training_rows;
  j["training"]["feature_config_hash"] = feature_config_hash;
  j["training"]["config_hash"] = config_hash;
  return j.dump(2) + "\n";
}

FusionModel FusionModel::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("model file is not valid JSON: ") + e.what());
  }
  if (j.value("schema_version", 0) != kModelSchemaVersion)
    throw Error(ErrorCode::SchemaVersion, "unsupported model schema_version");
  try {
    FusionModel m;
    m.name = j.at("name").get<std::string>();
    m.features = j.at("features").get<std::vector<std::string>>();
    m.scaler.min = vec_from_json(j.at("scaler").at("min"));
    m.scaler.max = vec_from_json(j.at("scaler").at("max"));
    m.scaler.constant = j.at("scaler").at("constant").get<std::vector<bool>>();
    const auto& r = j.at("regressor");
    m.kind = regressor_kind_from_string(r.at("kind").get<std::string>());
    if (m.kind == RegressorKind::Ridge) {
      RidgeModel rm;
      rm.alpha = r.at("alpha").get<double>();
      rm.coefficients = vec_from_json(r.at("coefficients"));
      rm.intercept = r.at("intercept").get<double>();
      m.ridge = rm;
    } else {
      SvrModel sm;
      sm.c = r.at("c").get<double>();
      sm.epsilon = r.at("epsilon").get<double>();
      sm.gamma = r.at("gamma").get<double>();
      sm.bias = r.at("bias").get<double>();
      sm.coefficients = vec_from_json(r.at("dual_coefficients"));
      const auto& sv = r.at("support_vectors");
      sm.support.resize(static_cast<Eigen::Index>(sv.size()), static_cast<Eigen::Index>(m.features.size()));
      for (std::size_t i = 0; i < sv.size(); ++i) sm.support.row(static_cast<Eigen::Index>(i)) = vec_from_json(sv[i]);
      m.svr = sm;
    }
    m.training_rows = j.at("training").at("rows").get<std::size_t>();
    m.feature_config_hash = j.at("training").at("feature_config_hash").get<std::string>();
    m.config_hash = j.at("training").at("config_hash").get<std::string>();
    const auto p = static_cast<Eigen::Index>(m.features.size());
    if (m.scaler.min.size() != p || m.scaler.max.size() != p || static_cast<Eigen::Index>(m.scaler.constant.size()) != p ||
        (m.ridge && m.ridge->coefficients.size() != p))
      throw Error(ErrorCode::InvalidArgument, "model file sizes do not match its feature list");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed model file: ") + e.what());
  }
}

void FusionModel::save(const std::filesystem::path& path) const { write_file_atomic(path, to_json()); }

FusionModel FusionModel::load(const std::filesystem::path& path) { return from_json(read_file(path)); }

FusionModel train_model(const Eigen::MatrixXd& raw, const Eigen::VectorXd& mos, const ModelSpec& spec,
                        const RegressorParams& params) {
  for (Eigen::Index i = 0; i < mos.size(); ++i)
    if (!std::isfinite(mos(i))) throw Error(ErrorCode::BadMosValue, "training row " + std::to_string(i + 1) + " has no MOS");
  for (Eigen::Index i = 0; i < raw.size(); ++i)
    if (!std::isfinite(raw.data()[i])) throw Error(ErrorCode::InvalidArgument, "training features must be finite");
  FusionModel m;
  m.name = spec.name;
  m.features = spec.features;
  m.kind = spec.kind;
  m.scaler = Scaler::fit(raw);
  const Eigen::MatrixXd x = m.scaler.transform(raw);
  if (spec.kind == RegressorKind::Ridge)
    m.ridge = ridge_fit(x, mos, params.alpha);
  else
    m.svr = svr_fit(x, mos, params.svr);
  m.training_rows = static_cast<std::size_t>(raw.rows());
  return m;
}

FusionModel train_model(const FeatureTable& table, const ModelSpec& spec, const RegressorParams& params,
                        const std::string& config_hash) {
  auto m = train_model(table.matrix(spec.features), table.mos(), spec, params);
  m.feature_config_hash = table.config_hash();
  m.config_hash = config_hash;
  return m;
}

RegressorParams regressor_params(const Config& c) {
  RegressorParams p;
  p.alpha = c.get_double("regression.alpha");
  p.svr.c = c.get_double("regression.svr_c");
  p.svr.epsilon = c.get_double("regression.svr_epsilon");
  p.svr.gamma = c.get_double("regression.svr_gamma");
  p.svr.tolerance = c.get_double("regression.svr_tolerance");
  p.svr.max_iterations = static_cast<std::size_t>(c.get_int("regression.svr_max_iter"));
  p.permutation_repeats = static_cast<std::size_t>(c.get_int("regression.permutation_repeats"));
  return p;
}

EvaluationOptions evaluation_options(const Config& c) {
  EvaluationOptions o;
  o.normalize_mos = c.get_bool("evaluation.normalize_mos");
  o.outlier_multiplier = c.get_double("evaluation.outlier_multiplier");
  o.restarts = static_cast<int>(c.get_int("evaluation.restarts"));
  return o;
}

FeatureTable score_table(const FusionModel& model, const FeatureTable& features) {
  const Eigen::VectorXd s = model.predict(features);
  FeatureTable out;
  out.meta["config_hash"] = features.config_hash();
  out.meta["model"] = model.name;
  out.meta["model_config_hash"] = model.config_hash;
  out.columns = {model.name};
  for (std::size_t i = 0; i < features.rows.size(); ++i) {
    const auto& r = features.rows[i];
    out.rows.push_back({r.group_id, r.ref, r.dist, r.mos, {s(static_cast<Eigen::Index>(i))}});
  }
  return out;
}

// ---------------------------------------------------------------- cross-validation

namespace {

void mean_std(const std::vector<FoldStats>& folds, double FoldStats::*field, double& mean, double& sd) {
  double s = 0.0;
  for (const auto& f : folds) s += f.*field;
  mean = s / static_cast<double>(folds.size());
  double v = 0.0;
  for (const auto& f : folds) v += (f.*field - mean) * (f.*field - mean);
  sd = std::sqrt(v / static_cast<double>(folds.size()));
}

}  // namespace

CrossvalResult crossval(const FeatureTable& table, const ModelSpec& spec, const RegressorParams& params,
                        std::size_t folds, std::uint64_t seed, const EvaluationOptions& options) {
  const Eigen::MatrixXd raw = table.matrix(spec.features);
  const Eigen::VectorXd mos = table.mos();
  const auto splits = group_kfold(table.groups(), folds, seed);

  double lo = mos.minCoeff(), range = mos.maxCoeff() - lo;
  if (!options.normalize_mos || !(range > 0)) {
    lo = 0.0;
    range = 1.0;
  }

  CrossvalResult result;
  result.model = spec.name;
  result.folds = folds;
  result.seed = seed;
  result.config_hash = table.config_hash();
  for (std::size_t f = 0; f < splits.size(); ++f) {
    const auto& split = splits[f];
    Eigen::MatrixXd xtr(static_cast<Eigen::Index>(split.train.size()), raw.cols());
    Eigen::VectorXd ytr(xtr.rows());
    for (std::size_t i = 0; i < split.train.size(); ++i) {
      xtr.row(i) = raw.row(split.train[i]);
      ytr(i) = mos(split.train[i]);
    }
    Eigen::MatrixXd xte(static_cast<Eigen::Index>(split.test.size()), raw.cols());
    std::vector<double> yte(split.test.size());
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      xte.row(i) = raw.row(split.test[i]);
      yte[i] = (mos(split.test[i]) - lo) / range;
    }
    const auto model = train_model(xtr, ytr, spec, params);
    const Eigen::VectorXd pred = model.predict(xte);
    std::vector<double> p(split.test.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = (pred(i) - lo) / range;

    FoldStats s;
    s.fold = f;
    s.train_rows = split.train.size();
    s.test_rows = split.test.size();
    std::vector<double> mapped = p;
    if (p.size() >= 5) {
      try {
        mapped = logistic_fit(p, yte, options.restarts).fitted;
        s.logistic = true;
      } catch (const Error&) {
      }
    }
    try {
      const auto c = correlation_stats(mapped, yte);
      s.pcc = c.pcc;
      s.srocc = c.srocc;
    } catch (const Error&) {
      s.pcc = s.srocc = 0.0;  // constant fold; reported as no association
    }
    s.rmse = error_stats(mapped, yte).rmse;
    result.per_fold.push_back(s);
  }
  mean_std(result.per_fold, &FoldStats::pcc, result.pcc_mean, result.pcc_std);
  mean_std(result.per_fold, &FoldStats::srocc, result.srocc_mean, result.srocc_std);
  mean_std(result.per_fold, &FoldStats::rmse, result.rmse_mean, result.rmse_std);
  return result;
}

std::string CrossvalResult::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["model"] = model;
  j["folds"] = folds;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["per_fold"] = json::array();
  for (const auto& f : per_fold)
    j["per_fold"].push_back({{"fold", f.fold},
                             {"train_rows", f.train_rows},
                             {"test_rows", f.test_rows},
                             {"pcc", f.pcc},
                             {"srocc", f.srocc},
                             {"rmse", f.rmse},
                             {"logistic", f.logistic}});
  j["pcc"] = {{"mean", pcc_mean}, {"std", pcc_std}};
  j["srocc"] = {{"mean", srocc_mean}, {"std", srocc_std}};
  j["rmse"] = {{"mean", rmse_mean}, {"std", rmse_std}};
  return j.dump(2) + "\n";
}

std::string CrossvalResult::text_table() const {
  std::ostringstream out;
  out << "model " << model << ", " << folds << " folds, seed " << seed << "\n";
  out << std::setw(5) << "fold" << std::setw(8) << "train" << std::setw(7) << "test" << std::setw(9) << "PCC"
      << std::setw(9) << "SROCC" << std::setw(9) << "RMSE" << "\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& f : per_fold)
    out << std::setw(5) << f.fold << std::setw(8) << f.train_rows << std::setw(7) << f.test_rows << std::setw(9)
        << f.pcc << std::setw(9) << f.srocc << std::setw(9) << f.rmse << "\n";
  out << "PCC " << pcc_mean << " +/- " << pcc_std << "   SROCC " << srocc_mean << " +/- " << srocc_std << "   RMSE "
      << rmse_mean << " +/- " << rmse_std << "\n";
  return out.str();
}

}  // namespace pcqkit
