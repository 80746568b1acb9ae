#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pcqkit/config.hpp"
#include "pcqkit/evaluation.hpp"
#include "pcqkit/features.hpp"
#include "pcqkit/regression.hpp"

namespace pcqkit {

inline constexpr int kModelSchemaVersion = 1;

/// A named feature subset, the scaler fitted on its training rows, and the
/// regressor. Serialized as JSON.
struct FusionModel {
  std::string name;
  std::vector<std::string> features;
  Scaler scaler;
  RegressorKind kind = RegressorKind::Ridge;
  std::optional<RidgeModel> ridge;
  std::optional<SvrModel> svr;
  std::string feature_config_hash;  // extraction hash of the training features
  std::string config_hash;          // hash of the full effective config
  std::size_t training_rows = 0;

  /// Raw (unscaled) columns in `features` order.
  Eigen::VectorXd predict(const Eigen::MatrixXd& raw) const;
  Eigen::VectorXd predict(const FeatureTable& table) const;  // throws MissingFeatureColumn

  std::string to_json() const;
  static FusionModel from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static FusionModel load(const std::filesystem::path& path);
};

FusionModel train_model(const Eigen::MatrixXd& raw, const Eigen::VectorXd& mos, const ModelSpec& spec,
                        const RegressorParams& params = {});
FusionModel train_model(const FeatureTable& table, const ModelSpec& spec, const RegressorParams& params = {},
                        const std::string& config_hash = "");

RegressorParams regressor_params(const Config& config);
EvaluationOptions evaluation_options(const Config& config);

/// One score column named after the model, keyed like the input rows.
FeatureTable score_table(const FusionModel& model, const FeatureTable& features);

struct FoldStats {
  std::size_t fold = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  double pcc = 0.0;
  double srocc = 0.0;
  double rmse = 0.0;
  bool logistic = false;  // statistics on logistic-mapped predictions
};

struct CrossvalResult {
  std::string model;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::vector<FoldStats> per_fold;
  double pcc_mean = 0, pcc_std = 0;
  double srocc_mean = 0, srocc_std = 0;
  double rmse_mean = 0, rmse_std = 0;
  std::string config_hash;

  std::string to_json() const;
  std::string text_table() const;
};

/// Group-aware k-fold: the scaler and regressor see only training rows.
/// RMSE is on the MOS scale normalized over the whole table when requested.
CrossvalResult crossval(const FeatureTable& table, const ModelSpec& spec, const RegressorParams& params,
                        std::size_t folds, std::uint64_t seed, const EvaluationOptions& options = {});

}  // namespace pcqkit
