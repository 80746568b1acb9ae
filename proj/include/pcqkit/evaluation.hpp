#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcqkit/features.hpp"

namespace pcqkit {

/// b1 + (b2 - b1) / (1 + exp(-b3 (x - b4)))
double logistic(const std::array<double, 4>& beta, double x);

struct LogisticFit {
  std::array<double, 4> beta{};
  bool converged = false;
  std::vector<double> fitted;
  std::vector<double> residuals;  // fitted - mos
  double rmse = 0.0;

  double operator()(double x) const { return logistic(beta, x); }
};

/// Least squares by Nelder-Mead from a deterministic start plus `restarts`
/// seeded perturbations; the best-affine curve is embedded as one more start.
LogisticFit logistic_fit(std::span<const double> scores, std::span<const double> mos, int restarts = 20);

std::vector<double> average_ranks(std::span<const double> v);
double pearson(std::span<const double> x, std::span<const double> y);   // throws ZeroVariance
double spearman(std::span<const double> x, std::span<const double> y);  // throws ZeroVariance

struct Correlation {
  double pcc = 0.0;
  double srocc = 0.0;
};
Correlation correlation_stats(std::span<const double> pred, std::span<const double> mos);

struct ErrorStats {
  double rmse = 0.0;
  double or_ratio = 0.0;
  bool or_fallback = false;  // threshold used multiplier x RMSE instead of MOS std
};
ErrorStats error_stats(std::span<const double> fitted, std::span<const double> mos,
                       std::optional<std::span<const double>> mos_std = std::nullopt, double multiplier = 2.0);

struct MetricReport {
  double pcc = 0.0;
  double srocc = 0.0;
  double rmse = 0.0;
  double or_ratio = 0.0;
  std::array<double, 4> beta{};
  std::size_t n = 0;
  bool or_fallback = false;
};

struct EvaluationReport {
  std::vector<std::pair<std::string, MetricReport>> metrics;  // in column order
  bool mos_normalized = false;
  std::string config_hash;

  const MetricReport& at(const std::string& name) const;
  std::string to_json() const;
  static EvaluationReport from_json(const std::string& text);
  std::string text_table() const;
};

struct EvaluationOptions {
  bool normalize_mos = true;
  double outlier_multiplier = 2.0;
  int restarts = 20;
};

/// Joins score rows to manifest rows on (ref, dist) and evaluates each
/// named column (all columns when `columns` is empty).
EvaluationReport evaluate(const FeatureTable& scores, const DatasetManifest& manifest,
                          const std::vector<std::string>& columns = {}, const EvaluationOptions& options = {});

}  // namespace pcqkit
