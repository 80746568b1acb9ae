#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pcqkit {

/// Per-column min-max scaling fitted on training data. Values outside the
/// training range are clamped to [0, 1]; constant columns map to 0.
struct Scaler {
  Eigen::VectorXd min;
  Eigen::VectorXd max;
  std::vector<bool> constant;

  static Scaler fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
  bool any_constant() const;
};

struct ScaledData {
  Eigen::MatrixXd train;
  Eigen::MatrixXd test;
  Scaler scaler;
};

ScaledData scaler_fit_apply(const Eigen::MatrixXd& train, const Eigen::MatrixXd& test);

struct RidgeModel {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  double alpha = 1.0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Minimizes |y - X b - c|^2 + alpha |b|^2 with an unpenalized intercept.
RidgeModel ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha);

struct SvrParams {
  double c = 1.0;
  double epsilon = 0.1;
  double gamma = 0.0;  // <= 0: 1 / (n_features * variance of X)
  double tolerance = 1e-3;
  std::size_t max_iterations = 10'000'000;
};

struct SvrModel {
  Eigen::MatrixXd support;       // one support vector per row
  Eigen::VectorXd coefficients;  // alpha_i - alpha*_i per support vector
  double bias = 0.0;
  double c = 1.0;
  double epsilon = 0.1;
  double gamma = 1.0;

  // Training diagnostics, not serialized.
  Eigen::VectorXd alpha;       // per training row
  Eigen::VectorXd alpha_star;  // per training row
  std::size_t iterations = 0;
  double final_gap = 0.0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

double rbf_kernel(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b,
                  double gamma);
double default_svr_gamma(const Eigen::MatrixXd& x);

/// Epsilon-SVR with an RBF kernel, solved by SMO with second-order working
/// set selection.
SvrModel svr_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SvrParams& params = {});

/// Largest violation of the complementary-slackness conditions, in units of
/// the target, over the training rows the model was fitted on.
double svr_kkt_violation(const SvrModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Dual objective (to be maximized) for arbitrary box-feasible multipliers.
double svr_dual_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha,
                          const Eigen::VectorXd& alpha_star, double epsilon, double gamma);

enum class RegressorKind { Ridge, Svr };
std::string to_string(RegressorKind kind);
RegressorKind regressor_kind_from_string(const std::string& name);

struct RegressorParams {
  double alpha = 1.0;
  SvrParams svr{};
  std::size_t permutation_repeats = 10;
};

struct FeatureRanking {
  std::vector<std::string> names;  // most important first
  struct Round {
    std::vector<std::string> features;
    std::vector<double> importance;  // parallel to `features`
    std::vector<std::string> removed;
  };
  std::vector<Round> rounds;
};

/// Recursive feature elimination. Columns are min-max scaled first. Ridge
/// importance is |coefficient|; SVR importance is the mean drop in fit PCC
/// over `permutation_repeats` seeded column permutations. Ties are removed
/// highest index first, so lower indices rank higher.
FeatureRanking rfe_rank(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                        RegressorKind estimator, const RegressorParams& params = {}, std::size_t step = 1,
                        std::uint64_t seed = 0);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Groups are shuffled with `seed` and dealt round-robin into folds.
std::vector<Fold> group_kfold(const std::vector<std::string>& groups, std::size_t folds, std::uint64_t seed);

struct ModelSpec {
  std::string name;
  std::vector<std::string> features;
  RegressorKind kind = RegressorKind::Ridge;
};

/// model1..model8, "fsm" (= model5), or "ridge:a,b,..." / "svr:a,b,..." for
/// a custom feature list.
ModelSpec model_registry(const std::string& name);
std::vector<std::string> registry_names();

}  // namespace pcqkit
