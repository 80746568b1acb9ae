#include "pcqkit/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "pcqkit/error.hpp"
#include "pcqkit/evaluation.hpp"
#include "pcqkit/features.hpp"
#include "pcqkit/util.hpp"

namespace pcqkit {

// ---------------------------------------------------------------- scaling

Scaler Scaler::fit(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) throw Error(ErrorCode::InvalidArgument, "cannot fit a scaler on an empty table");
  Scaler s;
  s.min = x.colwise().minCoeff().transpose();
  s.max = x.colwise().maxCoeff().transpose();
  s.constant.resize(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) s.constant[j] = !(s.max(j) > s.min(j));
  return s;
}

Eigen::MatrixXd Scaler::transform(const Eigen::MatrixXd& x) const {
  if (x.cols() != min.size())
    throw Error(ErrorCode::InvalidArgument, "scaler expects " + std::to_string(min.size()) + " columns, got " +
                                                std::to_string(x.cols()));
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (constant[j]) {
      out.col(j).setZero();
      continue;
    }
    const double range = max(j) - min(j);
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, j) = std::clamp((x(i, j) - min(j)) / range, 0.0, 1.0);
  }
  return out;
}

bool Scaler::any_constant() const { return std::find(constant.begin(), constant.end(), true) != constant.end(); }

ScaledData scaler_fit_apply(const Eigen::MatrixXd& train, const Eigen::MatrixXd& test) {
  ScaledData d;
  d.scaler = Scaler::fit(train);
  d.train = d.scaler.transform(train);
  d.test = d.scaler.transform(test);
  return d;
}

// ---------------------------------------------------------------- ridge

Eigen::VectorXd RidgeModel::predict(const Eigen::MatrixXd& x) const {
  return (x * coefficients).array() + intercept;
}

RidgeModel ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha) {
  if (x.rows() < 2) throw Error(ErrorCode::InvalidArgument, "ridge regression needs at least 2 rows");
  if (x.rows() != y.size()) throw Error(ErrorCode::InvalidArgument, "X and y row counts differ");
  if (!(alpha >= 0)) throw Error(ErrorCode::InvalidArgument, "ridge alpha must be non-negative");
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::MatrixXd a = xc.transpose() * xc;
  a.diagonal().array() += alpha;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const auto d = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-13 ||
      (d.size() > 0 && !(d.minCoeff() > 1e-12 * std::max(1.0, d.maxCoeff()))))
    throw Error(ErrorCode::SingularSystem, "normal equations are singular; use a positive alpha");

  RidgeModel m;
  m.alpha = alpha;
  m.coefficients = ldlt.solve(xc.transpose() * yc);
  m.intercept = y_mean - x_mean.dot(m.coefficients);
  return m;
}

// ---------------------------------------------------------------- SVR

double rbf_kernel(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b,
                  double gamma) {
  return std::exp(-gamma * (a - b).squaredNorm());
}

double default_svr_gamma(const Eigen::MatrixXd& x) {
  const double n = static_cast<double>(x.size());
  if (n == 0) return 1.0;
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / n;
  return var > 0 ? 1.0 / (static_cast<double>(x.cols()) * var) : 1.0;
}

Eigen::VectorXd SvrModel::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < support.rows(); ++k) s += coefficients(k) * rbf_kernel(support.row(k), x.row(i), gamma);
    out(i) = s + bias;
  }
  return out;
}

namespace {

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, double gamma) {
  const Eigen::Index l = x.rows();
  Eigen::MatrixXd k(l, l);
  for (Eigen::Index i = 0; i < l; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) k(i, j) = k(j, i) = rbf_kernel(x.row(i), x.row(j), gamma);
  }
  return k;
}

}  // namespace

SvrModel svr_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SvrParams& params) {
  const Eigen::Index l = x.rows();
  if (l < 2) throw Error(ErrorCode::InvalidArgument, "SVR needs at least 2 rows");
  if (l != y.size()) throw Error(ErrorCode::InvalidArgument, "X and y row counts differ");
  if (!(params.c > 0) || !(params.epsilon >= 0))
    throw Error(ErrorCode::InvalidArgument, "SVR needs C > 0 and epsilon >= 0");
  const double gamma = params.gamma > 0 ? params.gamma : default_svr_gamma(x);
  const double c = params.c;
  constexpr double kTau = 1e-12;

  // Variables 0..l-1 are alpha (sign +1), l..2l-1 are alpha* (sign -1).
  const Eigen::MatrixXd kmat = kernel_matrix(x, gamma);
  const Eigen::Index n = 2 * l;
  std::vector<double> beta(n, 0.0), grad(n), sign(n);
  for (Eigen::Index i = 0; i < l; ++i) {
    sign[i] = 1.0;
    sign[i + l] = -1.0;
    grad[i] = params.epsilon - y(i);
    grad[i + l] = params.epsilon + y(i);
  }
  auto q = [&](Eigen::Index s, Eigen::Index t) { return sign[s] * sign[t] * kmat(s % l, t % l); };
  auto at_upper = [&](Eigen::Index t) { return beta[t] >= c; };
  auto at_lower = [&](Eigen::Index t) { return beta[t] <= 0.0; };

  std::size_t iter = 0;
  double gap = 0.0;
  for (;; ++iter) {
    // Maximal violating index, then second-order choice of its partner.
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1, j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (sign[t] > 0 ? !at_upper(t) : !at_lower(t)) {
        const double v = -sign[t] * grad[t];
        if (v > gmax) {
          gmax = v;
          i = t;
        }
      }
    }
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; i >= 0 && t < n; ++t) {
      if (sign[t] > 0 ? at_lower(t) : at_upper(t)) continue;
      const double v = sign[t] * grad[t];
      gmax2 = std::max(gmax2, v);
      const double grad_diff = gmax + v;
      if (grad_diff > 0) {
        double quad = 2.0 - 2.0 * kmat(i % l, t % l);
        if (quad <= 0) quad = kTau;
        const double obj = -(grad_diff * grad_diff) / quad;
        if (obj < best) {
          best = obj;
          j = t;
        }
      }
    }
    gap = gmax + gmax2;
    if (i < 0 || j < 0 || gap < params.tolerance) break;
    if (iter >= params.max_iterations) {
      std::ostringstream msg;
      msg << "SMO stopped after " << iter << " iterations with KKT gap " << gap << " (tolerance "
          << params.tolerance << ")";
      throw Error(ErrorCode::NonConvergence, msg.str());
    }

    const double old_i = beta[i], old_j = beta[j];
    const double qij = q(i, j);
    if (sign[i] != sign[j]) {
      double quad = 2.0 + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = beta[i] - beta[j];
      beta[i] += delta;
      beta[j] += delta;
      if (diff > 0) {
        if (beta[j] < 0) {
          beta[j] = 0;
          beta[i] = diff;
        }
      } else if (beta[i] < 0) {
        beta[i] = 0;
        beta[j] = -diff;
      }
      if (diff > 0) {
        if (beta[i] > c) {
          beta[i] = c;
          beta[j] = c - diff;
        }
      } else if (beta[j] > c) {
        beta[j] = c;
        beta[i] = c + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = beta[i] + beta[j];
      beta[i] -= delta;
      beta[j] += delta;
      if (sum > c) {
        if (beta[i] > c) {
          beta[i] = c;
          beta[j] = sum - c;
        }
      } else if (beta[j] < 0) {
        beta[j] = 0;
        beta[i] = sum;
      }
      if (sum > c) {
        if (beta[j] > c) {
          beta[j] = c;
          beta[i] = sum - c;
        }
      } else if (beta[i] < 0) {
        beta[i] = 0;
        beta[j] = sum;
      }
    }
    const double di = beta[i] - old_i, dj = beta[j] - old_j;
    for (Eigen::Index t = 0; t < n; ++t) grad[t] += q(i, t) * di + q(j, t) * dj;
  }

  // Offset: mean over free variables, else midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  std::size_t free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = sign[t] * grad[t];
    if (at_upper(t)) {
      if (sign[t] < 0)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    } else if (at_lower(t)) {
      if (sign[t] > 0)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    } else {
      ++free;
      sum_free += yg;
    }
  }
  const double rho = free > 0 ? sum_free / static_cast<double>(free) : (ub + lb) / 2.0;

  SvrModel m;
  m.c = c;
  m.epsilon = params.epsilon;
  m.gamma = gamma;
  m.bias = -rho;
  m.iterations = iter;
  m.final_gap = gap;
  m.alpha.resize(l);
  m.alpha_star.resize(l);
  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < l; ++i) {
    m.alpha(i) = beta[i];
    m.alpha_star(i) = beta[i + l];
    if (beta[i] - beta[i + l] != 0.0) sv.push_back(i);
  }
  m.support.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  m.coefficients.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    m.support.row(k) = x.row(sv[k]);
    m.coefficients(k) = beta[sv[k]] - beta[sv[k] + l];
  }
  return m;
}

double svr_kkt_violation(const SvrModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (model.alpha.size() != x.rows()) throw Error(ErrorCode::InvalidArgument, "model was not fitted on these rows");
  const Eigen::VectorXd f = model.predict(x);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double r = y(i) - f(i);
    const double a = model.alpha(i), as = model.alpha_star(i);
    if (a < model.c) worst = std::max(worst, r - model.epsilon);
    if (a > 0) worst = std::max(worst, model.epsilon - r);
    if (as < model.c) worst = std::max(worst, -model.epsilon - r);
    if (as > 0) worst = std::max(worst, r + model.epsilon);
  }
  return worst;
}

double svr_dual_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha,
                          const Eigen::VectorXd& alpha_star, double epsilon, double gamma) {
  const Eigen::VectorXd d = alpha - alpha_star;
  const Eigen::MatrixXd k = kernel_matrix(x, gamma);
  return -0.5 * d.dot(k * d) - epsilon * (alpha + alpha_star).sum() + y.dot(d);
}

// ---------------------------------------------------------------- registry

std::string to_string(RegressorKind kind) { return kind == RegressorKind::Ridge ? "ridge" : "svr"; }

RegressorKind regressor_kind_from_string(const std::string& name) {
  if (name == "ridge" || name == "rr") return RegressorKind::Ridge;
  if (name == "svr") return RegressorKind::Svr;
  throw Error(ErrorCode::InvalidArgument, "unknown regressor '" + name + "' (expected ridge or svr)");
}

ModelSpec model_registry(const std::string& name) {
  using K = RegressorKind;
  static const std::vector<ModelSpec> table = {
      {"model1",
       {"pcqm_f2", "pcqm_f4", "pcqm_f5", "pcqm_f6", "msgsim_mg_s0", "msgsim_ug_s0", "msgsim_cg_s0", "psnr_d2"},
       K::Svr},
      {"model2",
       {"pcqm_f2", "pcqm_f4", "pcqm_f5", "pcqm_f6", "pcqm_f7", "msgsim_mg_s0", "msgsim_cg_s0", "psnr_d2",
        "pointssim_geo", "pointssim_lum"},
       K::Svr},
      // The published row repeats SIM_mg scale 0; SIM_cg scale 0 fills the slot.
      {"model3",
       {"pcqm_f2", "pcqm_f4", "pcqm_f5", "pcqm_f7", "pcqm_f8", "msgsim_mg_s0", "msgsim_ug_s0", "msgsim_cg_s0",
        "msgsim_ug_s2", "msgsim_cg_s2", "psnr_d2", "psnr_v", "pointssim_geo", "pointssim_lum"},
       K::Svr},
      {"model4", {"pcqm_f2", "pcqm_f4", "pcqm_f5", "msgsim_mg_s0"}, K::Svr},
      {"model5", {"pcqm_f2", "pcqm_f4", "pcqm_f5", "pcqm_f7", "msgsim_mg_s0", "psnr_d2"}, K::Ridge},
      {"model6",
       {"pcqm_f2", "pcqm_f4", "pcqm_f5", "pcqm_f7", "pcqm_f8", "msgsim_mg_s0", "msgsim_cg_s0", "msgsim_mg_s2",
        "msgsim_cg_s2", "psnr_d2", "pointssim_geo"},
       K::Ridge},
      {"model7",
       {"pcqm_f1", "pcqm_f2", "pcqm_f4", "pcqm_f5", "pcqm_f7", "pcqm_f8", "msgsim_mg_s0", "msgsim_cg_s0",
        "msgsim_cg_s1", "msgsim_cg_s2", "psnr_d2", "psnr_y", "psnr_u", "psnr_v", "pointssim_geo"},
       K::Ridge},
      {"model8", {"pcqm_f2", "pcqm_f4", "pcqm_f5", "msgsim_mg_s0"}, K::Ridge},
  };
  const std::string key = name == "fsm" ? "model5" : name;
  for (const auto& m : table)
    if (m.name == key) return m;

  const auto colon = name.find(':');
  if (colon != std::string::npos) {
    const std::string kind = name.substr(0, colon);
    if (kind == "ridge" || kind == "svr") {
      ModelSpec spec{name, {}, regressor_kind_from_string(kind)};
      std::stringstream ss(name.substr(colon + 1));
      std::string f;
      while (std::getline(ss, f, ','))
        if (!f.empty()) spec.features.push_back(f);
      if (spec.features.empty()) throw Error(ErrorCode::UnknownModel, "custom model '" + name + "' lists no features");
      const auto known = column_names();
      for (const auto& f : spec.features)
        if (std::find(known.begin(), known.end(), f) == known.end())
          throw Error(ErrorCode::UnknownFeatureName, "unknown feature '" + f + "' in model '" + name + "'");
      return spec;
    }
  }
  throw Error(ErrorCode::UnknownModel, "unknown model '" + name + "' (expected model1..model8, fsm, ridge:<features> "
                                       "or svr:<features>)");
}

std::vector<std::string> registry_names() {
  return {"model1", "model2", "model3", "model4", "model5", "model6", "model7", "model8", "fsm"};
}

// ---------------------------------------------------------------- RFE

namespace {

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(j) = x.col(cols[j]);
  return out;
}

double fit_pcc(const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
  try {
    return pearson(std::span<const double>(pred.data(), pred.size()), std::span<const double>(y.data(), y.size()));
  } catch (const Error&) {
    return 0.0;  // constant predictions carry no linear association
  }
}

}  // namespace

FeatureRanking rfe_rank(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                        RegressorKind estimator, const RegressorParams& params, std::size_t step,
                        std::uint64_t seed) {
  if (x.cols() < 2) throw Error(ErrorCode::InvalidArgument, "RFE needs at least 2 features");
  if (static_cast<std::size_t>(x.cols()) != names.size())
    throw Error(ErrorCode::InvalidArgument, "feature names do not match the column count");
  if (step == 0) throw Error(ErrorCode::InvalidArgument, "RFE step must be positive");
  const Eigen::MatrixXd xs = Scaler::fit(x).transform(x);

  std::vector<std::vector<std::size_t>> perms;
  if (estimator == RegressorKind::Svr) {
    for (std::size_t r = 0; r < params.permutation_repeats; ++r) {
      std::vector<std::size_t> p(static_cast<std::size_t>(x.rows()));
      std::iota(p.begin(), p.end(), 0);
      Rng rng(seed * 1000003ULL + r);
      rng.shuffle(p);
      perms.push_back(std::move(p));
    }
  }

  std::vector<std::size_t> alive(static_cast<std::size_t>(x.cols()));
  std::iota(alive.begin(), alive.end(), 0);
  std::vector<std::size_t> eliminated;
  FeatureRanking ranking;

  while (alive.size() > 1) {
    const Eigen::MatrixXd xa = select_columns(xs, alive);
    std::vector<double> imp(alive.size());
    if (estimator == RegressorKind::Ridge) {
      const auto m = ridge_fit(xa, y, params.alpha);
      for (std::size_t j = 0; j < alive.size(); ++j) imp[j] = std::abs(m.coefficients(j));
    } else {
      const auto m = svr_fit(xa, y, params.svr);
      const double base = fit_pcc(m.predict(xa), y);
      for (std::size_t j = 0; j < alive.size(); ++j) {
        double drop = 0.0;
        for (const auto& p : perms) {
          Eigen::MatrixXd xp = xa;
          for (Eigen::Index r = 0; r < xa.rows(); ++r) xp(r, j) = xa(p[r], j);
          drop += base - fit_pcc(m.predict(xp), y);
        }
        imp[j] = perms.empty() ? 0.0 : drop / static_cast<double>(perms.size());
      }
    }

    // Importances equal to ~1e-9 relative are ties, settled by feature index.
    const double top = std::max(*std::max_element(imp.begin(), imp.end()), 0.0);
    std::vector<long long> level(alive.size());
    for (std::size_t j = 0; j < alive.size(); ++j) level[j] = top > 0 ? std::llround(imp[j] / top * 1e9) : 0;
    std::vector<std::size_t> order(alive.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (level[a] != level[b]) return level[a] < level[b];
      return alive[a] > alive[b];
    });

    FeatureRanking::Round round;
    for (std::size_t j = 0; j < alive.size(); ++j) {
      round.features.push_back(names[alive[j]]);
      round.importance.push_back(imp[j]);
    }
    const std::size_t remove = std::min(step, alive.size() - 1);
    std::vector<bool> drop(alive.size(), false);
    for (std::size_t k = 0; k < remove; ++k) {
      drop[order[k]] = true;
      eliminated.push_back(alive[order[k]]);
      round.removed.push_back(names[alive[order[k]]]);
    }
    ranking.rounds.push_back(std::move(round));
    std::vector<std::size_t> next;
    for (std::size_t j = 0; j < alive.size(); ++j)
      if (!drop[j]) next.push_back(alive[j]);
    alive = std::move(next);
  }
  ranking.names.push_back(names[alive.front()]);
  for (auto it = eliminated.rbegin(); it != eliminated.rend(); ++it) ranking.names.push_back(names[*it]);
  return ranking;
}

// ---------------------------------------------------------------- folds

std::vector<Fold> group_kfold(const std::vector<std::string>& groups, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 folds");
  const std::set<std::string> unique_set(groups.begin(), groups.end());
  std::vector<std::string> unique(unique_set.begin(), unique_set.end());
  if (unique.size() < folds)
    throw Error(ErrorCode::TooFewGroups, std::to_string(unique.size()) + " groups cannot fill " +
                                             std::to_string(folds) + " folds");
  Rng rng(seed);
  rng.shuffle(unique);
  std::map<std::string, std::size_t> fold_of;
  for (std::size_t g = 0; g < unique.size(); ++g) fold_of[unique[g]] = g % folds;

  std::vector<Fold> out(folds);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const std::size_t f = fold_of[groups[i]];
    for (std::size_t k = 0; k < folds; ++k) (k == f ? out[k].test : out[k].train).push_back(i);
  }
  return out;
}

}  // namespace pcqkit
