#include "pcqkit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "pcqkit/error.hpp"
#include "pcqkit/util.hpp"

namespace pcqkit {

double logistic(const std::array<double, 4>& b, double x) {
  return b[0] + (b[1] - b[0]) / (1.0 + std::exp(-b[2] * (x - b[3])));
}

namespace {

using Params = std::array<double, 4>;

struct Simplex {
  Params best{};
  double value = 0.0;
  bool converged = false;
};

Simplex nelder_mead(const std::function<double(const Params&)>& f, const Params& start, const Params& step,
                    int max_iter) {
  constexpr int n = 4;
  std::array<Params, n + 1> pts;
  std::array<double, n + 1> val{};
  pts[0] = start;
  for (int i = 0; i < n; ++i) {
    pts[i + 1] = start;
    pts[i + 1][i] += step[i] != 0.0 ? step[i] : 1e-3;
  }
  for (int i = 0; i <= n; ++i) val[i] = f(pts[i]);

  Simplex out;
  for (int iter = 0; iter < max_iter; ++iter) {
    std::array<int, n + 1> order;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return val[a] < val[b]; });
    const int lo = order[0], hi = order[n], nh = order[n - 1];

    double diameter = 0.0;
    for (int i = 1; i <= n; ++i)
      for (int k = 0; k < n; ++k)
        diameter = std::max(diameter, std::abs(pts[order[i]][k] - pts[lo][k]) / (1.0 + std::abs(pts[lo][k])));
    if (val[hi] - val[lo] <= 1e-15 * std::abs(val[lo]) + 1e-300 && diameter < 1e-9) {
      out.converged = true;
      break;
    }

    Params centroid{};
    for (int i = 0; i <= n; ++i)
      if (i != hi)
        for (int k = 0; k < n; ++k) centroid[k] += pts[i][k] / n;
    auto along = [&](double t) {
      Params p;
      for (int k = 0; k < n; ++k) p[k] = centroid[k] + t * (pts[hi][k] - centroid[k]);
      return p;
    };

    const Params refl = along(-1.0);
    const double f_refl = f(refl);
    if (f_refl < val[lo]) {
      const Params exp = along(-2.0);
      const double f_exp = f(exp);
      if (f_exp < f_refl) {
        pts[hi] = exp;
        val[hi] = f_exp;
      } else {
        pts[hi] = refl;
        val[hi] = f_refl;
      }
    } else if (f_refl < val[nh]) {
      pts[hi] = refl;
      val[hi] = f_refl;
    } else {
      const bool outside = f_refl < val[hi];
      const Params con = along(outside ? -0.5 : 0.5);
      const double f_con = f(con);
      if (f_con < (outside ? f_refl : val[hi])) {
        pts[hi] = con;
        val[hi] = f_con;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == lo) continue;
          for (int k = 0; k < n; ++k) pts[i][k] = pts[lo][k] + 0.5 * (pts[i][k] - pts[lo][k]);
          val[i] = f(pts[i]);
        }
      }
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(val.begin(), val.end()) - val.begin());
  out.best = pts[best];
  out.value = val[best];
  return out;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

LogisticFit logistic_fit(std::span<const double> scores, std::span<const double> mos, int restarts) {
  const std::size_t n = scores.size();
  if (n != mos.size()) throw Error(ErrorCode::InvalidArgument, "scores and MOS differ in length");
  if (n < 5) throw Error(ErrorCode::DegenerateInput, "logistic fit needs at least 5 samples");
  const auto [smin, smax] = std::minmax_element(scores.begin(), scores.end());
  const auto [mmin, mmax] = std::minmax_element(mos.begin(), mos.end());
  const double srange = *smax - *smin;
  if (!(srange > 0)) throw Error(ErrorCode::DegenerateInput, "all scores are equal");
  const double mrange = std::max(*mmax - *mmin, 1e-12);

  auto sse = [&](const Params& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = logistic(b, scores[i]) - mos[i];
      s += r * r;
    }
    return std::isfinite(s) ? s : std::numeric_limits<double>::max();
  };

  double direction = 1.0;
  try {
    direction = spearman(scores, mos) < 0 ? -1.0 : 1.0;
  } catch (const Error&) {
  }
  const Params init{*mmin, *mmax, direction * 4.0 / srange, median_of({scores.begin(), scores.end()})};

  // Best affine fit, written as a logistic in its near-linear regime.
  const double sx = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(mos.begin(), mos.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (scores[i] - sx) * (scores[i] - sx);
    sxy += (scores[i] - sx) * (mos[i] - my);
  }
  const double slope = sxy / sxx;
  const double s3 = 1e-5 / srange;
  const double span_d = 4.0 * slope / s3;
  const Params affine{my - span_d / 2.0, my + span_d / 2.0, s3, sx};

  std::vector<Params> starts{init, affine};
  Rng rng(0x5eed);
  for (int r = 0; r < restarts; ++r) {
    Params p = init;
    p[0] += 0.25 * mrange * rng.normal();
    p[1] += 0.25 * mrange * rng.normal();
    p[2] *= std::exp(rng.normal());
    p[3] = *smin + srange * rng.uniform();
    starts.push_back(p);
  }

  Simplex best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    const bool is_affine = &s == &starts[1];
    Simplex cur{s, sse(s), false};
    // Restarting from the last optimum keeps the simplex from collapsing early.
    for (int round = 0; round < 4; ++round) {
      const Params step = is_affine && round == 0
                              ? Params{1e-3 * mrange, 1e-3 * mrange, 1e-3 * std::abs(cur.best[2]), 1e-3 * srange}
                              : Params{0.1 * mrange, 0.1 * mrange, 0.5 * std::abs(cur.best[2]) + 1e-9 / srange,
                                       0.1 * srange};
      const Simplex next = nelder_mead(sse, cur.best, step, 4000);
      const bool improved = next.value < cur.value;
      if (improved) cur = next;
      cur.converged = next.converged;
      if (!improved || cur.value <= 0.0) break;
    }
    if (cur.value < best.value) best = cur;
  }

  LogisticFit fit;
  fit.beta = best.best;
  fit.converged = best.converged;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fit.fitted.push_back(logistic(fit.beta, scores[i]));
    fit.residuals.push_back(fit.fitted.back() - mos[i]);
    ss += fit.residuals.back() * fit.residuals.back();
  }
  fit.rmse = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw Error(ErrorCode::InvalidArgument, "correlation inputs differ in length");
  if (n == 0) throw Error(ErrorCode::ZeroVariance, "correlation of empty inputs");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0) || !(syy > 0)) throw Error(ErrorCode::ZeroVariance, "correlation input has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

Correlation correlation_stats(std::span<const double> pred, std::span<const double> mos) {
  if (pred.size() < 3) throw Error(ErrorCode::InvalidArgument, "correlation needs at least 3 samples");
  return {pearson(pred, mos), spearman(pred, mos)};
}

namespace {
// Residuals at rounding level are never outliers, even when the fallback
// threshold collapses with a near-zero RMSE.
constexpr double kOutlierFloor = 1e-9;
}  // namespace

ErrorStats error_stats(std::span<const double> fitted, std::span<const double> mos,
                       std::optional<std::span<const double>> mos_std, double multiplier) {
  const std::size_t n = fitted.size();
  if (n != mos.size() || (mos_std && mos_std->size() != n))
    throw Error(ErrorCode::InvalidArgument, "error statistics inputs differ in length");
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "error statistics need at least one sample");
  ErrorStats s;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (fitted[i] - mos[i]) * (fitted[i] - mos[i]);
  s.rmse = std::sqrt(ss / static_cast<double>(n));
  s.or_fallback = !mos_std;
  std::size_t outliers = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double threshold = multiplier * (mos_std ? (*mos_std)[i] : s.rmse);
    if (std::abs(fitted[i] - mos[i]) > threshold + kOutlierFloor) ++outliers;
  }
  s.or_ratio = static_cast<double>(outliers) / static_cast<double>(n);
  return s;
}

// ---------------------------------------------------------------- report

const MetricReport& EvaluationReport::at(const std::string& name) const {
  for (const auto& [k, v] : metrics)
    if (k == name) return v;
  throw Error(ErrorCode::MissingColumn, "report has no metric '" + name + "'");
}

std::string EvaluationReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["config_hash"] = config_hash;
  j["mos_normalized"] = mos_normalized;
  j["metrics"] = nlohmann::ordered_json::object();
  for (const auto& [name, m] : metrics) {
    auto& e = j["metrics"][name];
    e["pcc"] = m.pcc;
    e["srocc"] = m.srocc;
    e["rmse"] = m.rmse;
    e["or"] = m.or_ratio;
    e["beta"] = m.beta;
    e["n"] = m.n;
    e["or_fallback"] = m.or_fallback;
  }
  return j.dump(2) + "\n";
}

EvaluationReport EvaluationReport::from_json(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("report is not valid JSON: ") + e.what());
  }
  if (j.value("schema_version", 0) != 1) throw Error(ErrorCode::SchemaVersion, "unsupported report schema_version");
  EvaluationReport r;
  r.config_hash = j.value("config_hash", "");
  r.mos_normalized = j.value("mos_normalized", false);
  for (const auto& [name, e] : j.at("metrics").items()) {
    MetricReport m;
    m.pcc = e.at("pcc").get<double>();
    m.srocc = e.at("srocc").get<double>();
    m.rmse = e.at("rmse").get<double>();
    m.or_ratio = e.at("or").get<double>();
    m.beta = e.at("beta").get<std::array<double, 4>>();
    m.n = e.at("n").get<std::size_t>();
    m.or_fallback = e.at("or_fallback").get<bool>();
    r.metrics.emplace_back(name, m);
  }
  return r;
}

std::string EvaluationReport::text_table() const {
  std::size_t width = 6;
  for (const auto& [name, m] : metrics) width = std::max(width, name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "Metric" << std::right << std::setw(9) << "PCC"
      << std::setw(9) << "SROCC" << std::setw(9) << "RMSE" << std::setw(9) << "OR" << std::setw(7) << "N" << "\n";
  out << std::string(width + 43, '-') << "\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& [name, m] : metrics) {
    out << std::left << std::setw(static_cast<int>(width)) << name << std::right << std::setw(9) << m.pcc
        << std::setw(9) << m.srocc << std::setw(9) << m.rmse << std::setw(9) << m.or_ratio << std::setw(7) << m.n
        << (m.or_fallback ? "  *" : "") << "\n";
  }
  for (const auto& [name, m] : metrics)
    if (m.or_fallback) {
      out << "* OR threshold is 2 x RMSE (no per-stimulus MOS std)\n";
      break;
    }
  return out.str();
}

EvaluationReport evaluate(const FeatureTable& scores, const DatasetManifest& manifest,
                          const std::vector<std::string>& columns, const EvaluationOptions& options) {
  std::map<std::pair<std::string, std::string>, std::size_t> by_key;
  for (std::size_t i = 0; i < scores.rows.size(); ++i) {
    const auto& r = scores.rows[i];
    if (!by_key.emplace(std::pair{r.ref, r.dist}, i).second)
      throw Error(ErrorCode::JoinMismatch, "score table lists (" + r.ref + ", " + r.dist + ") twice");
  }
  if (scores.rows.size() != manifest.rows.size())
    throw Error(ErrorCode::JoinMismatch, "score table has " + std::to_string(scores.rows.size()) +
                                             " rows but the manifest has " + std::to_string(manifest.rows.size()));

  const std::size_t n = manifest.rows.size();
  std::vector<std::size_t> row_of(n);
  std::vector<double> mos(n);
  std::vector<double> mos_std(n);
  bool have_std = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = manifest.rows[i];
    auto it = by_key.find({m.ref, m.dist});
    if (it == by_key.end())
      throw Error(ErrorCode::JoinMismatch, "manifest row " + std::to_string(i + 1) + " (" + m.ref + ", " + m.dist +
                                               ") has no score");
    row_of[i] = it->second;
    mos[i] = m.mos;
    if (m.mos_std)
      mos_std[i] = *m.mos_std;
    else
      have_std = false;
  }

  EvaluationReport report;
  report.config_hash = scores.config_hash();
  const auto [lo, hi] = std::minmax_element(mos.begin(), mos.end());
  if (options.normalize_mos && n > 0 && *hi > *lo) {
    const double mn = *lo, range = *hi - *lo;
    for (std::size_t i = 0; i < n; ++i) {
      mos[i] = (mos[i] - mn) / range;
      mos_std[i] /= range;
    }
    report.mos_normalized = true;
  }

  const std::vector<std::string> names = columns.empty() ? scores.columns : columns;
  for (const auto& name : names) {
    const std::size_t c = scores.column(name);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = scores.rows[row_of[i]].values[c];
    MetricReport m;
    try {
      const auto fit = logistic_fit(x, mos, options.restarts);
      const auto corr = correlation_stats(fit.fitted, mos);
      const auto err = error_stats(fit.fitted, mos,
                                   have_std ? std::optional<std::span<const double>>(mos_std) : std::nullopt,
                                   options.outlier_multiplier);
      m = {corr.pcc, corr.srocc, err.rmse, err.or_ratio, fit.beta, n, err.or_fallback};
    } catch (const Error& e) {
      throw Error(e.code(), "metric '" + name + "': " + e.detail());
    }
    report.metrics.emplace_back(name, m);
  }
  return report;
}

}  // namespace pcqkit
