#ifndef SYMRANK_EVALSEL_HPP
#define SYMRANK_EVALSEL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "symrank/core.hpp"
#include "symrank/expression.hpp"
#include "symrank/stats.hpp"
#include "symrank/symgen.hpp"
#include "symrank/tree.hpp"

namespace symrank {

enum class Method { T0, Pearson, Spearman, Kendall, Chatterjee, TreeImportance };

inline const std::vector<Method>& all_methods() {
  static const std::vector<Method> m = {Method::T0,      Method::Pearson,    Method::Spearman,
                                        Method::Kendall, Method::Chatterjee, Method::TreeImportance};
  return m;
}

inline const char* to_string(Method m) {
  switch (m) {
    case Method::T0: return "t0";
    case Method::Pearson: return "pearson";
    case Method::Spearman: return "spearman";
    case Method::Kendall: return "kendall";
    case Method::Chatterjee: return "chatterjee";
    case Method::TreeImportance: return "tree-importance";
  }
  return "unknown";
}

inline Method parse_method(std::string_view name) {
  for (Method m : all_methods())
    if (name == to_string(m)) return m;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

/// T0 ranks lower-is-better; every other method higher-is-better.
inline bool lower_is_better(Method m) { return m == Method::T0; }

inline double worst_score(Method m) {
  return lower_is_better(m) ? std::numeric_limits<double>::max() : std::numeric_limits<double>::lowest();
}

struct ScoreWarning {
  Index column = 0;
  ErrorKind kind = ErrorKind::ZeroVariance;
  std::string message;
};

struct MethodScore {
  Method method = Method::T0;
  std::vector<double> scores;
  std::vector<ScoreWarning> warnings;

  bool lower_better() const { return lower_is_better(method); }
  /// True when a ranks strictly ahead of b.
  bool better(double a, double b) const { return lower_better() ? a < b : a > b; }
};

struct ScoreOptions {
  EnsembleOptions ensemble;
  std::uint64_t seed = 0;   // tree-importance resampling
  bool record_errors = false;  // statistic errors become worst-sentinel scores instead of throwing
};

/// Per-column score of z against y. Constant columns always get the worst
/// sentinel and a warning.
inline MethodScore score_features(const Matrix& z, std::span<const double> y, Method method,
                                  const ScoreOptions& opt = {}) {
  if (z.rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "feature rows and response length differ");
  const std::size_t q = z.cols();
  MethodScore out;
  out.method = method;
  out.scores.assign(q, worst_score(method));

  std::vector<char> constant(q, 0);
  for (Index c = 0; c < q; ++c) {
    bool same = true;
    for (std::size_t r = 1; r < z.rows() && same; ++r) same = z(r, c) == z(0, c);
    constant[c] = same;
    if (same) out.warnings.push_back({c, ErrorKind::ZeroVariance, "constant column scored as worst"});
  }

  if (method == Method::TreeImportance) {
    const auto imp = ensemble_importance(z, y, opt.ensemble, opt.seed);
    for (Index c = 0; c < q; ++c)
      if (!constant[c]) out.scores[c] = imp[c];
    return out;
  }

  std::vector<std::optional<ScoreWarning>> errors(q);
  parallel_for(q, [&](std::size_t c) {
    if (constant[c]) return;
    const auto u = z.column(c);
    try {
      switch (method) {
        case Method::T0: out.scores[c] = t0_divergence(u, y); break;
        case Method::Pearson: out.scores[c] = std::abs(pearson(u, y)); break;
        case Method::Spearman: out.scores[c] = std::abs(spearman(u, y)); break;
        case Method::Kendall: out.scores[c] = std::abs(kendall_tau(u, y)); break;
        case Method::Chatterjee: out.scores[c] = chatterjee_xi(u, y); break;
        case Method::TreeImportance: break;
      }
    } catch (const Error& e) {
      if (!opt.record_errors) throw;
      errors[c] = ScoreWarning{c, e.kind(), e.what()};
    }
  });
  for (auto& e : errors)
    if (e) out.warnings.push_back(std::move(*e));
  std::sort(out.warnings.begin(), out.warnings.end(),
            [](const ScoreWarning& a, const ScoreWarning& b) { return a.column < b.column; });
  return out;
}

inline MethodScore score_features(const FeatureMatrix& fm, std::span<const double> y, Method method,
                                  const ScoreOptions& opt = {}) {
  return score_features(fm.z, y, method, opt);
}

/// Columns ordered best first; equal scores keep ascending column order.
inline std::vector<Index> rank_columns(const MethodScore& s) {
  std::vector<Index> order(s.scores.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return s.better(s.scores[a], s.scores[b]); });
  return order;
}

/// The k best columns, best first.
inline std::vector<Index> select_top(const MethodScore& s, std::size_t k) {
  if (k > s.scores.size())
    throw Error(ErrorKind::KTooLarge,
                "k=" + std::to_string(k) + " exceeds the " + std::to_string(s.scores.size()) + " scored features");
  auto order = rank_columns(s);
  order.resize(k);
  return order;
}

/// Groups of two or more columns with exactly equal scores, ascending.
inline std::vector<std::vector<Index>> equivalence_classes(const MethodScore& s) {
  std::vector<std::vector<Index>> out;
  const auto order = rank_columns(s);
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && s.scores[order[j + 1]] == s.scores[order[i]]) ++j;
    if (j > i) {
      std::vector<Index> g(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(j + 1));
      std::sort(g.begin(), g.end());
      out.push_back(std::move(g));
    }
    i = j + 1;
  }
  return out;
}

/// True when the k-th and (k+1)-th ranked columns share a score, so the
/// selection boundary was decided by column order.
inline bool selection_boundary_tied(const MethodScore& s, std::size_t k) {
  if (k == 0 || k >= s.scores.size()) return false;
  const auto order = rank_columns(s);
  return s.scores[order[k - 1]] == s.scores[order[k]];
}

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // ascending recall
  double auc = 0.0;
};

/// PR curve of the binarized prediction "top n_selected columns are
/// positive": (0, 1), the operating point, and (1, prevalence), integrated
/// with the trapezoidal rule. Equal-recall points are ordered by descending
/// precision.
inline PrCurve pr_auc(const std::vector<bool>& truth, const MethodScore& s, std::size_t n_selected) {
  if (truth.size() != s.scores.size()) throw Error(ErrorKind::SizeMismatch, "labels and scores differ in length");
  const auto positives = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), true));
  if (positives == 0) throw Error(ErrorKind::NoPositives, "no correct feature among the candidates");
  const auto picked = select_top(s, n_selected);
  std::size_t tp = 0;
  for (Index c : picked) tp += truth[c] ? 1 : 0;
  const double recall = static_cast<double>(tp) / static_cast<double>(positives);
  const double precision = picked.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(picked.size());
  const double prevalence = static_cast<double>(positives) / static_cast<double>(truth.size());

  PrCurve out;
  out.points = {{0.0, 1.0}, {recall, precision}, {1.0, prevalence}};
  std::stable_sort(out.points.begin(), out.points.end(), [](const PrPoint& a, const PrPoint& b) {
    return a.recall < b.recall || (a.recall == b.recall && a.precision > b.precision);
  });
  for (std::size_t i = 1; i < out.points.size(); ++i) {
    const auto& a = out.points[i - 1];
    const auto& b = out.points[i];
    out.auc += (b.recall - a.recall) * 0.5 * (a.precision + b.precision);
  }
  return out;
}

/// Mean over repeats of (#correct selected) / n_selected.
inline double average_inclusion_probability(const std::vector<std::vector<Index>>& selections,
                                            const std::vector<bool>& correct, std::size_t n_selected) {
  if (n_selected == 0) throw Error(ErrorKind::SizeMismatch, "n_selected must be positive");
  if (selections.empty()) throw Error(ErrorKind::SizeMismatch, "no repeats to average");
  double total = 0.0;
  for (std::size_t r = 0; r < selections.size(); ++r) {
    const auto& sel = selections[r];
    if (sel.size() != n_selected)
      throw Error(ErrorKind::SizeMismatch, "repeat " + std::to_string(r) + " selected " + std::to_string(sel.size()) +
                                               " features, expected " + std::to_string(n_selected));
    std::size_t hits = 0;
    for (Index c : sel) {
      if (c >= correct.size()) throw Error(ErrorKind::SizeMismatch, "selected index outside the label vector");
      hits += correct[c] ? 1 : 0;
    }
    total += static_cast<double>(hits) / static_cast<double>(n_selected);
  }
  return total / static_cast<double>(selections.size());
}

/// x ~ U[0,1]^3, y = 2 x1^3 + 5 x3 + 10 + N(0, noise_var).
inline Dataset synth_3var(std::size_t n, double noise_var, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  if (!(noise_var >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise_var must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double sd = std::sqrt(noise_var);
  Matrix x(n, 3);
  std::vector<double> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < 3; ++c) x(r, c) = unif(rng);
    const double e = noise(rng);
    y[r] = 2.0 * x(r, 0) * x(r, 0) * x(r, 0) + 5.0 * x(r, 2) + 10.0 + sd * e;
  }
  return build_dataset(std::move(x), std::move(y));
}

struct CandidateData {
  Dataset data;
  FeatureMatrix features;
};

/// Univariate x ~ N(0,1), y = truth(x) + N(0, noise_var); candidates are
/// evaluated on x.
inline CandidateData synth_candidates(std::size_t n, const Expression& truth, const std::vector<Expression>& candidates,
                                      double noise_var, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  if (!(noise_var >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise_var must be >= 0");
  for (Index v : truth.variables())
    if (v != 0) throw Error(ErrorKind::InvalidArgument, "the true signal must be univariate in x");
  for (const auto& e : candidates)
    for (Index v : e.variables())
      if (v != 0) throw Error(ErrorKind::InvalidArgument, "candidate " + e.display() + " is not univariate in x");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sd = std::sqrt(noise_var);
  Matrix x(n, 1);
  std::vector<double> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    x(r, 0) = gauss(rng);
    const double e = gauss(rng);
    y[r] = truth(x(r, 0)) + sd * e;
  }
  FeatureMatrix fm = evaluate_features(x, candidates, false);
  return {build_dataset(std::move(x), std::move(y)), std::move(fm)};
}

}  // namespace symrank

#endif  // SYMRANK_EVALSEL_HPP
