#ifndef SYMRANK_STATS_HPP
#define SYMRANK_STATS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "symrank/core.hpp"

namespace symrank {

namespace detail {

inline void require_same_length(std::span<const double> u, std::span<const double> y, std::size_t min_n = 2) {
  if (u.size() != y.size())
    throw Error(ErrorKind::LengthMismatch,
                "lengths " + std::to_string(u.size()) + " and " + std::to_string(y.size()) + " differ");
  if (u.size() < min_n) throw Error(ErrorKind::LengthMismatch, "need at least " + std::to_string(min_n) + " observations");
}

inline void require_no_ties(std::span<const double> v, ErrorKind kind, const char* what) {
  if (auto tie = find_tie(v))
    throw Error(kind, std::string(what) + " has tied entries at " + std::to_string(tie->first) + " and " +
                          std::to_string(tie->second));
}

// Fenwick tree over ranks holding counts and sums.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : count_(n + 1, 0), sum_(n + 1, 0.0) {}
  void add(std::size_t rank, double value) {
    for (std::size_t i = rank + 1; i < count_.size(); i += i & (~i + 1)) {
      count_[i] += 1;
      sum_[i] += value;
    }
  }
  // Totals over ranks [0, rank).
  std::pair<std::size_t, double> prefix(std::size_t rank) const {
    std::size_t c = 0;
    double s = 0.0;
    for (std::size_t i = rank; i > 0; i -= i & (~i + 1)) {
      c += count_[i];
      s += sum_[i];
    }
    return {c, s};
  }

 private:
  std::vector<std::size_t> count_;
  std::vector<double> sum_;
};

}  // namespace detail

/// Concordant divergence of a feature column u against the response y,
/// evaluated literally over all ordered pairs. O(n^2).
inline double t0_divergence_reference(std::span<const double> u, std::span<const double> y) {
  detail::require_same_length(u, y);
  detail::require_no_ties(y, ErrorKind::TiesInResponse, "y");
  const std::size_t n = u.size();
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const bool flip = (u[a] >= u[b] && y[a] < y[b]) || (u[a] < u[b] && y[a] >= y[b]);
      if (flip) total += std::abs(y[a] - y[b]);
    }
  }
  return 2.0 * total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

/// Same statistic in O(n log n): walk y upward and, for each point, collect
/// the lower-y points whose feature value is >= (counted once) or > (counted
/// again) its own.
inline double t0_divergence(std::span<const double> u, std::span<const double> y) {
  detail::require_same_length(u, y);
  detail::require_no_ties(y, ErrorKind::TiesInResponse, "y");
  const std::size_t n = u.size();

  double ymean = 0.0;
  for (double v : y) ymean += v;
  ymean /= static_cast<double>(n);

  std::vector<double> sorted_u(u.begin(), u.end());
  std::sort(sorted_u.begin(), sorted_u.end());
  sorted_u.erase(std::unique(sorted_u.begin(), sorted_u.end()), sorted_u.end());
  const std::size_t m = sorted_u.size();
  auto rank_of = [&](double v) {
    return static_cast<std::size_t>(std::lower_bound(sorted_u.begin(), sorted_u.end(), v) - sorted_u.begin());
  };

  detail::Fenwick seen(m);
  std::size_t seen_count = 0;
  double seen_sum = 0.0;
  double total = 0.0;
  for (Index b : argsort(y)) {
    const double yb = y[b] - ymean;
    const std::size_t r = rank_of(u[b]);
    auto [below_cnt, below_sum] = seen.prefix(r);      // u_a < u_b
    auto [upto_cnt, upto_sum] = seen.prefix(r + 1);    // u_a <= u_b
    const std::size_t ge_cnt = seen_count - below_cnt;  // u_a >= u_b
    const double ge_sum = seen_sum - below_sum;
    const std::size_t gt_cnt = seen_count - upto_cnt;   // u_a > u_b
    const double gt_sum = seen_sum - upto_sum;
    // empty groups are skipped so cancellation residue never leaks in
    if (ge_cnt > 0) total += static_cast<double>(ge_cnt) * yb - ge_sum;
    if (gt_cnt > 0) total += static_cast<double>(gt_cnt) * yb - gt_sum;
    seen.add(r, yb);
    ++seen_count;
    seen_sum += yb;
  }
  return std::max(0.0, 2.0 * total / (static_cast<double>(n) * static_cast<double>(n - 1)));
}

/// Kendall's tau-a: (concordant - discordant) / C(n,2); pairs tied in either
/// argument count as neither.
inline double kendall_tau(std::span<const double> u, std::span<const double> y) {
  detail::require_same_length(u, y);
  const std::size_t n = u.size();
  long long score = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double du = u[i] - u[j];
      const double dy = y[i] - y[j];
      if (du == 0.0 || dy == 0.0) continue;
      score += ((du > 0) == (dy > 0)) ? 1 : -1;
    }
  }
  return static_cast<double>(score) / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

inline double pearson(std::span<const double> u, std::span<const double> y) {
  detail::require_same_length(u, y);
  const double n = static_cast<double>(u.size());
  double mu = 0.0, my = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    my += y[i];
  }
  mu /= n;
  my /= n;
  double suu = 0.0, syy = 0.0, suy = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i] - mu;
    const double b = y[i] - my;
    suu += a * a;
    syy += b * b;
    suy += a * b;
  }
  if (suu <= 0.0 || syy <= 0.0) throw Error(ErrorKind::ZeroVariance, "an argument has zero variance");
  return std::clamp(suy / std::sqrt(suu * syy), -1.0, 1.0);
}

/// 1-based ranks with ties receiving the average of their positions.
inline std::vector<double> midranks(std::span<const double> v) {
  const auto order = argsort(v);
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(std::span<const double> u, std::span<const double> y) {
  detail::require_same_length(u, y);
  const auto ru = midranks(u);
  const auto ry = midranks(y);
  return pearson(ru, ry);
}

/// Chatterjee's xi_n, no-ties form: 1 - 3 sum |r_{i+1} - r_i| / (n^2 - 1)
/// with pairs ordered by u.
inline double chatterjee_xi(std::span<const double> u, std::span<const double> y) {
  detail::require_same_length(u, y);
  detail::require_no_ties(u, ErrorKind::TiesPresent, "u");
  detail::require_no_ties(y, ErrorKind::TiesPresent, "y");
  const std::size_t n = u.size();
  std::vector<std::size_t> yrank(n);
  const auto yorder = argsort(y);
  for (std::size_t k = 0; k < n; ++k) yrank[yorder[k]] = k + 1;
  const auto uorder = argsort(u);
  double jumps = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const auto a = static_cast<double>(yrank[uorder[k]]);
    const auto b = static_cast<double>(yrank[uorder[k + 1]]);
    jumps += std::abs(b - a);
  }
  const double nn = static_cast<double>(n);
  return 1.0 - 3.0 * jumps / (nn * nn - 1.0);
}

/// Average pairwise gap of conditional means along the permutation:
/// 2/(N(N-1)) * sum_{i<i'} (mu[j_i] - mu[j_i']).
inline double ranking_metric_T(const RankPermutation& perm, std::span<const double> cond_means) {
  const std::size_t n = cond_means.size();
  if (perm.order.size() != n)
    throw Error(ErrorKind::LengthMismatch, "permutation and conditional means differ in length");
  if (n < 2) throw Error(ErrorKind::LengthMismatch, "need N >= 2");
  // Position i appears with + sign (N-1-i) times and with - sign i times.
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Index j = perm.order[i];
    if (j >= n) throw Error(ErrorKind::InvalidArgument, "permutation index out of range");
    total += cond_means[j] * (static_cast<double>(n - 1 - i) - static_cast<double>(i));
  }
  return 2.0 * total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

/// Sorts conditional means in descending order; equal means keep index order.
inline RankPermutation bayes_permutation(std::span<const double> cond_means) {
  std::vector<Index> order(cond_means.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return cond_means[a] > cond_means[b]; });
  return RankPermutation{std::move(order)};
}

}  // namespace symrank

#endif  // SYMRANK_STATS_HPP
