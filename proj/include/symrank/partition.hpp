#ifndef SYMRANK_PARTITION_HPP
#define SYMRANK_PARTITION_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "symrank/core.hpp"

namespace symrank {

/// Relative tolerance under which two losses are reported as tied.
inline constexpr double kLossTieTolerance = 1e-12;

inline bool losses_tie(double a, double b) {
  return std::abs(a - b) <= kLossTieTolerance * std::max({1.0, std::abs(a), std::abs(b)});
}

namespace detail {

inline void check_partition_covers(const Partition2& p, std::size_t n) {
  if (p.left.empty() || p.right.empty()) throw Error(ErrorKind::EmptySide, "both partition sides must be nonempty");
  std::vector<char> seen(n, 0);
  for (const auto* side : {&p.left, &p.right}) {
    for (Index i : *side) {
      if (i >= n || seen[i]) throw Error(ErrorKind::InvalidArgument, "partition is not a 2-partition of 0..n-1");
      seen[i] = 1;
    }
  }
  if (p.left.size() + p.right.size() != n)
    throw Error(ErrorKind::InvalidArgument, "partition does not cover 0..n-1");
}

}  // namespace detail

/// Within-group sum of squares SS(P1) + SS(P2), recomputed from y.
inline double loss(const Partition2& p, std::span<const double> y) {
  detail::check_partition_covers(p, y.size());
  return sse_of(y, p.left) + sse_of(y, p.right);
}

struct FixedSizeOracle {
  enum class Winner { Prefix, Suffix };
  Partition2 prefix;  // left = the i smallest responses
  Partition2 suffix;  // left = the i largest responses
  Winner winner = Winner::Prefix;
  bool tie = false;

  const Partition2& best() const { return winner == Winner::Prefix ? prefix : suffix; }
};

/// The two candidate minimizers of the loss over size-(i, n-i) partitions.
/// Requires n > 4 and min(i, n-i) >= 2. Exact ties report the prefix.
inline FixedSizeOracle oracle_fixed_size(std::span<const double> y, std::size_t i) {
  const std::size_t n = y.size();
  if (n <= 4 || i < 2 || n < i + 2)
    throw Error(ErrorKind::SizeOutOfRange,
                "need n > 4 and min(i, n-i) >= 2 (n=" + std::to_string(n) + ", i=" + std::to_string(i) + ")");
  const auto order = argsort(y);
  FixedSizeOracle out;
  out.prefix = make_partition(y, IndexSet(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(i)));
  out.suffix = make_partition(y, IndexSet(order.end() - static_cast<std::ptrdiff_t>(i), order.end()));
  const double lp = out.prefix.loss();
  const double ls = out.suffix.loss();
  out.tie = losses_tie(lp, ls);
  out.winner = (out.tie || lp < ls) ? FixedSizeOracle::Winner::Prefix : FixedSizeOracle::Winner::Suffix;
  return out;
}

inline constexpr std::size_t kBruteForceLimit = 16;

/// Exhaustive minimizer over all size-(i, n-i) partitions. Among losses tied
/// within tolerance the lexicographically first left set wins.
inline Partition2 brute_force_best_2partition(std::span<const double> y, std::size_t i) {
  const std::size_t n = y.size();
  if (n > kBruteForceLimit)
    throw Error(ErrorKind::TooLarge, "brute force is limited to n <= " + std::to_string(kBruteForceLimit));
  if (i < 1 || i >= n) throw Error(ErrorKind::SizeOutOfRange, "need 1 <= i < n");

  std::vector<Index> pick(i);
  std::iota(pick.begin(), pick.end(), Index{0});
  IndexSet best_left;
  double best_loss = 0.0;
  for (;;) {
    std::vector<char> in_left(n, 0);
    for (Index k : pick) in_left[k] = 1;
    IndexSet right;
    right.reserve(n - i);
    for (Index k = 0; k < n; ++k)
      if (!in_left[k]) right.push_back(k);
    const double l = sse_of(y, pick) + sse_of(y, right);
    if (best_left.empty() || (l < best_loss && !losses_tie(l, best_loss))) {
      best_left = pick;
      best_loss = l;
    }
    // next combination in lexicographic order
    std::size_t pos = i;
    while (pos > 0 && pick[pos - 1] == n - i + pos - 1) --pos;
    if (pos == 0) break;
    ++pick[pos - 1];
    for (std::size_t k = pos; k < i; ++k) pick[k] = pick[k - 1] + 1;
  }
  return make_partition(y, best_left);
}

struct VaryingSizeOracle {
  std::size_t split = 0;  // size of the lower group
  Partition2 partition;   // left = the `split` smallest responses
};

/// Best contiguous split of the sorted responses over all sizes 1..n-1.
/// Ties resolve to the smallest split size.
inline VaryingSizeOracle oracle_varying_size(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n <= 4) throw Error(ErrorKind::TooSmall, "need n > 4");
  const auto order = argsort(y);
  VaryingSizeOracle best;
  double best_loss = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    std::span<const Index> lower(order.data(), i);
    std::span<const Index> upper(order.data() + i, n - i);
    const double l = sse_of(y, lower) + sse_of(y, upper);
    if (best.split == 0 || (l < best_loss && !losses_tie(l, best_loss))) {
      best.split = i;
      best_loss = l;
    }
  }
  best.partition = make_partition(y, IndexSet(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best.split)));
  return best;
}

/// The partition with a (from the left side) and b (from the right side) exchanged.
inline Partition2 swapped(const Partition2& p, std::span<const double> y, Index a, Index b) {
  detail::check_partition_covers(p, y.size());
  if (!std::binary_search(p.left.begin(), p.left.end(), a) || !std::binary_search(p.right.begin(), p.right.end(), b))
    throw Error(ErrorKind::MembershipViolation, "swap needs a in the left side and b in the right side");
  IndexSet left = p.left;
  *std::lower_bound(left.begin(), left.end(), a) = b;
  return make_partition(y, std::move(left));
}

/// loss(P) - loss(P with a and b exchanged); positive when the swap helps.
inline double swap_gain(std::span<const double> y, const Partition2& p, Index a, Index b) {
  const Partition2 q = swapped(p, y, a, b);
  return loss(p, y) - loss(q, y);
}

}  // namespace symrank

#endif  // SYMRANK_PARTITION_HPP
