#ifndef SYMRANK_TREE_HPP
#define SYMRANK_TREE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <numeric>
#include <random>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "symrank/core.hpp"
#include "symrank/partition.hpp"

namespace symrank {

/// Send rows with z[coordinate] <= threshold left, the rest right.
struct SplitRule {
  Index coordinate = 0;
  double threshold = 0.0;

  bool operator==(const SplitRule&) const = default;
};

struct SplitResult {
  SplitRule rule;
  double loss = 0.0;
  IndexSet left;
  IndexSet right;
};

/// Child means for a left index set over the node 0..n-1.
inline std::pair<double, double> split_means(std::span<const double> y, std::span<const Index> left) {
  const Partition2 p = make_partition(y, IndexSet(left.begin(), left.end()));
  return {p.mean_left, p.mean_right};
}

namespace detail {

inline IndexSet all_rows(std::size_t n) {
  IndexSet rows(n);
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

inline void require_rule_admissible(const Matrix& z, std::span<const Index> node, const SplitRule& rule) {
  if (rule.coordinate >= z.cols())
    throw Error(ErrorKind::InadmissibleRule, "coordinate " + std::to_string(rule.coordinate) + " out of range");
  bool observed = false;
  bool has_right = false;
  for (Index r : node) {
    const double v = z(r, rule.coordinate);
    observed = observed || v == rule.threshold;
    has_right = has_right || v > rule.threshold;
  }
  if (!observed) throw Error(ErrorKind::InadmissibleRule, "threshold is not an observed value in the node");
  if (!has_right) throw Error(ErrorKind::InadmissibleRule, "threshold leaves the right child empty");
}

inline std::pair<IndexSet, IndexSet> apply_rule(const Matrix& z, std::span<const Index> node, const SplitRule& rule) {
  IndexSet left, right;
  for (Index r : node) (z(r, rule.coordinate) <= rule.threshold ? left : right).push_back(r);
  return {std::move(left), std::move(right)};
}

}  // namespace detail

/// Two-sided CART loss of `rule` on the rows `node`.
inline double split_loss(const Matrix& z, std::span<const double> y, std::span<const Index> node, const SplitRule& rule) {
  detail::require_rule_admissible(z, node, rule);
  auto [left, right] = detail::apply_rule(z, node, rule);
  return sse_of(y, left) + sse_of(y, right);
}

inline double split_loss(const Matrix& z, std::span<const double> y, const SplitRule& rule) {
  const auto rows = detail::all_rows(y.size());
  return split_loss(z, y, rows, rule);
}

/// Exhaustive CART search over coordinates and observed thresholds (node max
/// excluded). Each child keeps at least `min_leaf` rows. Ties go to the
/// smaller coordinate, then the smaller threshold.
inline SplitResult best_split(const Matrix& z, std::span<const double> y, std::span<const Index> node,
                              std::size_t min_leaf = 1) {
  if (z.rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "z and y row counts differ");
  const std::size_t m = node.size();
  if (m < 2) throw Error(ErrorKind::Unsplittable, "node has fewer than 2 samples");
  min_leaf = std::max<std::size_t>(min_leaf, 1);

  double node_mean = 0.0;
  for (Index r : node) node_mean += y[r];
  node_mean /= static_cast<double>(m);
  bool constant = true;
  for (Index r : node) constant = constant && y[r] == y[node.front()];
  if (constant) throw Error(ErrorKind::Unsplittable, "response is constant in the node");

  double total_s = 0.0, total_q = 0.0;
  for (Index r : node) {
    const double c = y[r] - node_mean;
    total_s += c;
    total_q += c * c;
  }

  std::optional<SplitRule> best;
  double best_loss = 0.0;
  std::vector<Index> order(node.begin(), node.end());
  for (Index k = 0; k < z.cols(); ++k) {
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return z(a, k) < z(b, k); });
    double s = 0.0, q = 0.0;
    for (std::size_t p = 0; p + 1 < m; ++p) {
      const double c = y[order[p]] - node_mean;
      s += c;
      q += c * c;
      const double here = z(order[p], k);
      if (!(here < z(order[p + 1], k))) continue;
      const std::size_t nl = p + 1, nr = m - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      const double sr = total_s - s, qr = total_q - q;
      const double l = (q - s * s / static_cast<double>(nl)) + (qr - sr * sr / static_cast<double>(nr));
      if (!best || (l < best_loss && !losses_tie(l, best_loss))) {
        best = SplitRule{k, here};
        best_loss = l;
      }
    }
  }
  if (!best) throw Error(ErrorKind::Unsplittable, "no admissible threshold in the node");

  SplitResult out;
  out.rule = *best;
  std::tie(out.left, out.right) = detail::apply_rule(z, node, out.rule);
  out.loss = sse_of(y, out.left) + sse_of(y, out.right);
  return out;
}

inline SplitResult best_split(const Matrix& z, std::span<const double> y, std::size_t min_leaf = 1) {
  const auto rows = detail::all_rows(y.size());
  return best_split(z, y, rows, min_leaf);
}

/// log tau = loss(rule2) - loss(rule1) under unit error variance; positive
/// when rule1 fits the node better.
inline double log_principal_decision_ratio(const Matrix& z, std::span<const double> y, std::span<const Index> node,
                                           const SplitRule& rule1, const SplitRule& rule2) {
  return split_loss(z, y, node, rule2) - split_loss(z, y, node, rule1);
}

inline double log_principal_decision_ratio(const Matrix& z, std::span<const double> y, const SplitRule& rule1,
                                           const SplitRule& rule2) {
  const auto rows = detail::all_rows(y.size());
  return log_principal_decision_ratio(z, y, rows, rule1, rule2);
}

struct TreeNode {
  IndexSet samples;  // rows enclosed; empty for trees loaded from disk
  std::optional<SplitRule> rule;
  std::size_t left = 0;
  std::size_t right = 0;
  double mean = 0.0;  // sample mean of enclosed responses
  std::size_t depth = 0;

  bool is_leaf() const noexcept { return !rule.has_value(); }
};

/// Binary regression tree stored in depth-first (pre-order) node order.
class Tree {
 public:
  Tree() = default;
  Tree(std::vector<TreeNode> nodes, std::size_t n_features) : nodes_(std::move(nodes)), n_features_(n_features) {}

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }
  std::size_t n_features() const noexcept { return n_features_; }

  double predict(std::span<const double> row) const {
    if (row.size() != n_features_)
      throw Error(ErrorKind::ColumnMismatch, "row has " + std::to_string(row.size()) + " columns, tree expects " +
                                                 std::to_string(n_features_));
    const TreeNode* n = &nodes_.front();
    while (!n->is_leaf()) n = &nodes_[row[n->rule->coordinate] <= n->rule->threshold ? n->left : n->right];
    return n->mean;
  }

  std::vector<double> predict(const Matrix& z) const {
    if (z.cols() != n_features_) throw Error(ErrorKind::ColumnMismatch, "column count differs from training data");
    std::vector<double> out(z.rows());
    for (std::size_t r = 0; r < z.rows(); ++r) out[r] = predict(z.row(r));
    return out;
  }

  std::vector<std::size_t> leaves() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].is_leaf()) out.push_back(i);
    return out;
  }

  /// Number of internal splits on each feature column.
  std::vector<std::size_t> split_counts() const {
    std::vector<std::size_t> counts(n_features_, 0);
    for (const auto& n : nodes_)
      if (n.rule) ++counts[n.rule->coordinate];
    return counts;
  }

  std::size_t max_depth() const {
    std::size_t d = 0;
    for (const auto& n : nodes_) d = std::max(d, n.depth);
    return d;
  }

 private:
  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
};

namespace detail {

inline std::size_t grow_node(std::vector<TreeNode>& nodes, const Matrix& z, std::span<const double> y, IndexSet rows,
                             std::size_t depth, std::size_t max_depth, std::size_t min_leaf) {
  const std::size_t id = nodes.size();
  nodes.push_back(TreeNode{});
  nodes[id].mean = mean_of(y, rows);
  nodes[id].depth = depth;
  std::optional<SplitResult> split;
  if (depth < max_depth && rows.size() >= 2 * min_leaf) {
    try {
      split = best_split(z, y, rows, min_leaf);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Unsplittable) throw;
    }
  }
  nodes[id].samples = std::move(rows);
  if (!split) return id;
  nodes[id].rule = split->rule;
  const std::size_t l = grow_node(nodes, z, y, std::move(split->left), depth + 1, max_depth, min_leaf);
  nodes[id].left = l;
  const std::size_t r = grow_node(nodes, z, y, std::move(split->right), depth + 1, max_depth, min_leaf);
  nodes[id].right = r;
  return id;
}

}  // namespace detail

/// CART growth to depth K. Nodes smaller than 2*min_leaf, or with no
/// admissible split, become leaves.
inline Tree grow_tree(const Matrix& z, std::span<const double> y, std::size_t depth, std::size_t min_leaf = 1) {
  if (z.rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "z and y row counts differ");
  if (y.empty()) throw Error(ErrorKind::DimensionMismatch, "cannot grow a tree on zero rows");
  min_leaf = std::max<std::size_t>(min_leaf, 1);
  std::vector<TreeNode> nodes;
  detail::grow_node(nodes, z, y, detail::all_rows(y.size()), 0, depth, min_leaf);
  return Tree(std::move(nodes), z.cols());
}

/// Rows ordered by predicted score, highest first; equal scores keep row order.
inline RankPermutation induced_permutation(const Tree& tree, const Matrix& z) {
  const auto scores = tree.predict(z);
  std::vector<Index> order(scores.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores[a] > scores[b]; });
  return RankPermutation{std::move(order)};
}

struct EnsembleOptions {
  std::size_t n_trees = 50;
  std::size_t depth = 3;
  std::size_t min_leaf = 1;
  bool bootstrap = true;
};

/// Fraction of internal splits that use each column, pooled over trees grown
/// on bootstrap resamples. Tree t draws from the stream derive_seed(seed, t).
inline std::vector<double> ensemble_importance(const Matrix& z, std::span<const double> y, const EnsembleOptions& opt,
                                               std::uint64_t seed) {
  if (z.rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "z and y row counts differ");
  if (opt.n_trees < 1) throw Error(ErrorKind::InvalidArgument, "n_trees must be >= 1");
  const std::size_t n = y.size();
  std::vector<std::vector<std::size_t>> per_tree(opt.n_trees);
  parallel_for(opt.n_trees, [&](std::size_t t) {
    if (!opt.bootstrap) {
      per_tree[t] = grow_tree(z, y, opt.depth, opt.min_leaf).split_counts();
      return;
    }
    std::mt19937_64 rng(derive_seed(seed, t));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    Matrix zb(n, z.cols());
    std::vector<double> yb(n);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t src = pick(rng);
      for (std::size_t c = 0; c < z.cols(); ++c) zb(r, c) = z(src, c);
      yb[r] = y[src];
    }
    per_tree[t] = grow_tree(zb, yb, opt.depth, opt.min_leaf).split_counts();
  });
  std::vector<double> freq(z.cols(), 0.0);
  double total = 0.0;
  for (const auto& counts : per_tree)
    for (std::size_t c = 0; c < counts.size(); ++c) {
      freq[c] += static_cast<double>(counts[c]);
      total += static_cast<double>(counts[c]);
    }
  if (total > 0)
    for (double& f : freq) f /= total;
  return freq;
}

}  // namespace symrank

#endif  // SYMRANK_TREE_HPP
