#ifndef SYMRANK_SYMGEN_HPP
#define SYMRANK_SYMGEN_HPP

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "symrank/core.hpp"
#include "symrank/expression.hpp"

namespace symrank {

/// Unary layer entry. With parameters it applies name(a*e + b).
struct UnaryEntry {
  std::string name;
  std::optional<double> a{};
  std::optional<double> b{};

  Expression apply(const Expression& e) const {
    if (!a && !b) return Expression::unary(name, e);
    Expression inner = e;
    if (a && *a != 1.0) inner = Expression::binary("*", Expression::constant(*a), inner);
    if (b && *b != 0.0) inner = Expression::binary("+", inner, Expression::constant(*b));
    return Expression::unary(name, inner);
  }

  std::string label() const {
    if (!a && !b) return name;
    return name + "(" + format_number(a.value_or(1.0)) + "*x+" + format_number(b.value_or(0.0)) + ")";
  }
};

class OperatorSet {
 public:
  OperatorSet() = default;

  /// Names are checked against the built-in table and must be unique.
  static OperatorSet make(std::vector<UnaryEntry> unary, std::vector<std::string> binary) {
    const auto& table = OperatorTable::builtin();
    OperatorSet s;
    std::set<std::string> seen;
    for (auto& u : unary) {
      u.name = table.unary(u.name).name;
      if (!seen.insert(u.label()).second) throw Error(ErrorKind::InvalidArgument, "duplicate unary operator " + u.label());
    }
    seen.clear();
    for (auto& b : binary) {
      b = table.binary(b).symbol;
      if (!seen.insert(b).second) throw Error(ErrorKind::InvalidArgument, "duplicate binary operator " + b);
    }
    s.unary_ = std::move(unary);
    s.binary_ = std::move(binary);
    return s;
  }

  /// Unary {id, cube} with binary {+, *}.
  static OperatorSet standard() { return make({{"id"}, {"cube"}}, {"+", "*"}); }

  const std::vector<UnaryEntry>& unary() const noexcept { return unary_; }
  const std::vector<std::string>& binary() const noexcept { return binary_; }

 private:
  std::vector<UnaryEntry> unary_;
  std::vector<std::string> binary_;
};

/// Layer order over {u, b}, applied left to right.
class Architecture {
 public:
  static Architecture parse(std::string order) {
    if (order.empty()) throw Error(ErrorKind::InvalidArgument, "architecture must be nonempty");
    for (char c : order)
      if (c != 'u' && c != 'b')
        throw Error(ErrorKind::InvalidArgument, "architecture '" + order + "' may contain only 'u' and 'b'");
    Architecture a;
    a.order_ = std::move(order);
    return a;
  }

  const std::string& order() const noexcept { return order_; }

 private:
  std::string order_;
};

struct LayerExpansion {
  std::vector<Expression> exprs;  // distinct, in enumeration order
  std::size_t raw_count = 0;      // ordered applications before deduplication
};

namespace detail {

inline void push_distinct(LayerExpansion& out, std::unordered_set<std::string>& seen, Expression e) {
  if (seen.insert(e.canonical()).second) out.exprs.push_back(std::move(e));
}

}  // namespace detail

/// op(e_i, e_j) for every operator; pairs i <= j for commutative operators,
/// all ordered pairs otherwise. raw_count is |ops| * m * m.
inline LayerExpansion expand_binary(const std::vector<Expression>& exprs, const OperatorSet& ops) {
  if (exprs.empty()) throw Error(ErrorKind::InvalidArgument, "expand_binary needs at least one expression");
  const auto& table = OperatorTable::builtin();
  LayerExpansion out;
  std::unordered_set<std::string> seen;
  const std::size_t m = exprs.size();
  for (const auto& sym : ops.binary()) {
    const bool comm = table.binary(sym).commutative;
    out.raw_count += m * m;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = comm ? i : 0; j < m; ++j) detail::push_distinct(out, seen, Expression::binary(sym, exprs[i], exprs[j]));
  }
  return out;
}

inline LayerExpansion expand_unary(const std::vector<Expression>& exprs, const OperatorSet& ops) {
  if (exprs.empty()) throw Error(ErrorKind::InvalidArgument, "expand_unary needs at least one expression");
  LayerExpansion out;
  std::unordered_set<std::string> seen;
  for (const auto& u : ops.unary()) {
    out.raw_count += exprs.size();
    for (const auto& e : exprs) detail::push_distinct(out, seen, u.apply(e));
  }
  return out;
}

struct LayerCount {
  char kind = 'u';
  std::size_t raw = 0;
  std::size_t distinct = 0;
};

struct FeatureWarning {
  ErrorKind kind;
  std::string expression;
  std::string message;
};

struct FeatureMatrix {
  Matrix z;
  std::vector<Expression> exprs;
  std::vector<LayerCount> layers;
  std::vector<bool> constant;          // zero-variance columns (kept)
  std::vector<FeatureWarning> warnings;

  std::size_t size() const noexcept { return exprs.size(); }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(exprs.size());
    for (const auto& e : exprs) out.push_back(e.canonical());
    return out;
  }
};

inline constexpr double kValueDedupTolerance = 1e-12;

/// Evaluates expressions on the rows of x. Columns with any non-finite value
/// are dropped and recorded; later columns equal to an earlier one within
/// 1e-12 are dropped when value_dedup is set.
inline FeatureMatrix evaluate_features(const Matrix& x, const std::vector<Expression>& exprs, bool value_dedup = false) {
  const std::size_t n = x.rows();
  std::vector<std::vector<double>> cols(exprs.size());
  parallel_for(exprs.size(), [&](std::size_t k) { cols[k] = exprs[k].evaluate_rows(x); });

  FeatureMatrix fm;
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < exprs.size(); ++k) {
    bool finite = true;
    for (double v : cols[k]) finite = finite && std::isfinite(v);
    if (!finite) {
      fm.warnings.push_back({ErrorKind::PartialOperatorDomain, exprs[k].canonical(),
                             "non-finite values on the data; column dropped"});
      continue;
    }
    if (value_dedup) {
      bool dup = false;
      for (std::size_t j : keep) {
        bool same = true;
        for (std::size_t r = 0; r < n && same; ++r) same = std::abs(cols[j][r] - cols[k][r]) <= kValueDedupTolerance;
        if (same) {
          dup = true;
          break;
        }
      }
      if (dup) continue;
    }
    keep.push_back(k);
  }

  fm.z = Matrix(n, keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const auto& col = cols[keep[c]];
    bool is_const = true;
    for (std::size_t r = 0; r < n; ++r) {
      fm.z(r, c) = col[r];
      is_const = is_const && col[r] == col[0];
    }
    fm.exprs.push_back(exprs[keep[c]]);
    fm.constant.push_back(is_const);
  }
  return fm;
}

/// Applies the layers of `arch` to the base variables and evaluates the
/// surviving expressions on the dataset.
inline FeatureMatrix generate(const Dataset& ds, const Architecture& arch, const OperatorSet& ops,
                              bool value_dedup = false) {
  std::vector<Expression> exprs;
  for (Index c = 0; c < ds.dims(); ++c) exprs.push_back(Expression::variable(c));
  std::vector<LayerCount> layers;
  for (char step : arch.order()) {
    LayerExpansion next = step == 'b' ? expand_binary(exprs, ops) : expand_unary(exprs, ops);
    layers.push_back({step, next.raw_count, next.exprs.size()});
    exprs = std::move(next.exprs);
  }
  FeatureMatrix fm = evaluate_features(ds.x(), exprs, value_dedup);
  fm.layers = std::move(layers);
  return fm;
}

/// True where every variable of the expression is in `active` (0-based columns).
inline std::vector<bool> label_correct(const std::vector<Expression>& exprs, const std::set<Index>& active) {
  std::vector<bool> out;
  out.reserve(exprs.size());
  for (const auto& e : exprs) {
    bool ok = true;
    for (Index v : e.variables()) ok = ok && active.count(v) > 0;
    out.push_back(ok);
  }
  return out;
}

}  // namespace symrank

#endif  // SYMRANK_SYMGEN_HPP
