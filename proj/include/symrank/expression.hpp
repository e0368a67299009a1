#ifndef SYMRANK_EXPRESSION_HPP
#define SYMRANK_EXPRESSION_HPP

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "symrank/core.hpp"

namespace symrank {

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
  return std::string(buf, ptr);
}

struct UnaryOperator {
  std::string name;
  std::function<double(double)> fn;
  bool partial = false;  // may produce non-finite values on parts of the real line
};

struct BinaryOperator {
  std::string symbol;
  std::function<double(double, double)> fn;
  bool commutative = true;
  bool partial = false;
};

/// Registered operator table. Names resolve through aliases to one canonical spelling.
class OperatorTable {
 public:
  static const OperatorTable& builtin() {
    static const OperatorTable table = [] {
      OperatorTable t;
      t.add_unary({"id", [](double v) { return v; }});
      t.add_unary({"cube", [](double v) { return v * v * v; }});
      t.add_unary({"square", [](double v) { return v * v; }});
      t.add_unary({"sin", [](double v) { return std::sin(v); }});
      t.add_unary({"cos", [](double v) { return std::cos(v); }});
      t.add_unary({"exp", [](double v) { return std::exp(v); }});
      t.add_unary({"log", [](double v) { return std::log(v); }, true});
      t.add_unary({"sqrt", [](double v) { return std::sqrt(v); }, true});
      t.add_unary({"abs", [](double v) { return std::abs(v); }});
      t.add_unary({"neg", [](double v) { return -v; }});
      t.add_binary({"+", [](double a, double b) { return a + b; }, true});
      t.add_binary({"-", [](double a, double b) { return a - b; }, false});
      t.add_binary({"*", [](double a, double b) { return a * b; }, true});
      t.add_binary({"/", [](double a, double b) { return a / b; }, false, true});
      t.add_binary({"^", [](double a, double b) { return std::pow(a, b); }, false, true});
      t.alias("identity", "id");
      t.alias("x^3", "cube");
      t.alias("x3", "cube");
      t.alias("x^2", "square");
      t.alias("x2", "square");
      t.alias("plus", "+");
      t.alias("minus", "-");
      t.alias("times", "*");
      t.alias("x", "*");
      t.alias("×", "*");
      t.alias("div", "/");
      t.alias("pow", "^");
      return t;
    }();
    return table;
  }

  const UnaryOperator* find_unary(std::string_view name) const {
    auto it = unary_.find(resolve(name));
    return it == unary_.end() ? nullptr : &it->second;
  }
  const BinaryOperator* find_binary(std::string_view symbol) const {
    auto it = binary_.find(resolve(symbol));
    return it == binary_.end() ? nullptr : &it->second;
  }
  const UnaryOperator& unary(std::string_view name) const {
    if (auto* op = find_unary(name)) return *op;
    throw Error(ErrorKind::UnknownOperator, "unknown unary operator '" + std::string(name) + "'");
  }
  const BinaryOperator& binary(std::string_view symbol) const {
    if (auto* op = find_binary(symbol)) return *op;
    throw Error(ErrorKind::UnknownOperator, "unknown binary operator '" + std::string(symbol) + "'");
  }

 private:
  void add_unary(UnaryOperator op) { unary_.emplace(op.name, std::move(op)); }
  void add_binary(BinaryOperator op) { binary_.emplace(op.symbol, std::move(op)); }
  void alias(std::string from, std::string to) { aliases_.emplace(std::move(from), std::move(to)); }
  std::string resolve(std::string_view name) const {
    auto it = aliases_.find(std::string(name));
    return it == aliases_.end() ? std::string(name) : it->second;
  }

  std::map<std::string, UnaryOperator, std::less<>> unary_;
  std::map<std::string, BinaryOperator, std::less<>> binary_;
  std::map<std::string, std::string, std::less<>> aliases_;
};

/// Immutable expression tree over input columns. Commutative operands are
/// stored in canonical order and unary `id` collapses to its operand, so two
/// expressions are the same feature iff their canonical strings match.
class Expression {
 public:
  enum class Kind { Variable, Constant, Unary, Binary };

  static Expression variable(Index column) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Variable;
    n->column = column;
    n->canonical = "x" + std::to_string(column + 1);
    n->vars = {column};
    return Expression(std::move(n));
  }

  static Expression constant(double value) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Constant;
    n->value = value;
    n->canonical = format_number(value);
    return Expression(std::move(n));
  }

  static Expression unary(std::string_view name, const Expression& child) {
    const auto& op = OperatorTable::builtin().unary(name);
    if (op.name == "id") return child;
    auto n = std::make_shared<Node>();
    n->kind = Kind::Unary;
    n->op = op.name;
    n->unary_fn = &op;
    n->children = {child};
    n->canonical = op.name + "(" + strip_parens(child.canonical()) + ")";
    n->vars = child.node_->vars;
    n->partial = op.partial || child.node_->partial;
    return Expression(std::move(n));
  }

  static Expression binary(std::string_view symbol, const Expression& lhs, const Expression& rhs) {
    const auto& op = OperatorTable::builtin().binary(symbol);
    auto n = std::make_shared<Node>();
    n->kind = Kind::Binary;
    n->op = op.symbol;
    n->binary_fn = &op;
    n->children = {lhs, rhs};
    if (op.commutative && rhs.canonical() < lhs.canonical()) std::swap(n->children[0], n->children[1]);
    n->canonical = "(" + n->children[0].canonical() + op.symbol + n->children[1].canonical() + ")";
    n->vars = lhs.node_->vars;
    n->vars.insert(rhs.node_->vars.begin(), rhs.node_->vars.end());
    n->partial = op.partial || lhs.node_->partial || rhs.node_->partial;
    return Expression(std::move(n));
  }

  Kind kind() const noexcept { return node_->kind; }
  const std::string& canonical() const noexcept { return node_->canonical; }
  /// Canonical text without the redundant outer parentheses.
  std::string display() const { return strip_parens(node_->canonical); }
  const std::set<Index>& variables() const noexcept { return node_->vars; }
  bool may_be_partial() const noexcept { return node_->partial; }
  Index column() const noexcept { return node_->column; }
  double value() const noexcept { return node_->value; }
  const std::string& op() const noexcept { return node_->op; }
  const std::vector<Expression>& children() const noexcept { return node_->children; }

  /// Returns the same expression rebuilt through the canonicalizing constructors.
  Expression canonicalized() const {
    switch (kind()) {
      case Kind::Variable:
      case Kind::Constant: return *this;
      case Kind::Unary: return unary(op(), children()[0].canonicalized());
      case Kind::Binary: return binary(op(), children()[0].canonicalized(), children()[1].canonicalized());
    }
    return *this;
  }

  double evaluate(std::span<const double> row) const {
    const Node& n = *node_;
    switch (n.kind) {
      case Kind::Variable:
        if (n.column >= row.size())
          throw Error(ErrorKind::DimensionMismatch, "variable " + n.canonical + " not present in input row");
        return row[n.column];
      case Kind::Constant: return n.value;
      case Kind::Unary: return n.unary_fn->fn(n.children[0].evaluate(row));
      case Kind::Binary: return n.binary_fn->fn(n.children[0].evaluate(row), n.children[1].evaluate(row));
    }
    return 0.0;
  }

  /// Univariate convenience: evaluates with x1 = v.
  double operator()(double v) const {
    const double row[1] = {v};
    return evaluate(std::span<const double>(row, 1));
  }

  std::vector<double> evaluate_rows(const Matrix& x) const {
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) out[r] = evaluate(x.row(r));
    return out;
  }

  bool operator==(const Expression& o) const { return canonical() == o.canonical(); }

 private:
  struct Node {
    Kind kind = Kind::Constant;
    Index column = 0;
    double value = 0.0;
    std::string op;
    const UnaryOperator* unary_fn = nullptr;
    const BinaryOperator* binary_fn = nullptr;
    std::vector<Expression> children;
    std::string canonical;
    std::set<Index> vars;
    bool partial = false;
  };

  explicit Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static std::string strip_parens(const std::string& s) {
    if (s.size() < 2 || s.front() != '(' || s.back() != ')') return s;
    int depth = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '(') ++depth;
      if (s[i] == ')') --depth;
      if (depth == 0 && i + 1 < s.size()) return s;  // outer parens do not wrap everything
    }
    return s.substr(1, s.size() - 2);
  }

  std::shared_ptr<const Node> node_;
};

/// Parses infix text such as "sin(4*x+0.2)" or "x1*x3^3". Variables are `x`
/// (first column), `xK` (1-based), or names listed in `column_names`.
class ExpressionParser {
 public:
  explicit ExpressionParser(std::vector<std::string> column_names = {}) : names_(std::move(column_names)) {}

  Expression parse(std::string_view text) {
    text_ = text;
    pos_ = 0;
    Expression e = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  Expression parse_sum() {
    Expression lhs = parse_product();
    for (;;) {
      skip_ws();
      if (accept('+')) lhs = Expression::binary("+", lhs, parse_product());
      else if (accept('-')) lhs = Expression::binary("-", lhs, parse_product());
      else return lhs;
    }
  }

  Expression parse_product() {
    Expression lhs = parse_unary();
    for (;;) {
      skip_ws();
      if (accept('*')) lhs = Expression::binary("*", lhs, parse_unary());
      else if (accept('/')) lhs = Expression::binary("/", lhs, parse_unary());
      else return lhs;
    }
  }

  Expression parse_unary() {
    skip_ws();
    if (accept('-')) {
      Expression inner = parse_unary();
      if (inner.kind() == Expression::Kind::Constant) return Expression::constant(-inner.value());
      return Expression::unary("neg", inner);
    }
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expression parse_power() {
    Expression base = parse_atom();
    skip_ws();
    if (!accept('^')) return base;
    Expression exponent = parse_unary();
    if (exponent.kind() == Expression::Kind::Constant) {
      if (exponent.value() == 1.0) return base;
      if (exponent.value() == 2.0) return Expression::unary("square", base);
      if (exponent.value() == 3.0) return Expression::unary("cube", base);
    }
    return Expression::binary("^", base, exponent);
  }

  Expression parse_atom() {
    skip_ws();
    if (accept('(')) {
      Expression e = parse_sum();
      skip_ws();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
      if (ec != std::errc{}) fail("bad number");
      pos_ = static_cast<std::size_t>(ptr - text_.data());
      return Expression::constant(v);
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    if (start == pos_) fail("expected operand");
    std::string ident(text_.substr(start, pos_ - start));
    skip_ws();
    if (accept('(')) {
      Expression arg = parse_sum();
      skip_ws();
      if (!accept(')')) fail("expected ')' after function argument");
      if (!OperatorTable::builtin().find_unary(ident)) fail("unknown function '" + ident + "'");
      return Expression::unary(ident, arg);
    }
    return Expression::variable(resolve_variable(ident));
  }

  Index resolve_variable(const std::string& ident) {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == ident) return i;
    if (ident == "x") return 0;
    if (ident.size() > 1 && ident[0] == 'x') {
      Index k = 0;
      auto [ptr, ec] = std::from_chars(ident.data() + 1, ident.data() + ident.size(), k);
      if (ec == std::errc{} && ptr == ident.data() + ident.size() && k >= 1) return k - 1;
    }
    fail("unknown variable '" + ident + "'");
    return 0;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::ParseError, msg + " at offset " + std::to_string(pos_) + " in '" + std::string(text_) + "'");
  }

  std::vector<std::string> names_;
  std::string_view text_;
  std::size_t pos_ = 0;
};

inline Expression parse_expression(std::string_view text, std::vector<std::string> column_names = {}) {
  return ExpressionParser(std::move(column_names)).parse(text);
}

}  // namespace symrank

#endif  // SYMRANK_EXPRESSION_HPP
