#ifndef SYMRANK_IO_HPP
#define SYMRANK_IO_HPP

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "symrank/core.hpp"
#include "symrank/expression.hpp"
#include "symrank/monotonic.hpp"
#include "symrank/symgen.hpp"
#include "symrank/tree.hpp"

namespace symrank {

using Json = nlohmann::json;

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column_index(std::string_view name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    throw Error(ErrorKind::InvalidArgument, "no column named '" + std::string(name) + "'");
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

/// Comma-separated numeric table with a header row. Blank lines are skipped.
inline CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    ++data_row;
    const std::string where = "row " + std::to_string(data_row) + " (line " + std::to_string(line_no) + ")";
    if (fields.size() != t.header.size())
      throw Error(ErrorKind::ParseError, where + ": expected " + std::to_string(t.header.size()) + " fields, found " +
                                             std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string& f = fields[c];
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(f.c_str(), &end);
      if (f.empty() || end != f.c_str() + f.size() || errno == ERANGE || !std::isfinite(v))
        throw Error(ErrorKind::ParseError, where + ", column '" + t.header[c] + "': '" + f + "' is not a finite number");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw Error(ErrorKind::ParseError, "empty CSV input");
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path + "'");
  return parse_csv(in);
}

/// Dataset from a table. The response is `response` if given, else a column
/// named "y", else the last column.
inline Dataset dataset_from_csv(const CsvTable& t, const std::string& response = "") {
  if (t.header.size() < 2) throw Error(ErrorKind::ParseError, "need at least one feature column and a response");
  if (t.rows.empty()) throw Error(ErrorKind::ParseError, "CSV has no data rows");
  std::size_t yc = t.header.size() - 1;
  if (!response.empty()) yc = t.column_index(response);
  else
    for (std::size_t c = 0; c < t.header.size(); ++c)
      if (t.header[c] == "y") yc = c;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (c != yc) names.push_back(t.header[c]);
  Matrix x(t.rows.size(), names.size());
  std::vector<double> y(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::size_t k = 0;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (c == yc) y[r] = t.rows[r][c];
      else x(r, k++) = t.rows[r][c];
    }
  }
  return build_dataset(std::move(x), std::move(y), std::move(names));
}

/// Writes doubles with 17 significant digits.
inline void write_csv(std::ostream& out, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  char buf[40];
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[c]);
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
}

inline Json tree_to_json(const Tree& tree, const std::vector<std::string>& feature_names = {}) {
  Json nodes = Json::array();
  for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
    const auto& n = tree.nodes()[i];
    Json j{{"id", i}, {"depth", n.depth}, {"mean", n.mean}};
    if (n.rule) {
      j["coordinate"] = n.rule->coordinate;
      j["threshold"] = n.rule->threshold;
      j["left"] = n.left;
      j["right"] = n.right;
    }
    nodes.push_back(std::move(j));
  }
  Json out{{"n_features", tree.n_features()}, {"nodes", std::move(nodes)}};
  if (!feature_names.empty()) out["feature_names"] = feature_names;
  return out;
}

inline Tree tree_from_json(const Json& j) {
  try {
    const std::size_t d = j.at("n_features").get<std::size_t>();
    const auto& arr = j.at("nodes");
    if (!arr.is_array() || arr.empty()) throw Error(ErrorKind::ParseError, "tree needs a nonempty node array");
    std::vector<TreeNode> nodes(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto& e = arr[i];
      auto& n = nodes[i];
      n.mean = e.at("mean").get<double>();
      n.depth = e.value("depth", std::size_t{0});
      if (e.contains("coordinate")) {
        n.rule = SplitRule{e.at("coordinate").get<Index>(), e.at("threshold").get<double>()};
        n.left = e.at("left").get<std::size_t>();
        n.right = e.at("right").get<std::size_t>();
        if (n.rule->coordinate >= d) throw Error(ErrorKind::ParseError, "node coordinate out of range");
        if (n.left <= i || n.right <= i || n.left >= arr.size() || n.right >= arr.size())
          throw Error(ErrorKind::ParseError, "child indices must follow their parent in pre-order");
      }
    }
    return Tree(std::move(nodes), d);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed tree JSON: ") + e.what());
  }
}

inline Direction parse_direction(const std::string& s) {
  if (s == "increasing" || s == "inc" || s == "+") return Direction::Increasing;
  if (s == "decreasing" || s == "dec" || s == "-") return Direction::Decreasing;
  throw Error(ErrorKind::ParseError, "direction must be 'increasing' or 'decreasing', got '" + s + "'");
}

/// {"domain": [lo, hi], "breakpoints": [...], "segments": [{"expr", "direction"}]}
inline PiecewiseMonotone piecewise_from_json(const Json& j) {
  try {
    const auto dom = j.at("domain").get<std::vector<double>>();
    if (dom.size() != 2) throw Error(ErrorKind::ParseError, "domain must be [lo, hi]");
    const auto bps = j.value("breakpoints", std::vector<double>{});
    std::vector<MonotoneSegment> segs;
    for (const auto& s : j.at("segments"))
      segs.push_back({parse_expression(s.at("expr").get<std::string>()),
                      parse_direction(s.at("direction").get<std::string>())});
    return PiecewiseMonotone::make(Interval::make(dom[0], dom[1]), bps, std::move(segs));
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed piecewise map: ") + e.what());
  }
}

inline Json piecewise_to_json(const PiecewiseMonotone& t) {
  Json segs = Json::array();
  for (const auto& s : t.segments()) segs.push_back({{"expr", s.expr.display()}, {"direction", to_string(s.direction)}});
  return Json{{"domain", {t.domain().lo, t.domain().hi}}, {"breakpoints", t.breakpoints()}, {"segments", segs}};
}

/// {"kind": "uniform", "lo", "hi"} or {"kind": "tabulated", "knots": [[x, p], ...]}.
inline Measure measure_from_json(const Json& j) {
  try {
    const auto kind = j.value("kind", std::string("uniform"));
    if (kind == "uniform") return Measure::uniform(j.value("lo", 0.0), j.value("hi", 1.0));
    if (kind == "tabulated") return Measure::tabulated(j.at("knots").get<std::vector<std::pair<double, double>>>());
    throw Error(ErrorKind::ParseError, "unknown measure kind '" + kind + "'");
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed measure: ") + e.what());
  }
}

/// {"unary": ["id", "cube", {"name": "sin", "a": 4, "b": 0.2}], "binary": ["+", "*"]}
inline OperatorSet operators_from_json(const Json& j) {
  try {
    std::vector<UnaryEntry> unary;
    for (const auto& u : j.value("unary", Json::array({"id", "cube"}))) {
      if (u.is_string()) {
        unary.push_back({u.get<std::string>()});
        continue;
      }
      UnaryEntry e{u.at("name").get<std::string>()};
      if (u.contains("a")) e.a = u.at("a").get<double>();
      if (u.contains("b")) e.b = u.at("b").get<double>();
      unary.push_back(std::move(e));
    }
    const auto binary = j.value("binary", std::vector<std::string>{"+", "*"});
    return OperatorSet::make(std::move(unary), binary);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed operator set: ") + e.what());
  }
}

inline Json operators_to_json(const OperatorSet& ops) {
  Json unary = Json::array();
  for (const auto& u : ops.unary()) {
    if (!u.a && !u.b) {
      unary.push_back(u.name);
      continue;
    }
    Json e{{"name", u.name}};
    if (u.a) e["a"] = *u.a;
    if (u.b) e["b"] = *u.b;
    unary.push_back(std::move(e));
  }
  return Json{{"unary", unary}, {"binary", ops.binary()}};
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, "'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace symrank

#endif  // SYMRANK_IO_HPP
