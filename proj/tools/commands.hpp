#ifndef SYMRANK_TOOLS_COMMANDS_HPP
#define SYMRANK_TOOLS_COMMANDS_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "symrank/symrank.hpp"

namespace symrank::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Input and configuration problems exit with 2; everything else with 1.
inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::ParseError:
    case ErrorKind::InvalidArgument:
    case ErrorKind::UnknownOperator:
    case ErrorKind::TooLarge:
    case ErrorKind::TooSmall:
    case ErrorKind::SizeOutOfRange:
    case ErrorKind::KTooLarge:
    case ErrorKind::NoPositives:
    case ErrorKind::InvalidTransform:
    case ErrorKind::DomainMismatch:
    case ErrorKind::TiesInResponse:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::LengthMismatch:
    case ErrorKind::ColumnMismatch:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

struct Options {
  std::string input;
  std::string response;
  std::string config;
  std::string out_dir;
  std::string model;
  std::string methods = "all";
  std::string method = "t0";
  std::string arch;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t n_selected = 3;
  std::size_t depth = 3;
  std::size_t size = 0;
  std::size_t min_leaf = 1;
  bool brute_force = false;
  bool value_dedup = false;
};

namespace detail {

inline void write_text(const Options& o, const std::string& name, const std::string& text) {
  if (o.out_dir.empty()) return;
  fs::create_directories(o.out_dir);
  std::ofstream f(fs::path(o.out_dir) / name, std::ios::binary);
  if (!f) throw Error(ErrorKind::ParseError, "cannot write '" + (fs::path(o.out_dir) / name).string() + "'");
  f << text;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline std::vector<Method> parse_methods(const std::string& list) {
  if (list == "all") return all_methods();
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_method(item));
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, "no methods given");
  return out;
}

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline Json warnings_json(const std::vector<ScoreWarning>& ws, const std::vector<std::string>& names) {
  Json out = Json::array();
  for (const auto& w : ws)
    out.push_back({{"feature", names.at(w.column)}, {"kind", to_string(w.kind)}, {"message", w.message}});
  return out;
}

inline Json interval_json(const Interval& i) { return Json::array({i.lo, i.hi}); }

inline std::string require(const std::string& v, const char* flag) {
  if (v.empty()) throw Error(ErrorKind::InvalidArgument, std::string(flag) + " is required");
  return v;
}

}  // namespace detail

inline int cmd_gen_features(const Options& o, std::ostream& out) {
  const Dataset ds = dataset_from_csv(read_csv(detail::require(o.input, "--input")), o.response);
  Json cfg = Json::object();
  if (!o.config.empty()) cfg = read_json_file(o.config);
  const std::string arch = !o.arch.empty() ? o.arch : cfg.value("architecture", std::string("bu"));
  const OperatorSet ops = cfg.contains("operators") ? operators_from_json(cfg.at("operators")) : OperatorSet::standard();
  const bool dedup = o.value_dedup || cfg.value("value_dedup", false);
  const FeatureMatrix fm = generate(ds, Architecture::parse(arch), ops, dedup);

  std::ostringstream csv;
  auto names = fm.names();
  for (std::size_t c = 0; c < names.size(); ++c) csv << names[c] << ",";
  csv << "y\n";
  for (std::size_t r = 0; r < fm.z.rows(); ++r) {
    for (std::size_t c = 0; c < fm.z.cols(); ++c) csv << detail::csv_number(fm.z(r, c)) << ",";
    csv << detail::csv_number(ds.y()[r]) << "\n";
  }
  Json layers = Json::array();
  for (const auto& l : fm.layers) layers.push_back({{"kind", std::string(1, l.kind)}, {"raw", l.raw}, {"distinct", l.distinct}});
  Json warnings = Json::array();
  for (const auto& w : fm.warnings)
    warnings.push_back({{"kind", to_string(w.kind)}, {"expression", w.expression}, {"message", w.message}});
  Json constant = Json::array();
  for (std::size_t c = 0; c < fm.size(); ++c)
    if (fm.constant[c]) constant.push_back(names[c]);
  const Json manifest{{"architecture", arch},     {"operators", operators_to_json(ops)},
                      {"value_dedup", dedup},     {"layers", layers},
                      {"n_features", fm.size()},  {"features", names},
                      {"constant_features", constant}, {"warnings", warnings}};
  detail::write_text(o, "features.csv", csv.str());
  detail::write_text(o, "manifest.json", detail::dump(manifest));
  out << detail::dump(manifest);
  return kExitOk;
}

inline int cmd_score(const Options& o, std::ostream& out) {
  const Dataset ds = dataset_from_csv(read_csv(detail::require(o.input, "--input")), o.response);
  const auto methods = detail::parse_methods(o.methods);
  const auto& names = ds.column_names();
  ScoreOptions opt;
  opt.ensemble.depth = o.depth;
  opt.ensemble.min_leaf = o.min_leaf;
  opt.seed = o.seed;
  opt.record_errors = true;
  std::vector<MethodScore> scores;
  Json per_method = Json::object();
  bool any_error = false;
  for (Method m : methods) {
    scores.push_back(score_features(ds.x(), ds.y(), m, opt));
    const auto& s = scores.back();
    for (const auto& w : s.warnings) any_error = any_error || w.kind != ErrorKind::ZeroVariance;
    per_method[to_string(m)] = {{"lower_is_better", s.lower_better()},
                                {"scores", s.scores},
                                {"warnings", detail::warnings_json(s.warnings, names)}};
  }
  const Json j{{"features", names}, {"methods", per_method}};
  std::ostringstream csv;
  csv << "feature";
  for (Method m : methods) csv << "," << to_string(m);
  csv << "\n";
  for (std::size_t c = 0; c < names.size(); ++c) {
    csv << names[c];
    for (const auto& s : scores) csv << "," << detail::csv_number(s.scores[c]);
    csv << "\n";
  }
  detail::write_text(o, "scores.json", detail::dump(j));
  detail::write_text(o, "scores.csv", csv.str());
  out << detail::dump(j);
  return any_error ? kExitRuntime : kExitOk;
}

inline int cmd_select(const Options& o, std::ostream& out) {
  const Dataset ds = dataset_from_csv(read_csv(detail::require(o.input, "--input")), o.response);
  const Method m = parse_method(o.method);
  ScoreOptions opt;
  opt.ensemble.depth = o.depth;
  opt.ensemble.min_leaf = o.min_leaf;
  opt.seed = o.seed;
  opt.record_errors = true;
  const MethodScore s = score_features(ds.x(), ds.y(), m, opt);
  const auto picked = select_top(s, o.n_selected);
  Json sel = Json::array();
  for (Index c : picked) sel.push_back({{"feature", ds.column_names()[c]}, {"column", c}, {"score", s.scores[c]}});
  Json classes = Json::array();
  for (const auto& g : equivalence_classes(s)) {
    Json names = Json::array();
    for (Index c : g) names.push_back(ds.column_names()[c]);
    classes.push_back(names);
  }
  const Json j{{"method", to_string(m)},
               {"n_selected", o.n_selected},
               {"selected", sel},
               {"boundary_tie", selection_boundary_tied(s, o.n_selected)},
               {"equivalence_classes", classes},
               {"warnings", detail::warnings_json(s.warnings, ds.column_names())}};
  detail::write_text(o, "selection.json", detail::dump(j));
  out << detail::dump(j);
  return kExitOk;
}

inline int cmd_experiment(const Options& o, std::ostream& out) {
  Json raw = read_json_file(detail::require(o.config, "--config"));
  if (o.seed_set) raw["seed"] = o.seed;
  const ExperimentConfig cfg = experiment_config_from_json(raw);
  const ExperimentResult res = run_experiment(cfg);
  const Json report = experiment_report_json(res);
  detail::write_text(o, "report.json", detail::dump(report));
  detail::write_text(o, "timings.json", detail::dump(experiment_timings_json(res)));
  Json summary = Json::array();
  for (const auto& cell : res.cells) {
    for (const auto& ms : cell.methods) {
      summary.push_back({{"architecture", cell.architecture},
                         {"noise_var", cell.noise_var},
                         {"method", to_string(ms.method)},
                         {"aip", ms.aip},
                         {"pr_auc_median", ms.pr_auc_median}});
      std::ostringstream csv;
      csv << "recall,precision\n";
      for (const auto& rep : ms.repeats)
        for (const auto& p : rep.curve.points) csv << detail::csv_number(p.recall) << "," << detail::csv_number(p.precision) << "\n";
      detail::write_text(o, "pr_" + cell.architecture + "_noise" + format_number(cell.noise_var) + "_" +
                                to_string(ms.method) + ".csv",
                         csv.str());
    }
  }
  out << detail::dump(Json{{"summary", summary}});
  return kExitOk;
}

inline int cmd_p12(const Options& o, std::ostream& out) {
  const Json cfg = read_json_file(detail::require(o.config, "--config"));
  PiecewiseMonotone t1, t2;
  Measure measure = Measure::uniform(0.0, 1.0);
  std::vector<double> grid;
  try {
    t1 = piecewise_from_json(cfg.at("theta1"));
    t2 = piecewise_from_json(cfg.at("theta2"));
    measure = cfg.contains("measure") ? measure_from_json(cfg.at("measure"))
                                      : Measure::uniform(t1.domain().lo, t1.domain().hi);
    grid = cfg.at("c_grid").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("p12 config: ") + e.what());
  }
  Json rows = Json::array();
  bool failed = false;
  for (double c : grid) {
    Json row{{"C", c}};
    try {
      const auto rep = preference_probability(t1, t2, c, measure);
      Json i1 = Json::array(), i2 = Json::array();
      for (const auto& i : rep.intervals_pref_1) i1.push_back(detail::interval_json(i));
      for (const auto& i : rep.intervals_pref_2) i2.push_back(detail::interval_json(i));
      row["p12"] = rep.p_value;
      row["magnitude"] = std::abs(rep.p_value);
      row["preferred"] = rep.p_value > 0 ? "theta1" : rep.p_value < 0 ? "theta2" : "neither";
      row["intervals_pref_1"] = i1;
      row["intervals_pref_2"] = i2;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::CaseThreePresent) throw;
      failed = true;
      row["error"] = to_string(e.kind());
      row["message"] = e.what();
    }
    rows.push_back(std::move(row));
  }
  Json j{{"theta1", piecewise_to_json(t1)},
         {"theta2", piecewise_to_json(t2)},
         {"rows", rows},
         {"note",
          "p12 is signed: P(intervals where only theta1 has a pre-image of C) minus P(intervals where only theta2 "
          "does). Negative values favour theta2; 'magnitude' is |p12|, the form in which a sign-free table would "
          "print it."}};
  try {
    j["offset_shift"] = offset_shift(t1, t2);
  } catch (const Error&) {
    j["offset_shift"] = nullptr;
  }
  detail::write_text(o, "p12.json", detail::dump(j));
  out << detail::dump(j);
  return failed ? kExitRuntime : kExitOk;
}

inline int cmd_oracle_partition(const Options& o, std::ostream& out) {
  const CsvTable t = read_csv(detail::require(o.input, "--input"));
  std::size_t yc = t.header.size() - 1;
  if (!o.response.empty()) yc = t.column_index(o.response);
  else
    for (std::size_t c = 0; c < t.header.size(); ++c)
      if (t.header[c] == "y") yc = c;
  std::vector<double> y;
  for (const auto& r : t.rows) y.push_back(r[yc]);
  if (auto tie = find_tie(y))
    throw Error(ErrorKind::TiesInResponse, "responses at rows " + std::to_string(tie->first + 1) + " and " +
                                               std::to_string(tie->second + 1) + " are tied");
  if (o.brute_force && y.size() > kBruteForceLimit)
    throw Error(ErrorKind::TooLarge, "brute force is limited to n <= " + std::to_string(kBruteForceLimit) + ", got n=" +
                                         std::to_string(y.size()));
  auto labels = [](const IndexSet& s) {
    Json a = Json::array();
    for (Index i : s) a.push_back("y" + std::to_string(i + 1));
    return a;
  };
  auto part_json = [&](const Partition2& p) {
    return Json{{"left", labels(p.left)}, {"right", labels(p.right)}, {"loss", p.loss()}};
  };
  Json j{{"n", y.size()}};
  const auto vs = oracle_varying_size(y);
  j["varying_size"] = {{"sizes", {vs.split, y.size() - vs.split}}, {"partition", part_json(vs.partition)}};
  if (o.size > 0) {
    const auto fx = oracle_fixed_size(y, o.size);
    j["size"] = o.size;
    j["prefix"] = part_json(fx.prefix);
    j["suffix"] = part_json(fx.suffix);
    j["winner"] = fx.winner == FixedSizeOracle::Winner::Prefix ? "prefix" : "suffix";
    j["tie"] = fx.tie;
    j["best"] = part_json(fx.best());
    if (o.brute_force) {
      const auto bf = brute_force_best_2partition(y, o.size);
      j["brute_force"] = part_json(bf);
      j["brute_force_agrees"] = losses_tie(bf.loss(), fx.best().loss());
    }
  }
  detail::write_text(o, "oracle_partition.json", detail::dump(j));
  out << detail::dump(j);
  return kExitOk;
}

inline int cmd_tree_grow(const Options& o, std::ostream& out) {
  const Dataset ds = dataset_from_csv(read_csv(detail::require(o.input, "--input")), o.response);
  const Tree tree = grow_tree(ds.x(), ds.y(), o.depth, o.min_leaf);
  const Json j = tree_to_json(tree, ds.column_names());
  detail::write_text(o, "tree.json", detail::dump(j));
  out << detail::dump(j);
  return kExitOk;
}

inline int cmd_tree_predict(const Options& o, std::ostream& out) {
  const Json model = read_json_file(detail::require(o.model, "--model"));
  const Tree tree = tree_from_json(model);
  const CsvTable t = read_csv(detail::require(o.input, "--input"));
  std::vector<std::size_t> cols;
  if (model.contains("feature_names")) {
    for (const auto& name : model.at("feature_names")) cols.push_back(t.column_index(name.get<std::string>()));
  } else {
    for (std::size_t c = 0; c < tree.n_features() && c < t.header.size(); ++c) cols.push_back(c);
  }
  if (cols.size() != tree.n_features())
    throw Error(ErrorKind::ColumnMismatch, "input has fewer columns than the tree's features");
  std::ostringstream csv;
  csv << "prediction\n";
  std::vector<double> row(cols.size());
  for (const auto& r : t.rows) {
    for (std::size_t k = 0; k < cols.size(); ++k) row[k] = r[cols[k]];
    csv << detail::csv_number(tree.predict(row)) << "\n";
  }
  detail::write_text(o, "predictions.csv", csv.str());
  out << csv.str();
  return kExitOk;
}

/// Reads a tree and writes it back in normalized form.
inline int cmd_tree_serialize(const Options& o, std::ostream& out) {
  const Json model = read_json_file(detail::require(o.model, "--model"));
  const Tree tree = tree_from_json(model);
  std::vector<std::string> names;
  if (model.contains("feature_names")) names = model.at("feature_names").get<std::vector<std::string>>();
  const Json j = tree_to_json(tree, names);
  detail::write_text(o, "tree.json", detail::dump(j));
  out << detail::dump(j);
  return kExitOk;
}

/// Entry point; args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"symrank: symbolic feature generation and ranking-based selection"};
  app.require_subcommand(1);
  Options o;

  auto add_io = [&](CLI::App* sc) {
    sc->add_option("--input", o.input, "input CSV");
    sc->add_option("--response", o.response, "response column (default: 'y', else the last column)");
    sc->add_option("--out-dir", o.out_dir, "directory for output files");
  };
  auto add_seed = [&](CLI::App* sc) {
    sc->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { o.seed = v; o.seed_set = true; }, "master RNG seed");
  };

  auto* gen = app.add_subcommand("gen-features", "compose symbolic features from input columns");
  add_io(gen);
  gen->add_option("--config", o.config, "JSON with architecture, operators, value_dedup");
  gen->add_option("--arch", o.arch, "layer order over {u,b}, e.g. bu");
  gen->add_flag("--value-dedup", o.value_dedup, "drop columns numerically equal to an earlier one");

  auto* score = app.add_subcommand("score", "score every feature column against the response");
  add_io(score);
  add_seed(score);
  score->add_option("--methods", o.methods, "comma list or 'all'");
  score->add_option("--depth", o.depth, "tree-importance depth");
  score->add_option("--min-leaf", o.min_leaf, "tree-importance minimum leaf size");

  auto* select = app.add_subcommand("select", "pick the best-scoring features");
  add_io(select);
  add_seed(select);
  select->add_option("--methods,--method", o.method, "scoring method");
  select->add_option("--n-selected", o.n_selected, "number of features to keep");
  select->add_option("--depth", o.depth, "tree-importance depth");
  select->add_option("--min-leaf", o.min_leaf, "tree-importance minimum leaf size");

  auto* exp = app.add_subcommand("experiment", "run a repeated selection experiment from a JSON config");
  exp->add_option("--config", o.config, "experiment config")->required();
  exp->add_option("--out-dir", o.out_dir, "directory for report.json, timings.json and PR curves");
  add_seed(exp);

  auto* p12 = app.add_subcommand("p12", "signed split-preference probability over a threshold grid");
  p12->add_option("--config", o.config, "JSON with theta1, theta2, measure, c_grid")->required();
  p12->add_option("--out-dir", o.out_dir, "directory for p12.json");

  auto* orc = app.add_subcommand("oracle-partition", "loss-optimal 2-partitions of the responses");
  add_io(orc);
  orc->add_option("--size", o.size, "size i of the first group");
  orc->add_flag("--brute-force", o.brute_force, "also search all partitions (n <= 16)");

  auto* tree = app.add_subcommand("tree", "regression trees");
  tree->require_subcommand(1);
  auto* grow = tree->add_subcommand("grow", "grow a CART tree");
  add_io(grow);
  grow->add_option("--depth", o.depth, "maximum depth");
  grow->add_option("--min-leaf", o.min_leaf, "minimum leaf size");
  auto* predict = tree->add_subcommand("predict", "predict rows with a saved tree");
  predict->add_option("--model", o.model, "tree JSON")->required();
  predict->add_option("--input", o.input, "input CSV");
  predict->add_option("--out-dir", o.out_dir, "directory for predictions.csv");
  auto* ser = tree->add_subcommand("serialize", "normalize a saved tree");
  ser->add_option("--model", o.model, "tree JSON")->required();
  ser->add_option("--out-dir", o.out_dir, "directory for tree.json");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_features(o, out);
    if (score->parsed()) return cmd_score(o, out);
    if (select->parsed()) return cmd_select(o, out);
    if (exp->parsed()) return cmd_experiment(o, out);
    if (p12->parsed()) return cmd_p12(o, out);
    if (orc->parsed()) return cmd_oracle_partition(o, out);
    if (grow->parsed()) return cmd_tree_grow(o, out);
    if (predict->parsed()) return cmd_tree_predict(o, out);
    if (ser->parsed()) return cmd_tree_serialize(o, out);
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error [io]: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace symrank::cli

#endif  // SYMRANK_TOOLS_COMMANDS_HPP
