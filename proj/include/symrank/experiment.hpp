#ifndef SYMRANK_EXPERIMENT_HPP
#define SYMRANK_EXPERIMENT_HPP

#include <algorithm>
#include <chrono>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "symrank/evalsel.hpp"
#include "symrank/io.hpp"

namespace symrank {

enum class SignalKind { ThreeVar, Candidates, Csv };

struct ExperimentConfig {
  SignalKind signal = SignalKind::ThreeVar;
  std::string truth;                     // candidates signal
  std::vector<std::string> candidates;   // candidates signal
  std::string csv_path;                  // csv signal
  std::string csv_response;
  std::vector<std::string> architectures{"bu", "ub"};
  OperatorSet operators = OperatorSet::standard();
  std::vector<Method> methods = all_methods();
  std::size_t n = 100;
  std::vector<double> noise_vars{0.1};
  std::size_t repeats = 50;
  std::size_t n_selected = 3;
  std::uint64_t seed = 1;
  std::set<Index> active{0, 2};          // 0-based; 1-based in JSON
  bool value_dedup = false;
  EnsembleOptions tree;
};

namespace detail {

inline void config_fail(const std::string& msg) { throw Error(ErrorKind::InvalidArgument, "config: " + msg); }

}  // namespace detail

/// Validates and normalizes an experiment config. Unknown keys are rejected.
inline ExperimentConfig experiment_config_from_json(const Json& j) {
  static const std::set<std::string> known = {"signal", "architectures", "operators", "methods", "n",
                                              "noise_var", "repeats", "n_selected", "seed", "active",
                                              "value_dedup", "tree"};
  if (!j.is_object()) detail::config_fail("top level must be an object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) detail::config_fail("unknown key '" + k + "'");
  ExperimentConfig c;
  try {
    if (j.contains("signal")) {
      const Json& s = j.at("signal");
      const std::string kind = s.is_string() ? s.get<std::string>() : s.at("kind").get<std::string>();
      if (kind == "three-var") {
        c.signal = SignalKind::ThreeVar;
      } else if (kind == "candidates") {
        c.signal = SignalKind::Candidates;
        c.truth = s.at("truth").get<std::string>();
        c.candidates = s.at("candidates").get<std::vector<std::string>>();
        if (c.candidates.empty()) detail::config_fail("candidates must be nonempty");
      } else if (kind == "csv") {
        c.signal = SignalKind::Csv;
        c.csv_path = s.at("path").get<std::string>();
        c.csv_response = s.value("response", std::string());
      } else {
        detail::config_fail("signal kind must be three-var, candidates or csv");
      }
    }
    if (j.contains("architectures")) {
      c.architectures = j.at("architectures").get<std::vector<std::string>>();
      if (c.architectures.empty()) detail::config_fail("architectures must be nonempty");
      for (const auto& a : c.architectures) Architecture::parse(a);
    }
    if (j.contains("operators")) c.operators = operators_from_json(j.at("operators"));
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
      if (c.methods.empty()) detail::config_fail("methods must be nonempty");
    }
    c.n = j.value("n", c.n);
    if (c.n < 2) detail::config_fail("n must be >= 2");
    if (j.contains("noise_var")) {
      const Json& nv = j.at("noise_var");
      c.noise_vars = nv.is_array() ? nv.get<std::vector<double>>() : std::vector<double>{nv.get<double>()};
      if (c.noise_vars.empty()) detail::config_fail("noise_var must be nonempty");
      for (double v : c.noise_vars)
        if (!(v >= 0.0)) detail::config_fail("noise_var entries must be >= 0");
    }
    c.repeats = j.value("repeats", c.repeats);
    if (c.repeats < 1) detail::config_fail("repeats must be >= 1");
    c.n_selected = j.value("n_selected", c.n_selected);
    if (c.n_selected < 1) detail::config_fail("n_selected must be >= 1");
    c.seed = j.value("seed", c.seed);
    if (j.contains("active")) {
      c.active.clear();
      for (const auto& a : j.at("active")) {
        const auto v = a.get<long long>();
        if (v < 1) detail::config_fail("active variables are 1-based");
        c.active.insert(static_cast<Index>(v - 1));
      }
    }
    c.value_dedup = j.value("value_dedup", c.value_dedup);
    if (j.contains("tree")) {
      const Json& t = j.at("tree");
      c.tree.n_trees = t.value("n_trees", c.tree.n_trees);
      c.tree.depth = t.value("depth", c.tree.depth);
      c.tree.min_leaf = t.value("min_leaf", c.tree.min_leaf);
      c.tree.bootstrap = t.value("bootstrap", c.tree.bootstrap);
      if (c.tree.n_trees < 1) detail::config_fail("tree.n_trees must be >= 1");
    }
  } catch (const Json::exception& e) {
    detail::config_fail(e.what());
  }
  if (c.signal == SignalKind::Candidates) {
    const Expression truth = parse_expression(c.truth);
    bool found = false;
    for (const auto& s : c.candidates) found = found || parse_expression(s) == truth;
    if (!found) throw Error(ErrorKind::NoPositives, "config: the true signal is not among the candidates");
    if (c.n_selected > c.candidates.size()) throw Error(ErrorKind::KTooLarge, "config: n_selected exceeds candidates");
  }
  return c;
}

inline Json experiment_config_to_json(const ExperimentConfig& c) {
  Json j;
  switch (c.signal) {
    case SignalKind::ThreeVar: j["signal"] = Json{{"kind", "three-var"}}; break;
    case SignalKind::Candidates:
      j["signal"] = Json{{"kind", "candidates"}, {"truth", c.truth}, {"candidates", c.candidates}};
      break;
    case SignalKind::Csv: j["signal"] = Json{{"kind", "csv"}, {"path", c.csv_path}, {"response", c.csv_response}}; break;
  }
  if (c.signal != SignalKind::Candidates) j["architectures"] = c.architectures;
  j["operators"] = operators_to_json(c.operators);
  Json methods = Json::array();
  for (Method m : c.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  j["n"] = c.n;
  j["noise_var"] = c.noise_vars;
  j["repeats"] = c.repeats;
  j["n_selected"] = c.n_selected;
  j["seed"] = c.seed;
  Json active = Json::array();
  for (Index a : c.active) active.push_back(a + 1);
  j["active"] = active;
  j["value_dedup"] = c.value_dedup;
  j["tree"] = Json{{"n_trees", c.tree.n_trees}, {"depth", c.tree.depth}, {"min_leaf", c.tree.min_leaf},
                   {"bootstrap", c.tree.bootstrap}};
  return j;
}

struct RepeatOutcome {
  std::vector<std::string> selected;   // canonical names, best first
  std::size_t correct_selected = 0;
  PrCurve curve;
  bool boundary_tie = false;
  std::vector<ScoreWarning> warnings;
};

struct MethodSummary {
  Method method = Method::T0;
  std::vector<RepeatOutcome> repeats;
  double aip = 0.0;
  double pr_auc_median = 0.0;
  double pr_auc_mean = 0.0;
  std::vector<std::pair<std::string, double>> inclusion;  // first-seen order
  double seconds = 0.0;
};

struct ExperimentCell {
  std::string architecture;  // "candidates" for the candidate signal
  double noise_var = 0.0;
  std::vector<std::string> features;  // from the first repeat
  std::vector<std::string> correct;
  std::vector<LayerCount> layers;
  std::vector<MethodSummary> methods;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ExperimentCell> cells;
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

namespace detail {

struct RepeatData {
  FeatureMatrix fm;
  std::vector<double> y;
  std::vector<bool> correct;
};

inline RepeatData make_repeat_data(const ExperimentConfig& c, const std::string& arch, double noise_var,
                                   std::uint64_t data_seed, const Dataset* csv) {
  RepeatData d;
  if (c.signal == SignalKind::Candidates) {
    std::vector<Expression> cands;
    for (const auto& s : c.candidates) cands.push_back(parse_expression(s));
    const Expression truth = parse_expression(c.truth);
    auto data = synth_candidates(c.n, truth, cands, noise_var, data_seed);
    d.fm = std::move(data.features);
    d.y = data.data.y();
    for (const auto& e : d.fm.exprs) d.correct.push_back(e == truth);
    return d;
  }
  Dataset ds = [&] {
    if (c.signal == SignalKind::ThreeVar) return synth_3var(c.n, noise_var, data_seed);
    // csv: subsample n rows without replacement, optional added noise
    std::mt19937_64 rng(data_seed);
    std::vector<Index> rows(csv->size());
    std::iota(rows.begin(), rows.end(), Index{0});
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(std::min(c.n, rows.size()));
    std::sort(rows.begin(), rows.end());
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix x(rows.size(), csv->dims());
    std::vector<double> y(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t k = 0; k < csv->dims(); ++k) x(r, k) = csv->x()(rows[r], k);
      y[r] = csv->y()[rows[r]] + std::sqrt(noise_var) * gauss(rng);
    }
    return build_dataset(std::move(x), std::move(y), csv->column_names());
  }();
  d.fm = generate(ds, Architecture::parse(arch), c.operators, c.value_dedup);
  d.y = ds.y();
  d.correct = label_correct(d.fm.exprs, c.active);
  return d;
}

}  // namespace detail

/// Runs every (architecture, noise level) cell. Repeat r at noise index k
/// draws its data from derive_seed(derive_seed(seed, k), r), so all
/// architectures and methods see the same samples.
inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  std::optional<Dataset> csv;
  if (c.signal == SignalKind::Csv) csv = dataset_from_csv(read_csv(c.csv_path), c.csv_response);
  if (csv)
    for (Index a : c.active)
      if (a >= csv->dims()) throw Error(ErrorKind::InvalidArgument, "config: active variable beyond the CSV columns");

  ExperimentResult res;
  res.config = c;
  const std::vector<std::string> archs =
      c.signal == SignalKind::Candidates ? std::vector<std::string>{"candidates"} : c.architectures;

  for (const auto& arch : archs) {
    for (std::size_t k = 0; k < c.noise_vars.size(); ++k) {
      const double nv = c.noise_vars[k];
      const std::uint64_t noise_seed = derive_seed(c.seed, k);
      struct Slot {
        std::vector<RepeatOutcome> per_method;
        std::vector<double> seconds;
        std::vector<std::string> features;
        std::vector<std::string> correct;
        std::vector<LayerCount> layers;
      };
      std::vector<Slot> slots(c.repeats);
      parallel_for(c.repeats, [&](std::size_t r) {
        const std::uint64_t data_seed = derive_seed(noise_seed, r);
        auto d = detail::make_repeat_data(c, arch, nv, data_seed, csv ? &*csv : nullptr);
        if (d.fm.size() < c.n_selected)
          throw Error(ErrorKind::KTooLarge, "only " + std::to_string(d.fm.size()) + " features survive generation");
        Slot& s = slots[r];
        s.features = d.fm.names();
        for (std::size_t i = 0; i < d.correct.size(); ++i)
          if (d.correct[i]) s.correct.push_back(s.features[i]);
        s.layers = d.fm.layers;
        for (Method m : c.methods) {
          const auto t0 = std::chrono::steady_clock::now();
          ScoreOptions opt;
          opt.ensemble = c.tree;
          opt.seed = derive_seed(data_seed, 0x7EE);
          opt.record_errors = true;
          const MethodScore score = score_features(d.fm, d.y, m, opt);
          RepeatOutcome o;
          for (Index i : select_top(score, c.n_selected)) {
            o.selected.push_back(s.features[i]);
            o.correct_selected += d.correct[i] ? 1 : 0;
          }
          o.curve = pr_auc(d.correct, score, c.n_selected);
          o.boundary_tie = selection_boundary_tied(score, c.n_selected);
          o.warnings = score.warnings;
          s.per_method.push_back(std::move(o));
          s.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
      });

      ExperimentCell cell;
      cell.architecture = arch;
      cell.noise_var = nv;
      cell.features = slots.front().features;
      cell.correct = slots.front().correct;
      cell.layers = slots.front().layers;
      for (std::size_t mi = 0; mi < c.methods.size(); ++mi) {
        MethodSummary ms;
        ms.method = c.methods[mi];
        std::vector<double> aucs;
        std::vector<std::pair<std::string, double>> incl;
        double hits = 0.0;
        for (auto& s : slots) {
          RepeatOutcome& o = s.per_method[mi];
          aucs.push_back(o.curve.auc);
          hits += static_cast<double>(o.correct_selected) / static_cast<double>(c.n_selected);
          ms.seconds += s.seconds[mi];
          for (const auto& name : o.selected) {
            auto it = std::find_if(incl.begin(), incl.end(), [&](const auto& p) { return p.first == name; });
            if (it == incl.end()) incl.emplace_back(name, 1.0);
            else it->second += 1.0;
          }
          ms.repeats.push_back(std::move(o));
        }
        for (auto& p : incl) p.second /= static_cast<double>(c.repeats);
        ms.inclusion = std::move(incl);
        ms.aip = hits / static_cast<double>(c.repeats);
        ms.pr_auc_median = median_of(aucs);
        double sum = 0.0;
        for (double a : aucs) sum += a;
        ms.pr_auc_mean = sum / static_cast<double>(aucs.size());
        cell.methods.push_back(std::move(ms));
      }
      res.cells.push_back(std::move(cell));
    }
  }
  return res;
}

inline const MethodSummary& find_method(const ExperimentCell& cell, Method m) {
  for (const auto& s : cell.methods)
    if (s.method == m) return s;
  throw Error(ErrorKind::InvalidArgument, std::string("method ") + to_string(m) + " not in the experiment");
}

/// Report without timings, so equal configs give byte-identical output.
inline Json experiment_report_json(const ExperimentResult& res) {
  Json cells = Json::array();
  for (const auto& cell : res.cells) {
    Json layers = Json::array();
    for (const auto& l : cell.layers)
      layers.push_back({{"kind", std::string(1, l.kind)}, {"raw", l.raw}, {"distinct", l.distinct}});
    Json methods = Json::array();
    for (const auto& ms : cell.methods) {
      Json reps = Json::array();
      std::size_t ties = 0;
      for (const auto& o : ms.repeats) {
        ties += o.boundary_tie ? 1 : 0;
        Json warn = Json::array();
        for (const auto& w : o.warnings)
          warn.push_back({{"column", w.column}, {"kind", to_string(w.kind)}, {"message", w.message}});
        reps.push_back({{"selected", o.selected},
                        {"correct_selected", o.correct_selected},
                        {"pr_auc", o.curve.auc},
                        {"equivalence_tie", o.boundary_tie},
                        {"warnings", warn}});
      }
      Json incl = Json::array();
      for (const auto& [name, f] : ms.inclusion) incl.push_back({{"feature", name}, {"frequency", f}});
      methods.push_back({{"method", to_string(ms.method)},
                         {"aip", ms.aip},
                         {"pr_auc_median", ms.pr_auc_median},
                         {"pr_auc_mean", ms.pr_auc_mean},
                         {"equivalence_tie_repeats", ties},
                         {"inclusion_frequency", incl},
                         {"repeats", reps}});
    }
    cells.push_back({{"architecture", cell.architecture},
                     {"noise_var", cell.noise_var},
                     {"features", cell.features},
                     {"correct_features", cell.correct},
                     {"layer_counts", layers},
                     {"methods", methods}});
  }
  return Json{{"config", experiment_config_to_json(res.config)}, {"cells", cells}};
}

inline Json experiment_timings_json(const ExperimentResult& res) {
  Json out = Json::array();
  for (const auto& cell : res.cells)
    for (const auto& ms : cell.methods)
      out.push_back({{"architecture", cell.architecture},
                     {"noise_var", cell.noise_var},
                     {"method", to_string(ms.method)},
                     {"seconds", ms.seconds}});
  return out;
}

}  // namespace symrank

#endif  // SYMRANK_EXPERIMENT_HPP
