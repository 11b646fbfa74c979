#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "xferlag/error.hpp"
#include "xferlag/models.hpp"

namespace xferlag {
namespace {

using nlohmann::json;

constexpr std::string_view kModelFormat = "xferlag-model";
constexpr int kModelFormatVersion = 1;

TreeOptions tree_options(const HyperParams& p, std::size_t n_features) {
  TreeOptions o;
  o.max_depth = p.max_depth;
  o.min_samples_split = p.min_samples_split;
  o.min_samples_leaf = p.min_samples_leaf;
  o.max_features = resolve_max_features(p.max_features, n_features);
  return o;
}

void check_inputs(const FeatureMatrix& x, std::span<const double> y,
                  std::span<const std::size_t> rows, const HyperParams& params) {
  if (y.size() != x.n_rows) throw InvalidArgument("X rows and y length differ");
  if (rows.size() < 2) throw InvalidArgument("need at least two training rows");
  if (x.n_cols() == 0) throw InvalidArgument("feature matrix has no columns");
  for (auto r : rows) {
    if (r >= x.n_rows) throw InvalidArgument("training row index out of range");
    if (!std::isfinite(y[r])) throw InvalidArgument("non-finite target value");
  }
  validate(params, x.n_cols());
}

void finish_importances(EnsembleModel& model, const std::vector<double>& gains) {
  const double total = std::accumulate(gains.begin(), gains.end(), 0.0);
  model.importances.assign(gains.size(), 0.0);
  model.importances_valid = total > 0.0;
  if (!model.importances_valid) return;
  for (std::size_t i = 0; i < gains.size(); ++i) model.importances[i] = gains[i] / total;
}

double predict_training_row(const DecisionTree& tree, const TrainingColumns& cols,
                            std::size_t row) {
  const auto& nodes = tree.nodes();
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(
        cols.value(static_cast<std::size_t>(n.feature), row) <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

void check_columns(const EnsembleModel& model, const FeatureMatrix& x) {
  if (x.n_cols() != model.feature_names.size()) {
    throw InvalidArgument("column mismatch: model expects " +
                          std::to_string(model.feature_names.size()) + " columns, got " +
                          std::to_string(x.n_cols()));
  }
  for (std::size_t c = 0; c < x.n_cols(); ++c) {
    if (x.columns[c].name != model.feature_names[c]) {
      throw InvalidArgument("column mismatch at " + std::to_string(c) + ": expected '" +
                            model.feature_names[c] + "', got '" + x.columns[c].name + "'");
    }
  }
}

json params_to_json(const HyperParams& p) {
  return json{{"learning_rate", p.learning_rate},
              {"n_estimators", p.n_estimators},
              {"max_depth", p.max_depth},
              {"min_samples_split", p.min_samples_split},
              {"min_samples_leaf", p.min_samples_leaf},
              {"max_features", p.max_features},
              {"subsample", p.subsample},
              {"seed", p.seed},
              {"bootstrap", p.bootstrap}};
}

HyperParams params_from_json(const json& j) {
  HyperParams p;
  j.at("learning_rate").get_to(p.learning_rate);
  j.at("n_estimators").get_to(p.n_estimators);
  j.at("max_depth").get_to(p.max_depth);
  j.at("min_samples_split").get_to(p.min_samples_split);
  j.at("min_samples_leaf").get_to(p.min_samples_leaf);
  j.at("max_features").get_to(p.max_features);
  j.at("subsample").get_to(p.subsample);
  j.at("seed").get_to(p.seed);
  p.bootstrap = j.value("bootstrap", true);
  return p;
}

}  // namespace

std::size_t resolve_max_features(double max_features, std::size_t n_features) {
  if (!(max_features >= 0.0) || !std::isfinite(max_features)) {
    throw InvalidArgument("max_features must be non-negative");
  }
  if (max_features == 0.0) return n_features;
  if (max_features >= 1.0) {
    const auto k = static_cast<std::size_t>(std::llround(max_features));
    if (k > n_features) {
      throw InvalidArgument("max_features " + std::to_string(k) + " exceeds feature count " +
                            std::to_string(n_features));
    }
    return k;
  }
  const auto k = static_cast<std::size_t>(
      std::llround(max_features * static_cast<double>(n_features)));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n_features, 1));
}

void validate(const HyperParams& p, std::size_t n_features) {
  if (!(p.learning_rate > 0.0) || !std::isfinite(p.learning_rate)) {
    throw InvalidArgument("learning_rate must be positive");
  }
  if (p.n_estimators < 1) throw InvalidArgument("n_estimators must be positive");
  if (p.max_depth < 1) throw InvalidArgument("max_depth must be positive");
  if (p.min_samples_split < 1) throw InvalidArgument("min_samples_split must be positive");
  if (p.min_samples_leaf < 1) throw InvalidArgument("min_samples_leaf must be positive");
  if (p.min_samples_leaf > p.min_samples_split) {
    throw InvalidArgument("min_samples_leaf must not exceed min_samples_split");
  }
  if (!(p.subsample > 0.0 && p.subsample <= 1.0)) {
    throw InvalidArgument("subsample must be in (0, 1]");
  }
  resolve_max_features(p.max_features, n_features);
}

std::string_view to_string(ModelFamily family) {
  return family == ModelFamily::Gbt ? "gbt" : "rf";
}

ModelFamily parse_model_family(std::string_view text) {
  if (text == "gbt") return ModelFamily::Gbt;
  if (text == "rf") return ModelFamily::Rf;
  throw InvalidArgument("unknown model family '" + std::string(text) + "'");
}

GbtModel fit_gbt(const FeatureMatrix& x, std::span<const double> y, const HyperParams& params) {
  const auto rows = all_rows(x.n_rows);
  return fit_gbt(x, y, rows, params);
}

GbtModel fit_gbt(const FeatureMatrix& x, std::span<const double> y,
                 std::span<const std::size_t> rows, const HyperParams& params) {
  check_inputs(x, y, rows, params);
  const TrainingColumns cols(x, rows);
  const std::size_t n = rows.size();
  std::vector<double> target(n);
  for (std::size_t i = 0; i < n; ++i) target[i] = y[rows[i]];

  GbtModel model;
  model.family = ModelFamily::Gbt;
  model.params = params;
  model.feature_names = x.column_names();
  model.base_prediction = std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(n);

  const auto options = tree_options(params, x.n_cols());
  Rng rng(params.seed);
  std::vector<double> gains(x.n_cols(), 0.0);
  std::vector<double> fitted(n, model.base_prediction);
  std::vector<double> residual(n);
  const auto loss = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = target[i] - fitted[i];
      s += d * d;
    }
    return s / static_cast<double>(n);
  };
  model.training_loss.push_back(loss());

  const auto n_sub = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(params.subsample * static_cast<double>(n))));
  const auto every_row = all_rows(n);
  for (int t = 0; t < params.n_estimators; ++t) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = target[i] - fitted[i];
    std::vector<std::size_t> sample;
    if (n_sub < n) {
      sample = sample_without_replacement(rng, n, n_sub);
      std::sort(sample.begin(), sample.end());
    }
    auto tree = fit_tree(cols, residual, n_sub < n ? sample : every_row, options, rng, gains);
    for (std::size_t i = 0; i < n; ++i) {
      fitted[i] += params.learning_rate * predict_training_row(tree, cols, i);
    }
    model.trees.push_back(std::move(tree));
    model.training_loss.push_back(loss());
  }
  finish_importances(model, gains);
  return model;
}

RfModel fit_rf(const FeatureMatrix& x, std::span<const double> y, const HyperParams& params) {
  const auto rows = all_rows(x.n_rows);
  return fit_rf(x, y, rows, params);
}

RfModel fit_rf(const FeatureMatrix& x, std::span<const double> y,
               std::span<const std::size_t> rows, const HyperParams& params) {
  check_inputs(x, y, rows, params);
  const TrainingColumns cols(x, rows);
  const std::size_t n = rows.size();
  std::vector<double> target(n);
  for (std::size_t i = 0; i < n; ++i) target[i] = y[rows[i]];

  RfModel model;
  model.family = ModelFamily::Rf;
  model.params = params;
  model.feature_names = x.column_names();

  const auto options = tree_options(params, x.n_cols());
  const auto n_draw = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(params.subsample * static_cast<double>(n))));
  std::vector<double> gains(x.n_cols(), 0.0);
  for (int t = 0; t < params.n_estimators; ++t) {
    // One stream per tree so trees are independent of fitting order.
    Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> sample;
    if (params.bootstrap) {
      sample.resize(n_draw);
      for (auto& s : sample) s = static_cast<std::size_t>(uniform_index(rng, n));
      std::sort(sample.begin(), sample.end());
    } else if (n_draw < n) {
      sample = sample_without_replacement(rng, n, n_draw);
      std::sort(sample.begin(), sample.end());
    } else {
      sample = all_rows(n);
    }
    model.trees.push_back(fit_tree(cols, target, sample, options, rng, gains));
  }
  finish_importances(model, gains);
  return model;
}

EnsembleModel fit_model(ModelFamily family, const FeatureMatrix& x, std::span<const double> y,
                        std::span<const std::size_t> rows, const HyperParams& params) {
  return family == ModelFamily::Gbt ? fit_gbt(x, y, rows, params) : fit_rf(x, y, rows, params);
}

double predict_raw(const EnsembleModel& model, std::span<const double> row) {
  if (model.family == ModelFamily::Gbt) {
    double out = model.base_prediction;
    for (const auto& tree : model.trees) out += model.params.learning_rate * tree.predict(row);
    return out;
  }
  if (model.trees.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += tree.predict(row);
  return sum / static_cast<double>(model.trees.size());
}

std::vector<double> predict(const EnsembleModel& model, const FeatureMatrix& x) {
  const auto rows = all_rows(x.n_rows);
  return predict(model, x, rows);
}

std::vector<double> predict(const EnsembleModel& model, const FeatureMatrix& x,
                            std::span<const std::size_t> rows) {
  check_columns(model, x);
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto r : rows) {
    if (r >= x.n_rows) throw InvalidArgument("prediction row index out of range");
    out.push_back(std::max(0.0, predict_raw(model, x.row(r))));
  }
  return out;
}

std::vector<FeatureImportance> feature_importance(const EnsembleModel& model) {
  std::vector<FeatureImportance> out;
  for (std::size_t i = 0; i < model.feature_names.size(); ++i) {
    out.push_back({model.feature_names[i], i < model.importances.size() ? model.importances[i] : 0.0});
  }
  return out;
}

std::vector<FeatureImportance> ranked_importance(const EnsembleModel& model) {
  auto out = feature_importance(model);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.share > b.share;
  });
  return out;
}

std::string model_to_json(const EnsembleModel& model) {
  json trees = json::array();
  for (const auto& tree : model.trees) {
    json feature = json::array(), threshold = json::array(), left = json::array(),
         right = json::array(), value = json::array(), gain = json::array(),
         samples = json::array();
    for (const auto& n : tree.nodes()) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
      gain.push_back(n.gain);
      samples.push_back(n.n_samples);
    }
    trees.push_back(json{{"feature", feature}, {"threshold", threshold}, {"left", left},
                         {"right", right},     {"value", value},         {"gain", gain},
                         {"n_samples", samples}});
  }
  json j{{"format", kModelFormat},
         {"version", kModelFormatVersion},
         {"family", std::string(to_string(model.family))},
         {"params", params_to_json(model.params)},
         {"base_prediction", model.base_prediction},
         {"feature_names", model.feature_names},
         {"importances", model.importances},
         {"importances_valid", model.importances_valid},
         {"training_loss", model.training_loss},
         {"trees", trees}};
  return j.dump();
}

EnsembleModel model_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    if (j.value("format", "") != kModelFormat) throw ParseError("not a model file", "");
    if (j.value("version", 0) != kModelFormatVersion) {
      throw ParseError("unsupported model version", "");
    }
    EnsembleModel m;
    m.family = parse_model_family(j.at("family").get<std::string>());
    m.params = params_from_json(j.at("params"));
    j.at("base_prediction").get_to(m.base_prediction);
    j.at("feature_names").get_to(m.feature_names);
    j.at("importances").get_to(m.importances);
    j.at("importances_valid").get_to(m.importances_valid);
    j.at("training_loss").get_to(m.training_loss);
    for (const auto& t : j.at("trees")) {
      const auto& feature = t.at("feature");
      std::vector<TreeNode> nodes(feature.size());
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        auto& n = nodes[i];
        n.feature = feature[i].get<int>();
        n.threshold = t.at("threshold")[i].get<double>();
        n.left = t.at("left")[i].get<int>();
        n.right = t.at("right")[i].get<int>();
        n.value = t.at("value")[i].get<double>();
        n.gain = t.at("gain")[i].get<double>();
        n.n_samples = t.at("n_samples")[i].get<std::size_t>();
        const auto limit = static_cast<int>(nodes.size());
        if (n.feature >= 0 &&
            (n.feature >= static_cast<int>(m.feature_names.size()) || n.left <= static_cast<int>(i) ||
             n.right <= static_cast<int>(i) || n.left >= limit || n.right >= limit)) {
          throw ParseError("corrupt tree structure", "");
        }
      }
      m.trees.emplace_back(std::move(nodes));
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad model JSON: ") + e.what(), "");
  }
}

void save_model(const EnsembleModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << model_to_json(model) << '\n';
}

EnsembleModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace xferlag
