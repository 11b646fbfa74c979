#include "xferlag/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "xferlag/error.hpp"

namespace xferlag {
namespace {

using nlohmann::json;

json params_json(const HyperParams& p) {
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

HyperParams params_from(const json& j) {
  HyperParams p;
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.n_estimators = j.value("n_estimators", p.n_estimators);
  p.max_depth = j.value("max_depth", p.max_depth);
  p.min_samples_split = j.value("min_samples_split", p.min_samples_split);
  p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
  p.max_features = j.value("max_features", p.max_features);
  p.subsample = j.value("subsample", p.subsample);
  p.seed = j.value("seed", p.seed);
  p.bootstrap = j.value("bootstrap", p.bootstrap);
  return p;
}

std::vector<std::size_t> sorted_sample(Rng& rng, std::size_t begin, std::size_t width,
                                       std::size_t count) {
  auto picks = sample_without_replacement(rng, width, count);
  for (auto& p : picks) p += begin;
  std::sort(picks.begin(), picks.end());
  return picks;
}

std::vector<std::size_t> range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> out(end - begin);
  std::iota(out.begin(), out.end(), begin);
  return out;
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size()) throw InvalidArgument("rmse: length mismatch");
  if (pred.empty()) throw InvalidArgument("rmse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - actual[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

void validate(const SearchSpace& s) {
  const auto check = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("empty or invalid search range: ") + what);
  };
  check(s.learning_rate_min > 0.0 && s.learning_rate_min <= s.learning_rate_max, "learning_rate");
  check(s.n_estimators_min >= 1 && s.n_estimators_min <= s.n_estimators_max, "n_estimators");
  check(s.max_depth_min >= 1 && s.max_depth_min <= s.max_depth_max, "max_depth");
  check(s.min_samples_split_min >= 1 && s.min_samples_split_min <= s.min_samples_split_max,
        "min_samples_split");
  check(s.min_samples_leaf_min >= 1 && s.min_samples_leaf_min <= s.min_samples_leaf_max,
        "min_samples_leaf");
  check(s.min_samples_leaf_min <= s.min_samples_split_max, "min_samples_leaf vs split");
  check(s.max_features_min > 0.0 && s.max_features_min <= s.max_features_max, "max_features");
  check(s.subsample_min > 0.0 && s.subsample_min <= s.subsample_max && s.subsample_max <= 1.0,
        "subsample");
}

HyperParams sample_hyperparams(const SearchSpace& s, Rng& rng) {
  validate(s);
  HyperParams p;
  p.learning_rate = std::exp(
      uniform_real(rng, std::log(s.learning_rate_min), std::log(s.learning_rate_max)));
  p.learning_rate = std::clamp(p.learning_rate, s.learning_rate_min, s.learning_rate_max);
  p.n_estimators = static_cast<int>(uniform_int(rng, s.n_estimators_min, s.n_estimators_max));
  p.max_depth = static_cast<int>(uniform_int(rng, s.max_depth_min, s.max_depth_max));
  p.min_samples_split = static_cast<int>(
      uniform_int(rng, std::max(s.min_samples_split_min, s.min_samples_leaf_min),
                  s.min_samples_split_max));
  p.min_samples_leaf = static_cast<int>(uniform_int(
      rng, s.min_samples_leaf_min, std::min(s.min_samples_leaf_max, p.min_samples_split)));
  p.max_features = uniform_real(rng, s.max_features_min, s.max_features_max);
  if (s.max_features_min == s.max_features_max) p.max_features = s.max_features_min;
  p.subsample = uniform_real(rng, s.subsample_min, s.subsample_max);
  if (s.subsample_min == s.subsample_max) p.subsample = s.subsample_min;
  p.bootstrap = s.bootstrap;
  p.seed = rng();
  return p;
}

void validate(const CvConfig& c, std::size_t n_rows) {
  if (c.num_params == 0) throw InvalidArgument("num_params must be positive");
  if (c.k == 0) throw InvalidArgument("k must be positive");
  if (c.train_width == 0 || c.test_width == 0) throw InvalidArgument("widths must be positive");
  if (c.train_size == 0 || c.train_size > c.train_width) {
    throw InvalidArgument("train_size must be in [1, train_width]");
  }
  if (c.test_size == 0 || c.test_size > c.test_width) {
    throw InvalidArgument("test_size must be in [1, test_width]");
  }
  if (c.train_width + c.test_width > n_rows) {
    throw InvalidArgument("train_width + test_width (" +
                          std::to_string(c.train_width + c.test_width) + ") exceeds rows (" +
                          std::to_string(n_rows) + ")");
  }
}

std::vector<FoldSpec> make_folds(std::size_t n_rows, const CvConfig& config, Rng& rng) {
  validate(config, n_rows);
  const std::size_t last_start = n_rows - config.train_width - config.test_width;
  std::vector<FoldSpec> folds;
  folds.reserve(config.k);
  for (std::size_t j = 0; j < config.k; ++j) {
    FoldSpec f;
    f.region_start = static_cast<std::size_t>(uniform_index(rng, last_start + 1));
    f.train_width = config.train_width;
    f.test_width = config.test_width;
    const std::size_t test_start = f.region_start + config.train_width;
    f.train_rows = sorted_sample(rng, f.region_start, config.train_width, config.train_size);
    f.test_rows = sorted_sample(rng, test_start, config.test_width, config.test_size);
    folds.push_back(std::move(f));
  }
  return folds;
}

CvResult evaluate_candidates(const FeatureMatrix& x, std::span<const double> y,
                             const CvConfig& config, ModelFamily family,
                             std::span<const HyperParams> candidates) {
  if (y.size() != x.n_rows) throw InvalidArgument("X rows and y length differ");
  if (candidates.empty()) throw InvalidArgument("no candidates to evaluate");
  validate(config, x.n_rows);

  CvResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    Rng rng(derive_seed(config.seed, c));
    const auto folds = make_folds(x.n_rows, config, rng);
    CandidateResult cand;
    cand.params = candidates[c];
    for (const auto& fold : folds) {
      const auto train = config.use_subsets
                             ? fold.train_rows
                             : range(fold.region_start, fold.region_start + fold.train_width);
      const std::size_t test_start = fold.region_start + fold.train_width;
      const auto test =
          config.use_subsets ? fold.test_rows : range(test_start, test_start + fold.test_width);
      const auto model = fit_model(family, x, y, train, cand.params);
      const auto pred = predict(model, x, test);
      std::vector<double> actual;
      actual.reserve(test.size());
      for (auto r : test) actual.push_back(y[r]);
      cand.fold_rmse.push_back(rmse(pred, actual));
    }
    cand.mean_rmse = std::accumulate(cand.fold_rmse.begin(), cand.fold_rmse.end(), 0.0) /
                     static_cast<double>(cand.fold_rmse.size());
    if (c == 0 || cand.mean_rmse < best) {
      best = cand.mean_rmse;
      result.best_index = c;
    }
    result.candidates.push_back(std::move(cand));
  }
  result.best_params = result.candidates[result.best_index].params;
  return result;
}

CvResult nested_cv(const FeatureMatrix& x, std::span<const double> y, const CvConfig& config,
                   ModelFamily family, const SearchSpace& space) {
  validate(space);
  std::vector<HyperParams> candidates;
  candidates.reserve(config.num_params);
  for (std::size_t i = 0; i < config.num_params; ++i) {
    // Separate from the fold stream of the same index.
    Rng rng(derive_seed(config.seed ^ 0xA5A5A5A5A5A5A5A5ULL, i));
    auto params = sample_hyperparams(space, rng);
    // The space is declared without knowing the column count.
    params.max_features = std::min(params.max_features, static_cast<double>(x.n_cols()));
    candidates.push_back(params);
  }
  return evaluate_candidates(x, y, config, family, candidates);
}

std::string params_to_json_text(const HyperParams& params) { return params_json(params).dump(2); }

HyperParams params_from_json_text(const std::string& text) {
  try {
    auto j = json::parse(text);
    if (j.contains("best_params")) j = j.at("best_params");
    return params_from(j);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad hyperparameter JSON: ") + e.what(), "");
  }
}

std::string cv_result_to_json(const CvResult& result, const CvConfig& config, ModelFamily family) {
  json candidates = json::array();
  for (const auto& c : result.candidates) {
    candidates.push_back(json{{"params", params_json(c.params)},
                              {"fold_rmse", c.fold_rmse},
                              {"mean_rmse", c.mean_rmse}});
  }
  json j{{"format", "xferlag-cv"},
         {"version", 1},
         {"family", std::string(to_string(family))},
         {"config",
          {{"num_params", config.num_params},
           {"k", config.k},
           {"train_width", config.train_width},
           {"test_width", config.test_width},
           {"train_size", config.train_size},
           {"test_size", config.test_size},
           {"seed", config.seed},
           {"use_subsets", config.use_subsets}}},
         {"candidates", candidates},
         {"best_index", result.best_index},
         {"best_params", params_json(result.best_params)}};
  return j.dump(2);
}

CvResult cv_result_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    if (j.value("format", "") != "xferlag-cv") throw ParseError("not a CV result file", "");
    CvResult r;
    for (const auto& c : j.at("candidates")) {
      CandidateResult cand;
      cand.params = params_from(c.at("params"));
      c.at("fold_rmse").get_to(cand.fold_rmse);
      cand.mean_rmse = c.at("mean_rmse").get<double>();
      r.candidates.push_back(std::move(cand));
    }
    r.best_index = j.at("best_index").get<std::size_t>();
    r.best_params = params_from(j.at("best_params"));
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad CV result JSON: ") + e.what(), "");
  }
}

HoldoutSplit holdout_split(std::size_t n_rows, const HoldoutConfig& config) {
  if (!(config.split > 0.0 && config.split < 1.0)) {
    throw InvalidArgument("holdout split must be in (0, 1)");
  }
  const auto n_train =
      static_cast<std::size_t>(std::floor(config.split * static_cast<double>(n_rows) + 1e-9));
  if (n_train == 0 || n_train >= n_rows) {
    throw InvalidArgument("holdout split leaves an empty side");
  }
  const std::size_t n_test = n_rows - n_train;
  if (config.train_subset > n_train) throw InvalidArgument("train subset larger than train side");
  if (config.test_subset > n_test) throw InvalidArgument("test subset larger than test side");

  Rng rng(config.seed);
  HoldoutSplit split;
  split.train_rows = config.train_subset ? sorted_sample(rng, 0, n_train, config.train_subset)
                                         : range(0, n_train);
  split.test_rows = config.test_subset ? sorted_sample(rng, n_train, n_test, config.test_subset)
                                       : range(n_train, n_rows);
  return split;
}

HoldoutResult holdout_score(const EnsembleModel& model, const FeatureMatrix& x,
                            std::span<const double> y, const HoldoutConfig& config) {
  if (y.size() != x.n_rows) throw InvalidArgument("X rows and y length differ");
  const auto split = holdout_split(x.n_rows, config);
  HoldoutResult out;
  out.test_rows = split.test_rows;
  out.predicted = predict(model, x, split.test_rows);
  for (auto r : split.test_rows) out.actual.push_back(y[r]);
  out.rmse = rmse(out.predicted, out.actual);
  return out;
}

HoldoutResult holdout_eval(const FeatureMatrix& x, std::span<const double> y,
                           const HoldoutConfig& config, const HyperParams& params,
                           ModelFamily family) {
  if (y.size() != x.n_rows) throw InvalidArgument("X rows and y length differ");
  const auto split = holdout_split(x.n_rows, config);
  const auto model = fit_model(family, x, y, split.train_rows, params);
  return holdout_score(model, x, y, config);
}

}  // namespace xferlag
