#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xferlag/features.hpp"
#include "xferlag/models.hpp"
#include "xferlag/random.hpp"

namespace xferlag {

// sqrt(mean((pred - actual)^2)). Throws InvalidArgument on empty or mismatched input.
double rmse(std::span<const double> pred, std::span<const double> actual);

// Inclusive bounds per knob. learning_rate is drawn log-uniformly, integer knobs
// uniformly, max_features and subsample uniformly on the reals.
struct SearchSpace {
  double learning_rate_min = 0.01, learning_rate_max = 0.3;
  int n_estimators_min = 50, n_estimators_max = 300;
  int max_depth_min = 3, max_depth_max = 12;
  int min_samples_split_min = 2, min_samples_split_max = 1000;
  int min_samples_leaf_min = 1, min_samples_leaf_max = 50;
  double max_features_min = 1.0, max_features_max = 8.0;
  double subsample_min = 0.5, subsample_max = 1.0;
  bool bootstrap = true;

  friend bool operator==(const SearchSpace&, const SearchSpace&) = default;
};

void validate(const SearchSpace& space);

// One draw; min_samples_leaf is capped at the drawn min_samples_split.
// The drawn model seed comes from the same stream.
HyperParams sample_hyperparams(const SearchSpace& space, Rng& rng);

struct CvConfig {
  std::size_t num_params = 10;
  std::size_t k = 10;
  std::size_t train_width = 20000;
  std::size_t test_width = 2000;
  std::size_t train_size = 5000;
  std::size_t test_size = 500;
  std::uint64_t seed = 0;
  // When false, folds train and score on their whole regions instead of the
  // sampled subsets.
  bool use_subsets = true;

  friend bool operator==(const CvConfig&, const CvConfig&) = default;
};

void validate(const CvConfig& config, std::size_t n_rows);

struct FoldSpec {
  std::size_t region_start = 0;  // train region [start, start + train_width)
  std::size_t train_width = 0;
  std::size_t test_width = 0;    // test region follows the train region
  std::vector<std::size_t> train_rows;  // ascending
  std::vector<std::size_t> test_rows;   // ascending
};

// k folds with independently placed regions; every train row precedes every
// test row within a fold.
std::vector<FoldSpec> make_folds(std::size_t n_rows, const CvConfig& config, Rng& rng);

struct CandidateResult {
  HyperParams params;
  std::vector<double> fold_rmse;
  double mean_rmse = 0.0;
};

struct CvResult {
  std::vector<CandidateResult> candidates;
  std::size_t best_index = 0;
  HyperParams best_params;
};

// Scores each candidate on k time-ordered folds (clamped predictions) and keeps
// the lowest mean RMSE; ties go to the earlier candidate. Candidate i draws its
// folds from stream derive_seed(config.seed, i).
CvResult evaluate_candidates(const FeatureMatrix& x, std::span<const double> y,
                             const CvConfig& config, ModelFamily family,
                             std::span<const HyperParams> candidates);

// Random search: candidate i is sampled from stream derive_seed(config.seed, i).
CvResult nested_cv(const FeatureMatrix& x, std::span<const double> y, const CvConfig& config,
                   ModelFamily family, const SearchSpace& space);

std::string cv_result_to_json(const CvResult& result, const CvConfig& config, ModelFamily family);
CvResult cv_result_from_json(const std::string& text);

std::string params_to_json_text(const HyperParams& params);
HyperParams params_from_json_text(const std::string& text);

struct HoldoutConfig {
  double split = 0.9;
  std::size_t train_subset = 0;  // 0 = whole side
  std::size_t test_subset = 0;
  std::uint64_t seed = 0;
};

struct HoldoutSplit {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

// Chronological split at floor(split * n); optional seeded uniform subsets.
HoldoutSplit holdout_split(std::size_t n_rows, const HoldoutConfig& config);

struct HoldoutResult {
  double rmse = 0.0;
  std::vector<std::size_t> test_rows;
  std::vector<double> predicted;
  std::vector<double> actual;
};

HoldoutResult holdout_eval(const FeatureMatrix& x, std::span<const double> y,
                           const HoldoutConfig& config, const HyperParams& params,
                           ModelFamily family);

// Scores an already fitted model on the test side of the split.
HoldoutResult holdout_score(const EnsembleModel& model, const FeatureMatrix& x,
                            std::span<const double> y, const HoldoutConfig& config);

}  // namespace xferlag
