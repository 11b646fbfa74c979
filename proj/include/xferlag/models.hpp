#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xferlag/features.hpp"
#include "xferlag/random.hpp"

namespace xferlag {

struct HyperParams {
  double learning_rate = 0.1;
  int n_estimators = 100;
  int max_depth = 6;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  // 0: every feature; >= 1: rounded count of candidate features per split;
  // otherwise the fraction of features.
  double max_features = 0.0;
  double subsample = 1.0;
  std::uint64_t seed = 0;
  // Random forest only: draw each tree's rows with replacement.
  bool bootstrap = true;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

// Candidate features per split for `n_features` columns. Throws InvalidArgument
// when the rounded count exceeds n_features.
std::size_t resolve_max_features(double max_features, std::size_t n_features);

// Throws InvalidArgument on any out-of-range knob.
void validate(const HyperParams& params, std::size_t n_features);

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;  // rows with x <= threshold go left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output
  double gain = 0.0;   // squared-error reduction of the split
  std::size_t n_samples = 0;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> row) const;
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  int depth() const;
  std::size_t leaf_count() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

// Column-major copy of selected rows, with per-column value ranks used by the
// exact split search.
class TrainingColumns {
 public:
  TrainingColumns(const FeatureMatrix& x, std::span<const std::size_t> rows);
  TrainingColumns(std::span<const double> row_major, std::size_t n_rows, std::size_t n_cols);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  double value(std::size_t col, std::size_t row) const { return values_[col * n_rows_ + row]; }
  std::uint32_t rank(std::size_t col, std::size_t row) const { return ranks_[col * n_rows_ + row]; }
  const std::vector<double>& levels(std::size_t col) const { return levels_[col]; }

 private:
  void build_ranks();

  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<double> values_;
  std::vector<std::uint32_t> ranks_;
  std::vector<std::vector<double>> levels_;  // sorted distinct values per column
};

struct TreeOptions {
  int max_depth = 6;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0 = all
};

// Least-squares CART on `rows` (indices into `x`, repeats allowed). Exact greedy
// search over distinct thresholds; a split is kept only if it reduces the
// squared error. Adds each split's gain to gain_per_feature.
DecisionTree fit_tree(const TrainingColumns& x, std::span<const double> y,
                      std::span<const std::size_t> rows, const TreeOptions& options, Rng& rng,
                      std::vector<double>& gain_per_feature);

enum class ModelFamily { Gbt, Rf };

std::string_view to_string(ModelFamily family);
ModelFamily parse_model_family(std::string_view text);

struct EnsembleModel {
  ModelFamily family = ModelFamily::Gbt;
  HyperParams params;
  std::vector<DecisionTree> trees;
  double base_prediction = 0.0;  // GBT: training target mean; RF: 0
  std::vector<std::string> feature_names;
  std::vector<double> importances;
  bool importances_valid = false;  // false when the model made no split at all
  // GBT only: training MSE before the first tree and after each tree.
  std::vector<double> training_loss;

  friend bool operator==(const EnsembleModel&, const EnsembleModel&) = default;
};

using GbtModel = EnsembleModel;
using RfModel = EnsembleModel;

// Stagewise least-squares boosting with shrinkage, optional row subsampling and
// per-split feature subsampling. Throws InvalidArgument on degenerate input.
GbtModel fit_gbt(const FeatureMatrix& x, std::span<const double> y, const HyperParams& params);
GbtModel fit_gbt(const FeatureMatrix& x, std::span<const double> y,
                 std::span<const std::size_t> rows, const HyperParams& params);

// Bagged CART: bootstrap (or plain subsample) per tree, mean over trees.
RfModel fit_rf(const FeatureMatrix& x, std::span<const double> y, const HyperParams& params);
RfModel fit_rf(const FeatureMatrix& x, std::span<const double> y,
               std::span<const std::size_t> rows, const HyperParams& params);

EnsembleModel fit_model(ModelFamily family, const FeatureMatrix& x, std::span<const double> y,
                        std::span<const std::size_t> rows, const HyperParams& params);

double predict_raw(const EnsembleModel& model, std::span<const double> row);

// Clamped at zero. Throws InvalidArgument when x's columns differ from the
// training columns.
std::vector<double> predict(const EnsembleModel& model, const FeatureMatrix& x);
std::vector<double> predict(const EnsembleModel& model, const FeatureMatrix& x,
                            std::span<const std::size_t> rows);

struct FeatureImportance {
  std::string name;
  double share = 0.0;
};

// Normalized split gain per feature, in column order.
std::vector<FeatureImportance> feature_importance(const EnsembleModel& model);
// Same, sorted by descending share (ties by column order).
std::vector<FeatureImportance> ranked_importance(const EnsembleModel& model);

std::string model_to_json(const EnsembleModel& model);
EnsembleModel model_from_json(const std::string& text);
void save_model(const EnsembleModel& model, const std::string& path);
EnsembleModel load_model(const std::string& path);

}  // namespace xferlag
