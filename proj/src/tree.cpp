#include <algorithm>
#include <cmath>
#include <numeric>

#include "xferlag/error.hpp"
#include "xferlag/models.hpp"

namespace xferlag {

double DecisionTree::predict(std::span<const double> row) const {
  if (nodes_.empty()) return 0.0;
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                         : n.right);
  }
  return nodes_[i].value;
}

int DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<int> d(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

TrainingColumns::TrainingColumns(const FeatureMatrix& x, std::span<const std::size_t> rows)
    : n_rows_(rows.size()), n_cols_(x.n_cols()) {
  values_.resize(n_rows_ * n_cols_);
  for (std::size_t r = 0; r < n_rows_; ++r) {
    const auto src = x.row(rows[r]);
    for (std::size_t c = 0; c < n_cols_; ++c) values_[c * n_rows_ + r] = src[c];
  }
  build_ranks();
}

TrainingColumns::TrainingColumns(std::span<const double> row_major, std::size_t n_rows,
                                 std::size_t n_cols)
    : n_rows_(n_rows), n_cols_(n_cols) {
  if (row_major.size() != n_rows * n_cols) throw InvalidArgument("matrix size mismatch");
  values_.resize(n_rows_ * n_cols_);
  for (std::size_t r = 0; r < n_rows_; ++r) {
    for (std::size_t c = 0; c < n_cols_; ++c) values_[c * n_rows_ + r] = row_major[r * n_cols + c];
  }
  build_ranks();
}

void TrainingColumns::build_ranks() {
  ranks_.resize(values_.size());
  levels_.resize(n_cols_);
  std::vector<double> sorted;
  for (std::size_t c = 0; c < n_cols_; ++c) {
    const double* col = values_.data() + c * n_rows_;
    sorted.assign(col, col + n_rows_);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (std::size_t r = 0; r < n_rows_; ++r) {
      ranks_[c * n_rows_ + r] = static_cast<std::uint32_t>(
          std::lower_bound(sorted.begin(), sorted.end(), col[r]) - sorted.begin());
    }
    levels_[c] = sorted;
  }
}

namespace {

struct SplitCandidate {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const TrainingColumns& x, std::span<const double> y, const TreeOptions& options,
              Rng& rng, std::vector<double>& gains)
      : x_(x), y_(y), options_(options), rng_(rng), gains_(gains) {
    const std::size_t k = options.max_features == 0 ? x.n_cols()
                                                    : std::min(options.max_features, x.n_cols());
    max_features_ = k;
  }

  DecisionTree build(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    nodes_.clear();
    grow(0, rows_.size(), 0);
    return DecisionTree(std::move(nodes_));
  }

 private:
  // Returns the index of the node created for rows_[begin, end).
  int grow(std::size_t begin, std::size_t end, int depth) {
    const std::size_t n = end - begin;
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += y_[rows_[i]];
    const double mean = n ? sum / static_cast<double>(n) : 0.0;

    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{});
    nodes_.back().value = mean;
    nodes_.back().n_samples = n;

    const auto min_leaf = static_cast<std::size_t>(options_.min_samples_leaf);
    if (depth >= options_.max_depth || n < static_cast<std::size_t>(options_.min_samples_split) ||
        n < 2 * min_leaf || n < 2) {
      return index;
    }
    const auto split = best_split(begin, end, mean);
    if (!split.found) return index;

    const auto mid_it =
        std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                              rows_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t r) {
                                return x_.value(split.feature, r) <= split.threshold;
                              });
    const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());
    gains_[split.feature] += split.gain;

    const int left = grow(begin, mid, depth + 1);
    const int right = grow(mid, end, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(index)];
    node.feature = static_cast<int>(split.feature);
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    node.gain = split.gain;
    return index;
  }

  std::vector<std::size_t> candidate_features() {
    if (max_features_ >= x_.n_cols()) {
      std::vector<std::size_t> all(x_.n_cols());
      std::iota(all.begin(), all.end(), std::size_t{0});
      return all;
    }
    return sample_without_replacement(rng_, x_.n_cols(), max_features_);
  }

  SplitCandidate best_split(std::size_t begin, std::size_t end, double mean) {
    const std::size_t n = end - begin;
    const auto min_leaf = static_cast<std::size_t>(options_.min_samples_leaf);

    // Squared error of the node around its mean; splits must beat rounding noise.
    double sse = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double d = y_[rows_[i]] - mean;
      sse += d * d;
    }
    const double min_gain = 1e-12 * sse;
    SplitCandidate best;
    if (!(sse > 0.0)) return best;

    for (const std::size_t f : candidate_features()) {
      const auto& levels = x_.levels(f);
      const std::size_t n_levels = levels.size();
      if (n_levels < 2) continue;

      // Per-distinct-value sums of centered targets, visited in value order.
      bins_.clear();
      if (n_levels <= 2 * n) {
        count_.assign(n_levels, 0);
        sum_.assign(n_levels, 0.0);
        for (std::size_t i = begin; i < end; ++i) {
          const auto r = rows_[i];
          const auto k = x_.rank(f, r);
          ++count_[k];
          sum_[k] += y_[r] - mean;
        }
        for (std::size_t k = 0; k < n_levels; ++k) {
          if (count_[k]) bins_.push_back({static_cast<std::uint32_t>(k), count_[k], sum_[k]});
        }
      } else {
        pairs_.clear();
        for (std::size_t i = begin; i < end; ++i) {
          const auto r = rows_[i];
          pairs_.emplace_back(x_.rank(f, r), y_[r] - mean);
        }
        std::sort(pairs_.begin(), pairs_.end());
        for (const auto& [k, v] : pairs_) {
          if (bins_.empty() || bins_.back().rank != k) bins_.push_back({k, 0, 0.0});
          ++bins_.back().count;
          bins_.back().sum += v;
        }
      }
      if (bins_.size() < 2) continue;

      double total = 0.0;
      for (const auto& b : bins_) total += b.sum;
      const double parent_term = total * total / static_cast<double>(n);

      std::size_t n_left = 0;
      double s_left = 0.0;
      for (std::size_t b = 0; b + 1 < bins_.size(); ++b) {
        n_left += bins_[b].count;
        s_left += bins_[b].sum;
        const std::size_t n_right = n - n_left;
        if (n_left < min_leaf) continue;
        if (n_right < min_leaf) break;
        const double s_right = total - s_left;
        const double gain = s_left * s_left / static_cast<double>(n_left) +
                            s_right * s_right / static_cast<double>(n_right) - parent_term;
        if (gain > min_gain && gain > best.gain) {
          const double lo = levels[bins_[b].rank];
          const double hi = levels[bins_[b + 1].rank];
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          best = {true, f, threshold, gain};
        }
      }
    }
    return best;
  }

  struct Bin {
    std::uint32_t rank;
    std::size_t count;
    double sum;
  };

  const TrainingColumns& x_;
  std::span<const double> y_;
  TreeOptions options_;
  Rng& rng_;
  std::vector<double>& gains_;
  std::size_t max_features_ = 0;
  std::vector<std::size_t> rows_;
  std::vector<TreeNode> nodes_;
  std::vector<Bin> bins_;
  std::vector<std::size_t> count_;
  std::vector<double> sum_;
  std::vector<std::pair<std::uint32_t, double>> pairs_;
};

}  // namespace

DecisionTree fit_tree(const TrainingColumns& x, std::span<const double> y,
                      std::span<const std::size_t> rows, const TreeOptions& options, Rng& rng,
                      std::vector<double>& gain_per_feature) {
  if (y.size() != x.n_rows()) throw InvalidArgument("target length does not match rows");
  if (rows.empty()) throw InvalidArgument("cannot fit a tree on zero rows");
  if (gain_per_feature.size() != x.n_cols()) gain_per_feature.assign(x.n_cols(), 0.0);
  TreeBuilder builder(x, y, options, rng, gain_per_feature);
  return builder.build(std::vector<std::size_t>(rows.begin(), rows.end()));
}

}  // namespace xferlag
