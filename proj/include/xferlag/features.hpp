#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xferlag/event.hpp"

namespace xferlag {

// ---------------------------------------------------------------------------
// Keyed lags and concurrency
// ---------------------------------------------------------------------------

enum class LagKeyKind {
  Overall,
  SameInstrument,
  SameExperiment,
  SameSourceFs,
  SameTargetFs,
  SameTargetHost,
  SameNode,
  SameChunk,  // (experiment_num, run_num, chunk_num) from the file name
};

inline constexpr std::array<LagKeyKind, 8> kAllLagKeyKinds = {
    LagKeyKind::Overall,      LagKeyKind::SameInstrument, LagKeyKind::SameExperiment,
    LagKeyKind::SameSourceFs, LagKeyKind::SameTargetFs,   LagKeyKind::SameTargetHost,
    LagKeyKind::SameNode,     LagKeyKind::SameChunk};

std::string_view to_string(LagKeyKind kind);

inline constexpr std::int64_t kUnkeyed = -1;

// Dense key id per event (first-appearance order), or kUnkeyed when the event
// has no key under `kind` (only possible for SameChunk with a bad file name).
std::vector<std::int64_t> assign_keys(const EventLog& events, LagKeyKind kind);

struct LagInfo {
  bool present = false;
  double transfer_rate = 0.0;
  double file_size = 0.0;
  std::int64_t time_diff = 0;  // current.start_time - lag.stop_time, > 0 when present
  std::size_t event_id = 0;    // id of the lag event when present

  friend bool operator==(const LagInfo&, const LagInfo&) = default;
};

// Row-major table of lags: one entry per (event, requested order).
class LagTable {
 public:
  LagTable() = default;
  LagTable(std::size_t n_events, std::vector<std::size_t> orders)
      : orders_(std::move(orders)), cells_(n_events * orders_.size()) {}

  const std::vector<std::size_t>& orders() const noexcept { return orders_; }
  std::size_t n_events() const noexcept {
    return orders_.empty() ? 0 : cells_.size() / orders_.size();
  }

  // `order` must be one of orders().
  const LagInfo& at(std::size_t event, std::size_t order) const;
  LagInfo& cell(std::size_t event, std::size_t order_pos) {
    return cells_[event * orders_.size() + order_pos];
  }

 private:
  std::vector<std::size_t> orders_;
  std::vector<LagInfo> cells_;
};

// For each event i and order l: the l-th most recently finished event j sharing
// i's key, ranked by stop_time descending (ties: larger id first), restricted to
// stop_time(j) < start_time(i). Single sweep with a completion queue,
// O(n log n). Throws PreconditionError when `events` is not start-sorted.
LagTable compute_keyed_lags(const EventLog& events, LagKeyKind kind,
                            const std::set<std::size_t>& orders);

struct ConcurrencyCounts {
  std::vector<std::uint32_t> active_jobs;
  std::vector<std::uint32_t> unique_experiments;
};

// Count of other events j with the same key and start(j) <= start(i) < stop(j),
// plus the number of distinct experiments among them. Unkeyed events get 0.
ConcurrencyCounts compute_concurrency(const EventLog& events, LagKeyKind kind);

// ---------------------------------------------------------------------------
// Calendar and chunk timing
// ---------------------------------------------------------------------------

struct CalendarFeatures {
  int day_of_week = 0;  // 0 = Monday
  int hour_of_day = 0;

  friend bool operator==(const CalendarFeatures&, const CalendarFeatures&) = default;
};

CalendarFeatures compute_time_features(const TransferEvent& event,
                                       std::int64_t utc_offset_seconds = 0);

// start_time minus the earliest start_time among events of the same
// (experiment_num, run_num, chunk_num); nullopt when the file name is malformed.
std::vector<std::optional<std::int64_t>> compute_chunk_time_offset(const EventLog& events);

// ---------------------------------------------------------------------------
// Categorical encoding
// ---------------------------------------------------------------------------

// Category sets for the one-hot blocks (sorted) and experiment codes (first
// appearance). Fitted on the training rows and frozen afterwards.
struct CategoryVocabulary {
  std::vector<std::string> instrument;
  std::vector<std::string> source_fs;
  std::vector<std::string> target_fs;
  std::vector<std::string> target_host;
  std::vector<std::string> node;
  std::vector<std::string> experiments;

  friend bool operator==(const CategoryVocabulary&, const CategoryVocabulary&) = default;
};

// Fits on the first `n_fit` events (all of them when n_fit exceeds the size).
CategoryVocabulary fit_vocabulary(const EventLog& events, std::size_t n_fit);

struct CategoricalBlock {
  std::string field;                // e.g. "instrument"
  std::vector<std::string> levels;  // one column per level
  std::vector<std::uint8_t> values; // row-major n_events x levels.size(), 0/1
};

struct CategoricalEncoding {
  std::vector<CategoricalBlock> one_hot;     // instrument, source_fs, target_fs, target_host, node
  std::vector<std::int64_t> experiment_code; // vocabulary index, new experiments continue the sequence
};

// Values outside the vocabulary yield an all-zero one-hot row.
CategoricalEncoding encode_categoricals(const EventLog& events, const CategoryVocabulary& vocab);

// ---------------------------------------------------------------------------
// Feature assembly
// ---------------------------------------------------------------------------

enum class FeatureGroup { A, B, C1, C2, D1, D2, D3, E };

std::string_view to_string(FeatureGroup group);
FeatureGroup parse_feature_group(std::string_view text);

struct FeatureSpec {
  std::set<FeatureGroup> groups = {FeatureGroup::A};
  std::int64_t utc_offset_seconds = 0;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

// Parses "A,B,C2,D1" style lists. Throws InvalidArgument on unknown names.
FeatureSpec parse_feature_spec(std::string_view groups, std::int64_t utc_offset_seconds = 0);
std::string format_groups(const FeatureSpec& spec);

inline constexpr double kMissingSentinel = -1.0;
inline constexpr std::size_t kD2LagCount = 20;

struct ColumnMeta {
  std::string name;    // "<group>.<feature>", e.g. "D1.same_experiment.lag1.rate"
  FeatureGroup group = FeatureGroup::A;
  std::string origin;  // "numeric", "one_hot:<field>", "category_code", "count", "calendar",
                       // "lag", "offset" or "missing_indicator"
  std::optional<std::size_t> indicator;  // column holding this column's missing flag

  friend bool operator==(const ColumnMeta&, const ColumnMeta&) = default;
};

struct FeatureMatrix {
  std::size_t n_rows = 0;
  std::vector<ColumnMeta> columns;
  std::vector<double> values;          // row-major n_rows x n_cols
  std::vector<std::uint8_t> missing;   // row-major, 1 where a sentinel was written
  std::vector<std::size_t> event_ids;
  std::vector<std::int64_t> start_times;
  std::vector<double> targets;         // transfer_rate of each row's event
  FeatureSpec spec;
  CategoryVocabulary vocabulary;

  std::size_t n_cols() const noexcept { return columns.size(); }
  double at(std::size_t row, std::size_t col) const { return values[row * n_cols() + col]; }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * n_cols(), n_cols()};
  }
  std::vector<std::string> column_names() const;
  std::optional<std::size_t> find_column(std::string_view name) const;

  // Rows at `rows`, in that order.
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

// Builds the matrix for cleaned, start-sorted events. Columns follow a fixed
// order (A, B, C1, C2, D1, D2, D3, E). When `vocab` is null the vocabulary is
// fitted on all events. Missing lag cells hold -1 with a paired 0/1 indicator.
// Throws InvalidArgument when group A is disabled and PreconditionError when
// events are not sorted.
FeatureMatrix assemble_features(const EventLog& events, const FeatureSpec& spec,
                                const CategoryVocabulary* vocab = nullptr);

// Feature CSV: `event_id,start_time,transfer_rate_mbs,<columns...>`; the sidecar
// JSON carries column metadata, the spec and the frozen vocabulary.
void save_feature_matrix(const FeatureMatrix& matrix, const std::string& csv_path,
                         const std::string& meta_path);
FeatureMatrix load_feature_matrix(const std::string& csv_path, const std::string& meta_path);
std::string feature_meta_json(const FeatureMatrix& matrix);
CategoryVocabulary vocabulary_from_meta_json(const std::string& json_text);

}  // namespace xferlag
