#include <algorithm>
#include <map>

#include "xferlag/error.hpp"
#include "xferlag/features.hpp"

namespace xferlag {
namespace {

constexpr std::array<std::pair<FeatureGroup, std::string_view>, 8> kGroupNames = {{
    {FeatureGroup::A, "A"},
    {FeatureGroup::B, "B"},
    {FeatureGroup::C1, "C1"},
    {FeatureGroup::C2, "C2"},
    {FeatureGroup::D1, "D1"},
    {FeatureGroup::D2, "D2"},
    {FeatureGroup::D3, "D3"},
    {FeatureGroup::E, "E"},
}};

// D1: lag-1 rate and time gap on these keys, plus overall lag 1 (rate, size)
// and overall lag 5 (rate).
constexpr std::array<LagKeyKind, 4> kD1Kinds = {LagKeyKind::SameInstrument,
                                                LagKeyKind::SameExperiment,
                                                LagKeyKind::SameSourceFs, LagKeyKind::SameTargetFs};

// D3: lag-1 rate, size and time gap on every resource the transfer touches.
constexpr std::array<LagKeyKind, 7> kD3Kinds = {
    LagKeyKind::SameInstrument, LagKeyKind::SameExperiment, LagKeyKind::SameSourceFs,
    LagKeyKind::SameTargetFs,   LagKeyKind::SameTargetHost, LagKeyKind::SameNode,
    LagKeyKind::SameChunk};

constexpr std::array<LagKeyKind, 3> kC2Kinds = {LagKeyKind::SameTargetFs,
                                                LagKeyKind::SameTargetHost, LagKeyKind::SameNode};

enum class LagStat { Rate, FileSize, TimeDiff };

std::string_view stat_name(LagStat s) {
  switch (s) {
    case LagStat::Rate: return "rate";
    case LagStat::FileSize: return "file_size";
    case LagStat::TimeDiff: return "time_diff";
  }
  return "";
}

// Collects columns column-major, then transposes.
class ColumnSink {
 public:
  explicit ColumnSink(std::size_t n_rows) : n_rows_(n_rows) {}

  std::size_t add(ColumnMeta meta, std::vector<double> values,
                  std::vector<std::uint8_t> missing = {}) {
    if (missing.empty()) missing.assign(n_rows_, 0);
    meta_.push_back(std::move(meta));
    values_.push_back(std::move(values));
    missing_.push_back(std::move(missing));
    return meta_.size() - 1;
  }

  ColumnMeta& meta(std::size_t col) { return meta_[col]; }

  void finish(FeatureMatrix& m) {
    const std::size_t n_cols = meta_.size();
    m.columns = std::move(meta_);
    m.values.assign(n_rows_ * n_cols, 0.0);
    m.missing.assign(n_rows_ * n_cols, 0);
    for (std::size_t c = 0; c < n_cols; ++c) {
      for (std::size_t r = 0; r < n_rows_; ++r) {
        m.values[r * n_cols + c] = values_[c][r];
        m.missing[r * n_cols + c] = missing_[c][r];
      }
    }
  }

 private:
  std::size_t n_rows_;
  std::vector<ColumnMeta> meta_;
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<std::uint8_t>> missing_;
};

std::string column_name(FeatureGroup g, std::string_view rest) {
  return std::string(to_string(g)) + "." + std::string(rest);
}

class LagCache {
 public:
  explicit LagCache(const EventLog& events) : events_(events) {}

  void request(LagKeyKind kind, std::size_t order) { wanted_[kind].insert(order); }

  const LagTable& get(LagKeyKind kind) {
    auto it = tables_.find(kind);
    if (it == tables_.end()) {
      it = tables_.emplace(kind, compute_keyed_lags(events_, kind, wanted_.at(kind))).first;
    }
    return it->second;
  }

 private:
  const EventLog& events_;
  std::map<LagKeyKind, std::set<std::size_t>> wanted_;
  std::map<LagKeyKind, LagTable> tables_;
};

// Emits lag columns for one (kind, order); the indicator is added once per
// (kind, order) across groups and shared by later stats.
class LagEmitter {
 public:
  LagEmitter(ColumnSink& sink, LagCache& cache, std::size_t n_rows)
      : sink_(sink), cache_(cache), n_rows_(n_rows) {}

  bool emitted(LagKeyKind kind, std::size_t order, LagStat stat) const {
    return done_.count({kind, order, stat}) > 0;
  }

  void emit(FeatureGroup group, LagKeyKind kind, std::size_t order,
            std::initializer_list<LagStat> stats) {
    const auto& table = cache_.get(kind);
    const std::string prefix =
        std::string(to_string(kind)) + ".lag" + std::to_string(order) + ".";
    std::vector<std::uint8_t> miss(n_rows_, 0);
    for (std::size_t r = 0; r < n_rows_; ++r) miss[r] = table.at(r, order).present ? 0 : 1;

    std::vector<std::size_t> new_cols;
    for (LagStat stat : stats) {
      if (emitted(kind, order, stat)) continue;
      std::vector<double> v(n_rows_, kMissingSentinel);
      for (std::size_t r = 0; r < n_rows_; ++r) {
        const auto& cell = table.at(r, order);
        if (!cell.present) continue;
        switch (stat) {
          case LagStat::Rate: v[r] = cell.transfer_rate; break;
          case LagStat::FileSize: v[r] = cell.file_size; break;
          case LagStat::TimeDiff: v[r] = static_cast<double>(cell.time_diff); break;
        }
      }
      new_cols.push_back(sink_.add(
          ColumnMeta{column_name(group, prefix + std::string(stat_name(stat))), group, "lag", {}},
          std::move(v), miss));
      done_.insert({kind, order, stat});
    }
    if (new_cols.empty()) return;

    auto ind = indicators_.find({kind, order});
    if (ind == indicators_.end()) {
      std::vector<double> flag(n_rows_);
      for (std::size_t r = 0; r < n_rows_; ++r) flag[r] = miss[r];
      const auto col = sink_.add(
          ColumnMeta{column_name(group, prefix + "missing"), group, "missing_indicator", {}},
          std::move(flag));
      ind = indicators_.emplace(std::make_pair(kind, order), col).first;
    }
    for (auto c : new_cols) sink_.meta(c).indicator = ind->second;
  }

 private:
  ColumnSink& sink_;
  LagCache& cache_;
  std::size_t n_rows_;
  std::set<std::tuple<LagKeyKind, std::size_t, LagStat>> done_;
  std::map<std::pair<LagKeyKind, std::size_t>, std::size_t> indicators_;
};

}  // namespace

std::string_view to_string(FeatureGroup group) {
  for (const auto& [g, name] : kGroupNames) {
    if (g == group) return name;
  }
  return "?";
}

FeatureGroup parse_feature_group(std::string_view text) {
  for (const auto& [g, name] : kGroupNames) {
    if (name == text) return g;
  }
  throw InvalidArgument("unknown feature group '" + std::string(text) + "'");
}

FeatureSpec parse_feature_spec(std::string_view groups, std::int64_t utc_offset_seconds) {
  FeatureSpec spec;
  spec.groups.clear();
  spec.utc_offset_seconds = utc_offset_seconds;
  std::size_t pos = 0;
  while (pos <= groups.size()) {
    const auto comma = std::min(groups.find(',', pos), groups.size());
    auto token = groups.substr(pos, comma - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (!token.empty()) spec.groups.insert(parse_feature_group(token));
    pos = comma + 1;
  }
  if (spec.groups.empty()) throw InvalidArgument("no feature groups given");
  return spec;
}

std::string format_groups(const FeatureSpec& spec) {
  std::string out;
  for (auto g : spec.groups) {
    if (!out.empty()) out.push_back(',');
    out.append(to_string(g));
  }
  return out;
}

std::vector<std::string> FeatureMatrix::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

std::optional<std::size_t> FeatureMatrix::find_column(std::string_view name) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].name == name) return c;
  }
  return std::nullopt;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  FeatureMatrix out;
  out.columns = columns;
  out.spec = spec;
  out.vocabulary = vocabulary;
  out.n_rows = rows.size();
  const std::size_t nc = n_cols();
  out.values.reserve(rows.size() * nc);
  out.missing.reserve(rows.size() * nc);
  for (auto r : rows) {
    if (r >= n_rows) throw InvalidArgument("row index out of range");
    out.values.insert(out.values.end(), values.begin() + r * nc, values.begin() + (r + 1) * nc);
    out.missing.insert(out.missing.end(), missing.begin() + r * nc, missing.begin() + (r + 1) * nc);
    out.event_ids.push_back(event_ids[r]);
    out.start_times.push_back(start_times[r]);
    out.targets.push_back(targets[r]);
  }
  return out;
}

FeatureMatrix assemble_features(const EventLog& events, const FeatureSpec& spec,
                                const CategoryVocabulary* vocab) {
  if (!spec.groups.count(FeatureGroup::A)) {
    throw InvalidArgument("feature spec must include group A");
  }
  if (!is_sorted_by_start(events)) {
    throw PreconditionError("assemble_features: events must be sorted by start time");
  }
  const std::size_t n = events.size();
  const auto has = [&](FeatureGroup g) { return spec.groups.count(g) > 0; };

  FeatureMatrix m;
  m.n_rows = n;
  m.spec = spec;
  m.vocabulary = vocab ? *vocab : fit_vocabulary(events, n);
  for (const auto& e : events) {
    m.event_ids.push_back(e.id);
    m.start_times.push_back(e.start_time);
    m.targets.push_back(e.transfer_rate);
  }

  ColumnSink sink(n);

  // A: static record fields.
  {
    std::vector<double> size(n);
    for (std::size_t i = 0; i < n; ++i) size[i] = events[i].file_size;
    sink.add({"A.file_size", FeatureGroup::A, "numeric", {}}, std::move(size));

    const auto enc = encode_categoricals(events, m.vocabulary);
    std::vector<double> code(n);
    for (std::size_t i = 0; i < n; ++i) code[i] = static_cast<double>(enc.experiment_code[i]);
    sink.add({"A.experiment_code", FeatureGroup::A, "category_code", {}}, std::move(code));

    for (const auto& block : enc.one_hot) {
      const std::size_t width = block.levels.size();
      for (std::size_t k = 0; k < width; ++k) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = block.values[i * width + k];
        sink.add({"A." + block.field + "." + block.levels[k], FeatureGroup::A,
                  "one_hot:" + block.field, {}},
                 std::move(col));
      }
    }
  }

  // B: calendar.
  if (has(FeatureGroup::B)) {
    std::vector<double> dow(n), hour(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto t = compute_time_features(events[i], spec.utc_offset_seconds);
      dow[i] = t.day_of_week;
      hour[i] = t.hour_of_day;
    }
    sink.add({"B.day_of_week", FeatureGroup::B, "calendar", {}}, std::move(dow));
    sink.add({"B.hour_of_day", FeatureGroup::B, "calendar", {}}, std::move(hour));
  }

  const auto to_doubles = [](const std::vector<std::uint32_t>& v) {
    return std::vector<double>(v.begin(), v.end());
  };

  // C1: active transfers on the same experiment / instrument.
  if (has(FeatureGroup::C1)) {
    for (auto kind : {LagKeyKind::SameExperiment, LagKeyKind::SameInstrument}) {
      const auto counts = compute_concurrency(events, kind);
      sink.add({column_name(FeatureGroup::C1, std::string(to_string(kind)) + ".active_jobs"),
                FeatureGroup::C1, "count", {}},
               to_doubles(counts.active_jobs));
    }
  }

  // C2: active transfers and distinct experiments on the target side.
  if (has(FeatureGroup::C2)) {
    for (auto kind : kC2Kinds) {
      const auto counts = compute_concurrency(events, kind);
      const std::string base = std::string(to_string(kind));
      sink.add({column_name(FeatureGroup::C2, base + ".active_jobs"), FeatureGroup::C2, "count", {}},
               to_doubles(counts.active_jobs));
      sink.add({column_name(FeatureGroup::C2, base + ".unique_experiments"), FeatureGroup::C2,
                "count", {}},
               to_doubles(counts.unique_experiments));
    }
  }

  LagCache cache(events);
  if (has(FeatureGroup::D1)) {
    for (auto kind : kD1Kinds) cache.request(kind, 1);
    cache.request(LagKeyKind::Overall, 1);
    cache.request(LagKeyKind::Overall, 5);
  }
  if (has(FeatureGroup::D2)) {
    for (std::size_t l = 1; l <= kD2LagCount; ++l) cache.request(LagKeyKind::SameExperiment, l);
  }
  if (has(FeatureGroup::D3)) {
    for (auto kind : kD3Kinds) cache.request(kind, 1);
  }
  LagEmitter lags(sink, cache, n);

  if (has(FeatureGroup::D1)) {
    for (auto kind : kD1Kinds) {
      lags.emit(FeatureGroup::D1, kind, 1, {LagStat::Rate, LagStat::TimeDiff});
    }
    lags.emit(FeatureGroup::D1, LagKeyKind::Overall, 1, {LagStat::Rate, LagStat::FileSize});
    lags.emit(FeatureGroup::D1, LagKeyKind::Overall, 5, {LagStat::Rate});
  }
  if (has(FeatureGroup::D2)) {
    for (std::size_t l = 1; l <= kD2LagCount; ++l) {
      lags.emit(FeatureGroup::D2, LagKeyKind::SameExperiment, l, {LagStat::Rate});
    }
  }
  if (has(FeatureGroup::D3)) {
    for (auto kind : kD3Kinds) {
      lags.emit(FeatureGroup::D3, kind, 1, {LagStat::Rate, LagStat::FileSize, LagStat::TimeDiff});
    }
  }

  // E: offset from the first transfer of the chunk.
  if (has(FeatureGroup::E)) {
    const auto offsets = compute_chunk_time_offset(events);
    std::vector<double> v(n, kMissingSentinel), flag(n, 0.0);
    std::vector<std::uint8_t> miss(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (offsets[i]) {
        v[i] = static_cast<double>(*offsets[i]);
      } else {
        miss[i] = 1;
        flag[i] = 1.0;
      }
    }
    const auto col = sink.add({"E.chunk_time_offset", FeatureGroup::E, "offset", {}},
                              std::move(v), std::move(miss));
    const auto ind = sink.add(
        {"E.chunk_time_offset.missing", FeatureGroup::E, "missing_indicator", {}}, std::move(flag));
    sink.meta(col).indicator = ind;
  }

  sink.finish(m);
  return m;
}

}  // namespace xferlag
