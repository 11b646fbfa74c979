#include "xferlag/features.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <queue>
#include <tuple>
#include <unordered_map>

#include "xferlag/error.hpp"
#include "xferlag/filename.hpp"

namespace xferlag {
namespace {

void require_sorted(const EventLog& events, std::string_view what) {
  if (!is_sorted_by_start(events)) {
    throw PreconditionError(std::string(what) + ": events must be sorted by start time");
  }
}

const std::string& string_key(const TransferEvent& e, LagKeyKind kind) {
  switch (kind) {
    case LagKeyKind::SameInstrument: return e.instrument;
    case LagKeyKind::SameExperiment: return e.experiment;
    case LagKeyKind::SameSourceFs: return e.source_fs;
    case LagKeyKind::SameTargetFs: return e.target_fs;
    case LagKeyKind::SameTargetHost: return e.target_host;
    case LagKeyKind::SameNode: return e.node;
    default: break;
  }
  throw InvalidArgument("no string key for lag kind");
}

}  // namespace

std::string_view to_string(LagKeyKind kind) {
  switch (kind) {
    case LagKeyKind::Overall: return "overall";
    case LagKeyKind::SameInstrument: return "same_instrument";
    case LagKeyKind::SameExperiment: return "same_experiment";
    case LagKeyKind::SameSourceFs: return "same_source_fs";
    case LagKeyKind::SameTargetFs: return "same_target_fs";
    case LagKeyKind::SameTargetHost: return "same_target_host";
    case LagKeyKind::SameNode: return "same_node";
    case LagKeyKind::SameChunk: return "same_chunk";
  }
  return "unknown";
}

std::vector<std::int64_t> assign_keys(const EventLog& events, LagKeyKind kind) {
  std::vector<std::int64_t> keys(events.size(), 0);
  if (kind == LagKeyKind::Overall) return keys;

  if (kind == LagKeyKind::SameChunk) {
    std::map<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>, std::int64_t> ids;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto parts = try_parse_filename(events[i].file_name);
      if (!parts) {
        keys[i] = kUnkeyed;
        continue;
      }
      const auto key = std::make_tuple(parts->experiment_num, parts->run_num, parts->chunk_num);
      keys[i] = ids.try_emplace(key, static_cast<std::int64_t>(ids.size())).first->second;
    }
    return keys;
  }

  std::unordered_map<std::string, std::int64_t> ids;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& value = string_key(events[i], kind);
    keys[i] = ids.try_emplace(value, static_cast<std::int64_t>(ids.size())).first->second;
  }
  return keys;
}

const LagInfo& LagTable::at(std::size_t event, std::size_t order) const {
  const auto it = std::find(orders_.begin(), orders_.end(), order);
  if (it == orders_.end()) throw InvalidArgument("lag order not computed");
  return cells_[event * orders_.size() + static_cast<std::size_t>(it - orders_.begin())];
}

LagTable compute_keyed_lags(const EventLog& events, LagKeyKind kind,
                            const std::set<std::size_t>& orders) {
  require_sorted(events, "compute_keyed_lags");
  if (orders.empty() || *orders.begin() == 0) {
    throw InvalidArgument("lag orders must be a non-empty set of positive integers");
  }
  LagTable table(events.size(), std::vector<std::size_t>(orders.begin(), orders.end()));
  const auto keys = assign_keys(events, kind);
  const auto n_keys = static_cast<std::size_t>(
      std::max<std::int64_t>(0, keys.empty() ? 0 : *std::max_element(keys.begin(), keys.end()) + 1));

  // Started but not yet finished, ordered by (stop_time, id).
  using Pending = std::pair<std::pair<std::int64_t, std::size_t>, std::size_t>;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending;
  // Per key, finished events in ascending (stop_time, id); the back is lag 1.
  std::vector<std::vector<std::size_t>> finished(n_keys);

  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& current = events[i];
    while (!pending.empty() && pending.top().first.first < current.start_time) {
      const std::size_t j = pending.top().second;
      pending.pop();
      if (keys[j] != kUnkeyed) finished[static_cast<std::size_t>(keys[j])].push_back(j);
    }
    if (keys[i] != kUnkeyed) {
      const auto& history = finished[static_cast<std::size_t>(keys[i])];
      for (std::size_t p = 0; p < table.orders().size(); ++p) {
        const std::size_t order = table.orders()[p];
        if (history.size() < order) break;
        const auto& lag = events[history[history.size() - order]];
        auto& cell = table.cell(i, p);
        cell.present = true;
        cell.transfer_rate = lag.transfer_rate;
        cell.file_size = lag.file_size;
        cell.time_diff = current.start_time - lag.stop_time;
        cell.event_id = lag.id;
      }
    }
    pending.push({{current.stop_time, current.id}, i});
  }
  return table;
}

ConcurrencyCounts compute_concurrency(const EventLog& events, LagKeyKind kind) {
  require_sorted(events, "compute_concurrency");
  const auto keys = assign_keys(events, kind);
  const auto experiments = assign_keys(events, LagKeyKind::SameExperiment);
  const auto n_keys = static_cast<std::size_t>(
      std::max<std::int64_t>(0, keys.empty() ? 0 : *std::max_element(keys.begin(), keys.end()) + 1));

  struct Active {
    std::priority_queue<std::pair<std::int64_t, std::size_t>,
                        std::vector<std::pair<std::int64_t, std::size_t>>, std::greater<>>
        by_stop;
    std::unordered_map<std::int64_t, std::uint32_t> per_experiment;
  };
  std::vector<Active> active(n_keys);

  ConcurrencyCounts counts;
  counts.active_jobs.assign(events.size(), 0);
  counts.unique_experiments.assign(events.size(), 0);

  std::size_t group_begin = 0;
  while (group_begin < events.size()) {
    const std::int64_t start = events[group_begin].start_time;
    std::size_t group_end = group_begin;
    while (group_end < events.size() && events[group_end].start_time == start) ++group_end;

    // Events sharing this start time see each other.
    for (std::size_t i = group_begin; i < group_end; ++i) {
      if (keys[i] == kUnkeyed) continue;
      auto& a = active[static_cast<std::size_t>(keys[i])];
      a.by_stop.emplace(events[i].stop_time, i);
      ++a.per_experiment[experiments[i]];
    }
    for (std::size_t i = group_begin; i < group_end; ++i) {
      if (keys[i] == kUnkeyed) continue;
      auto& a = active[static_cast<std::size_t>(keys[i])];
      while (!a.by_stop.empty() && a.by_stop.top().first <= start) {
        const std::size_t j = a.by_stop.top().second;
        a.by_stop.pop();
        const auto it = a.per_experiment.find(experiments[j]);
        if (--it->second == 0) a.per_experiment.erase(it);
      }
      const bool self_active = events[i].stop_time > start;
      auto total = static_cast<std::uint32_t>(a.by_stop.size());
      auto unique = static_cast<std::uint32_t>(a.per_experiment.size());
      if (self_active) {
        --total;
        if (a.per_experiment.at(experiments[i]) == 1) --unique;
      }
      counts.active_jobs[i] = total;
      counts.unique_experiments[i] = unique;
    }
    group_begin = group_end;
  }
  return counts;
}

CalendarFeatures compute_time_features(const TransferEvent& event,
                                       std::int64_t utc_offset_seconds) {
  using namespace std::chrono;
  const sys_seconds local{seconds{event.start_time + utc_offset_seconds}};
  const auto day = floor<days>(local);
  const weekday wd{day};
  CalendarFeatures out;
  out.day_of_week = static_cast<int>(wd.iso_encoding()) - 1;
  out.hour_of_day = static_cast<int>(duration_cast<hours>(local - day).count());
  return out;
}

std::vector<std::optional<std::int64_t>> compute_chunk_time_offset(const EventLog& events) {
  const auto keys = assign_keys(events, LagKeyKind::SameChunk);
  std::unordered_map<std::int64_t, std::int64_t> first_start;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (keys[i] == kUnkeyed) continue;
    auto [it, inserted] = first_start.try_emplace(keys[i], events[i].start_time);
    if (!inserted) it->second = std::min(it->second, events[i].start_time);
  }
  std::vector<std::optional<std::int64_t>> out(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (keys[i] == kUnkeyed) continue;
    out[i] = events[i].start_time - first_start.at(keys[i]);
  }
  return out;
}

CategoryVocabulary fit_vocabulary(const EventLog& events, std::size_t n_fit) {
  const std::size_t n = std::min(n_fit, events.size());
  std::set<std::string> instrument, source_fs, target_fs, target_host, node;
  CategoryVocabulary vocab;
  std::set<std::string> seen_experiments;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = events[i];
    instrument.insert(e.instrument);
    source_fs.insert(e.source_fs);
    target_fs.insert(e.target_fs);
    target_host.insert(e.target_host);
    node.insert(e.node);
    if (seen_experiments.insert(e.experiment).second) vocab.experiments.push_back(e.experiment);
  }
  vocab.instrument.assign(instrument.begin(), instrument.end());
  vocab.source_fs.assign(source_fs.begin(), source_fs.end());
  vocab.target_fs.assign(target_fs.begin(), target_fs.end());
  vocab.target_host.assign(target_host.begin(), target_host.end());
  vocab.node.assign(node.begin(), node.end());
  return vocab;
}

CategoricalEncoding encode_categoricals(const EventLog& events, const CategoryVocabulary& vocab) {
  CategoricalEncoding enc;
  const auto add_block = [&](std::string field, const std::vector<std::string>& levels,
                             std::string TransferEvent::*member) {
    CategoricalBlock block;
    block.field = std::move(field);
    block.levels = levels;
    block.values.assign(events.size() * levels.size(), 0);
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto it = std::lower_bound(levels.begin(), levels.end(), events[i].*member);
      if (it != levels.end() && *it == events[i].*member) {
        block.values[i * levels.size() + static_cast<std::size_t>(it - levels.begin())] = 1;
      }
    }
    enc.one_hot.push_back(std::move(block));
  };
  add_block("instrument", vocab.instrument, &TransferEvent::instrument);
  add_block("source_fs", vocab.source_fs, &TransferEvent::source_fs);
  add_block("target_fs", vocab.target_fs, &TransferEvent::target_fs);
  add_block("target_host", vocab.target_host, &TransferEvent::target_host);
  add_block("node", vocab.node, &TransferEvent::node);

  std::unordered_map<std::string, std::int64_t> codes;
  for (std::size_t k = 0; k < vocab.experiments.size(); ++k) {
    codes.emplace(vocab.experiments[k], static_cast<std::int64_t>(k));
  }
  enc.experiment_code.reserve(events.size());
  for (const auto& e : events) {
    const auto next = static_cast<std::int64_t>(codes.size());
    enc.experiment_code.push_back(codes.try_emplace(e.experiment, next).first->second);
  }
  return enc;
}

}  // namespace xferlag
