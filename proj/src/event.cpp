#include "xferlag/event.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "csv.hpp"
#include "xferlag/error.hpp"

namespace xferlag {
namespace {

constexpr std::array<std::string_view, 12> kColumns = {
    "start_time", "stop_time",  "file_size_gb", "transfer_rate_mbs",
    "instrument", "experiment", "target_host",  "target_fs",
    "source_fs",  "node",       "file_name",    "stage"};

enum Column : std::size_t {
  kStart, kStop, kSize, kRate, kInstrument, kExperiment,
  kTargetHost, kTargetFs, kSourceFs, kNode, kFileName, kStage
};

std::array<std::size_t, kColumns.size()> map_header(const std::vector<std::string>& header) {
  std::array<std::size_t, kColumns.size()> position;
  position.fill(kColumns.size());
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto it = std::find(kColumns.begin(), kColumns.end(), header[i]);
    if (it == kColumns.end()) {
      throw SchemaError("unknown column '" + header[i] + "'", header[i]);
    }
    auto& slot = position[static_cast<std::size_t>(it - kColumns.begin())];
    if (slot != kColumns.size()) {
      throw SchemaError("duplicate column '" + header[i] + "'", header[i]);
    }
    slot = i;
  }
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    if (position[c] == kColumns.size()) {
      throw SchemaError("missing column '" + std::string(kColumns[c]) + "'",
                        std::string(kColumns[c]));
    }
  }
  return position;
}

std::int64_t field_int(const std::vector<std::string>& f, std::size_t pos, std::size_t row,
                       std::string_view name) {
  const auto v = csv::parse_int(f[pos]);
  if (!v) throw RowError(row, "field '" + std::string(name) + "' is not an integer: '" + f[pos] + "'");
  return *v;
}

double field_double(const std::vector<std::string>& f, std::size_t pos, std::size_t row,
                    std::string_view name) {
  const auto v = csv::parse_double(f[pos]);
  if (!v || !std::isfinite(*v)) {
    throw RowError(row, "field '" + std::string(name) + "' is not a finite number: '" + f[pos] + "'");
  }
  if (*v < 0.0) throw RowError(row, "field '" + std::string(name) + "' is negative");
  return *v;
}

}  // namespace

std::string_view to_string(Stage stage) {
  return stage == Stage::DssToFfb ? "DSS_TO_FFB" : "FFB_TO_ANA";
}

Stage parse_stage(std::string_view text) {
  if (text == "DSS_TO_FFB") return Stage::DssToFfb;
  if (text == "FFB_TO_ANA") return Stage::FfbToAna;
  throw InvalidArgument("unknown stage '" + std::string(text) + "'");
}

EventLog parse_event_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("missing header", "");
  csv::strip_cr(line);
  const auto position = map_header(csv::split_record(line));

  EventLog events;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    csv::strip_cr(line);
    if (line.empty()) continue;
    const auto f = csv::split_record(line);
    if (f.size() != kColumns.size()) {
      throw RowError(row, "expected " + std::to_string(kColumns.size()) + " fields, got " +
                              std::to_string(f.size()));
    }
    TransferEvent e;
    e.id = row;
    e.start_time = field_int(f, position[kStart], row, kColumns[kStart]);
    e.stop_time = field_int(f, position[kStop], row, kColumns[kStop]);
    if (e.stop_time < e.start_time) throw RowError(row, "stop_time precedes start_time");
    e.file_size = field_double(f, position[kSize], row, kColumns[kSize]);
    e.transfer_rate = field_double(f, position[kRate], row, kColumns[kRate]);
    e.instrument = f[position[kInstrument]];
    e.experiment = f[position[kExperiment]];
    e.target_host = f[position[kTargetHost]];
    e.target_fs = f[position[kTargetFs]];
    e.source_fs = f[position[kSourceFs]];
    e.node = f[position[kNode]];
    e.file_name = f[position[kFileName]];
    try {
      e.stage = parse_stage(f[position[kStage]]);
    } catch (const InvalidArgument& ex) {
      throw RowError(row, ex.what());
    }
    events.push_back(std::move(e));
    ++row;
  }
  return events;
}

EventLog parse_event_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_event_csv(in);
}

EventLog load_event_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_event_csv(in);
}

void write_event_csv(std::ostream& out, const EventLog& events) {
  out << kEventCsvHeader << '\n';
  for (const auto& e : events) {
    out << e.start_time << ',' << e.stop_time << ',' << csv::format_double17(e.file_size) << ','
        << csv::format_double17(e.transfer_rate) << ',' << csv::quote_if_needed(e.instrument) << ','
        << csv::quote_if_needed(e.experiment) << ',' << csv::quote_if_needed(e.target_host) << ','
        << csv::quote_if_needed(e.target_fs) << ',' << csv::quote_if_needed(e.source_fs) << ','
        << csv::quote_if_needed(e.node) << ',' << csv::quote_if_needed(e.file_name) << ','
        << to_string(e.stage) << '\n';
  }
}

std::string format_event_csv(const EventLog& events) {
  std::ostringstream out;
  write_event_csv(out, events);
  return out.str();
}

void save_event_csv(const std::string& path, const EventLog& events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_event_csv(out, events);
  if (!out) throw IoError("write failed for '" + path + "'");
}

CleanResult clean_events(const EventLog& events) {
  CleanResult result;
  result.report.n_input = events.size();
  for (const auto& e : events) {
    if (e.file_size > kMaxFileSizeGb) {
      ++result.report.n_oversize_removed;
    } else if (e.file_size == 0.0 || e.transfer_rate == 0.0) {
      ++result.report.n_zero_removed;
    } else {
      result.events.push_back(e);
    }
  }
  result.report.n_output = result.events.size();
  return result;
}

EventLog sort_by_start(EventLog events) {
  std::stable_sort(events.begin(), events.end(), [](const TransferEvent& a, const TransferEvent& b) {
    if (a.start_time != b.start_time) return a.start_time < b.start_time;
    if (a.stop_time != b.stop_time) return a.stop_time < b.stop_time;
    return a.id < b.id;
  });
  return events;
}

bool is_sorted_by_start(const EventLog& events) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    const auto& a = events[i - 1];
    const auto& b = events[i];
    if (a.start_time != b.start_time) {
      if (a.start_time > b.start_time) return false;
    } else if (a.stop_time != b.stop_time) {
      if (a.stop_time > b.stop_time) return false;
    } else if (a.id > b.id) {
      return false;
    }
  }
  return true;
}

EventLog filter_stage(const EventLog& events, Stage stage) {
  EventLog out;
  for (const auto& e : events) {
    if (e.stage == stage) out.push_back(e);
  }
  return out;
}

void renumber(EventLog& events) {
  for (std::size_t i = 0; i < events.size(); ++i) events[i].id = i;
}

}  // namespace xferlag
