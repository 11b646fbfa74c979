#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace xferlag {

// Units: file sizes in GB (1e9 bytes), rates in MB/s (1e6 bytes/s),
// timestamps in unix seconds.
enum class Stage { DssToFfb, FfbToAna };

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view text);

struct TransferEvent {
  std::size_t id = 0;
  std::int64_t start_time = 0;
  std::int64_t stop_time = 0;
  double file_size = 0.0;
  double transfer_rate = 0.0;
  std::string instrument;
  std::string experiment;
  std::string target_host;
  std::string target_fs;
  std::string source_fs;
  std::string node;
  std::string file_name;
  Stage stage = Stage::FfbToAna;

  friend bool operator==(const TransferEvent&, const TransferEvent&) = default;
};

using EventLog = std::vector<TransferEvent>;

struct CleaningReport {
  std::size_t n_input = 0;
  std::size_t n_oversize_removed = 0;
  std::size_t n_zero_removed = 0;
  std::size_t n_output = 0;

  friend bool operator==(const CleaningReport&, const CleaningReport&) = default;
};

inline constexpr double kMaxFileSizeGb = 1000.0;

inline constexpr std::string_view kEventCsvHeader =
    "start_time,stop_time,file_size_gb,transfer_rate_mbs,instrument,experiment,"
    "target_host,target_fs,source_fs,node,file_name,stage";

// Parses the event CSV. Ids are assigned in row order starting at 0.
// Throws SchemaError for header problems and RowError for bad data rows.
EventLog parse_event_csv(std::istream& in);
EventLog parse_event_csv(std::string_view text);
EventLog load_event_csv(const std::string& path);

// Decimal fields are written with 17 significant digits so a re-parse is exact.
void write_event_csv(std::ostream& out, const EventLog& events);
std::string format_event_csv(const EventLog& events);
void save_event_csv(const std::string& path, const EventLog& events);

struct CleanResult {
  EventLog events;
  CleaningReport report;
};

// Drops oversize (> 1000 GB) records, then records with zero size or rate.
// A record matching both rules is counted once, as oversize.
CleanResult clean_events(const EventLog& events);

// Stable order by (start_time, stop_time, id).
EventLog sort_by_start(EventLog events);
bool is_sorted_by_start(const EventLog& events);

EventLog filter_stage(const EventLog& events, Stage stage);

// Reassigns ids 0..n-1 in current order.
void renumber(EventLog& events);

}  // namespace xferlag
