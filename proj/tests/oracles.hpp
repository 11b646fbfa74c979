#pragma once
// Brute-force reference implementations. Deliberately naive: they rescan
// every event per query and share no code with the library's sweeps.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "xferlag/event.hpp"
#include "xferlag/features.hpp"

namespace oracle {

using xferlag::EventLog;
using xferlag::LagKeyKind;
using xferlag::TransferEvent;

// (experiment, run, stream, chunk) via a regex, independent of the library parser.
inline std::optional<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t, std::uint64_t>>
parse_name(const std::string& name) {
  static const std::regex re(R"(e(\d+)-r(\d+)-s(\d+)-c(\d+)(\.[A-Za-z0-9_]+)?)");
  std::smatch m;
  if (!std::regex_match(name, m, re)) return std::nullopt;
  try {
    return std::tuple{std::stoull(m[1]), std::stoull(m[2]), std::stoull(m[3]), std::stoull(m[4])};
  } catch (...) {
    return std::nullopt;  // out of range
  }
}

// Key as a string; nullopt when unkeyed.
inline std::optional<std::string> key_of(const TransferEvent& e, LagKeyKind kind) {
  switch (kind) {
    case LagKeyKind::Overall: return std::string("*");
    case LagKeyKind::SameInstrument: return e.instrument;
    case LagKeyKind::SameExperiment: return e.experiment;
    case LagKeyKind::SameSourceFs: return e.source_fs;
    case LagKeyKind::SameTargetFs: return e.target_fs;
    case LagKeyKind::SameTargetHost: return e.target_host;
    case LagKeyKind::SameNode: return e.node;
    case LagKeyKind::SameChunk: {
      auto p = parse_name(e.file_name);
      if (!p) return std::nullopt;
      auto [x, r, s, c] = *p;
      return std::to_string(x) + "/" + std::to_string(r) + "/" + std::to_string(c);
    }
  }
  return std::nullopt;
}

inline xferlag::LagInfo lag(const EventLog& ev, LagKeyKind kind, std::size_t i, std::size_t order) {
  const auto key = key_of(ev[i], kind);
  std::vector<std::size_t> done;
  if (key) {
    for (std::size_t j = 0; j < ev.size(); ++j) {
      if (j == i) continue;
      if (ev[j].stop_time < ev[i].start_time && key_of(ev[j], kind) == key) done.push_back(j);
    }
  }
  std::sort(done.begin(), done.end(), [&](std::size_t a, std::size_t b) {
    if (ev[a].stop_time != ev[b].stop_time) return ev[a].stop_time > ev[b].stop_time;
    return ev[a].id > ev[b].id;
  });
  xferlag::LagInfo out;
  if (done.size() < order) return out;
  const auto& l = ev[done[order - 1]];
  out.present = true;
  out.transfer_rate = l.transfer_rate;
  out.file_size = l.file_size;
  out.time_diff = ev[i].start_time - l.stop_time;
  out.event_id = l.id;
  return out;
}

struct Overlap {
  std::uint32_t jobs = 0;
  std::uint32_t experiments = 0;
};

inline Overlap concurrency(const EventLog& ev, LagKeyKind kind, std::size_t i) {
  Overlap out;
  const auto key = key_of(ev[i], kind);
  if (!key) return out;
  std::set<std::string> exps;
  for (std::size_t j = 0; j < ev.size(); ++j) {
    if (j == i || key_of(ev[j], kind) != key) continue;
    if (ev[j].start_time <= ev[i].start_time && ev[i].start_time < ev[j].stop_time) {
      ++out.jobs;
      exps.insert(ev[j].experiment);
    }
  }
  out.experiments = static_cast<std::uint32_t>(exps.size());
  return out;
}

// Walks whole days from the epoch. day 0 = Monday.
inline std::pair<int, int> calendar(std::int64_t t, std::int64_t offset) {
  std::int64_t local = t + offset;
  std::int64_t days = 0;
  while (local < 0) {
    local += 86400;
    --days;
  }
  while (local >= 86400) {
    local -= 86400;
    ++days;
  }
  const int dow = static_cast<int>((((days + 3) % 7) + 7) % 7);  // 1970-01-01 was a Thursday
  return {dow, static_cast<int>(local / 3600)};
}

// Start-sorted random events with small key alphabets, integer times packed
// tightly enough to produce start/stop ties, and a few bad file names.
inline EventLog random_events(std::size_t n, std::uint64_t seed, std::int64_t horizon = 4000) {
  std::mt19937_64 g(seed);
  auto pick = [&](int k) { return static_cast<int>(g() % static_cast<std::uint64_t>(k)); };
  const char* instruments[] = {"amo", "cxi", "mec", "mfx", "sxr", "xcs", "xpp"};
  EventLog ev(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& e = ev[i];
    e.start_time = static_cast<std::int64_t>(g() % static_cast<std::uint64_t>(horizon));
    e.stop_time = pick(20) == 0 ? e.start_time : e.start_time + 1 + pick(120);
    e.file_size = 0.5 + pick(1000) / 10.0;
    e.transfer_rate = 1.0 + pick(4000) / 10.0;
    const int inst = pick(4);
    e.instrument = instruments[inst];
    const int exp = pick(3);
    e.experiment = e.instrument + std::to_string(100 + exp);
    e.source_fs = "ffb0" + std::to_string(pick(2) + 1);
    e.target_fs = "ana0" + std::to_string(pick(3) + 1);
    e.target_host = "psana20" + std::to_string(pick(4) + 1);
    e.node = e.instrument + "dss0" + std::to_string(pick(3) + 1);
    if (pick(25) == 0) {
      e.file_name = "garbage_" + std::to_string(i) + ".xtc";
    } else {
      char buf[64];
      std::snprintf(buf, sizeof buf, "e%03d-r%04d-s%02d-c%02d.xtc", 100 + inst * 3 + exp,
                    pick(3), pick(6), pick(3));
      e.file_name = buf;
    }
  }
  ev = xferlag::sort_by_start(std::move(ev));
  xferlag::renumber(ev);
  return ev;
}

}  // namespace oracle
