#include <algorithm>
#include <random>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "xferlag/error.hpp"
#include "xferlag/event.hpp"

using namespace xferlag;

namespace {

const std::string kHeader(kEventCsvHeader);

TransferEvent make(std::int64_t start, std::int64_t stop, double size = 1.0, double rate = 10.0) {
  TransferEvent e;
  e.start_time = start;
  e.stop_time = stop;
  e.file_size = size;
  e.transfer_rate = rate;
  e.instrument = "mfx";
  e.experiment = "mfx100";
  e.target_host = "psana201";
  e.target_fs = "ana01";
  e.source_fs = "ffb01";
  e.node = "mfxdss02";
  e.file_name = "e100-r0001-s02-c00.xtc";
  return e;
}

}  // namespace

TEST_CASE("header only parses to an empty log") {
  CHECK(parse_event_csv(kHeader + "\n").empty());
}

TEST_CASE("psana201 row keeps every field") {
  const auto log = parse_event_csv(
      kHeader + "\n1498066922,1498066946,0.3168954,13.73635,mfx,mfxlr1716,psana201,ana01,ffb01,"
                "mfxdss02,e991-r0002-s01-c00.xtc,FFB_TO_ANA\n");
  REQUIRE(log.size() == 1);
  const auto& e = log[0];
  CHECK(e.id == 0);
  CHECK(e.start_time == 1498066922);
  CHECK(e.stop_time == 1498066946);
  CHECK(e.file_size == 0.3168954);
  CHECK(e.transfer_rate == 13.73635);  // recorded, never recomputed from size and duration
  CHECK(e.target_host == "psana201");
  CHECK(e.node == "mfxdss02");
  CHECK(e.stage == Stage::FfbToAna);
}

TEST_CASE("non-numeric rate is a row error at that row") {
  const std::string good = "1,2,1.0,5.0,mfx,mfx1,h,t,s,n,f,DSS_TO_FFB\n";
  const std::string bad = "1,2,1.0,abc,mfx,mfx1,h,t,s,n,f,DSS_TO_FFB\n";
  try {
    parse_event_csv(kHeader + "\n" + good + good + bad);
    FAIL("expected a row error");
  } catch (const RowError& e) {
    CHECK(e.row() == 2);
    CHECK(std::string(e.what()).find("row 2") == 0);
  }
}

TEST_CASE("schema errors name the column") {
  try {
    parse_event_csv("start_time,stop_time\n");
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(e.column() == "file_size_gb");
  }
  try {
    parse_event_csv(kHeader + ",bogus\n");
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(e.column() == "bogus");
  }
  CHECK_THROWS_AS(parse_event_csv(""), SchemaError);
}

TEST_CASE("other malformed rows") {
  auto row = [](const std::string& r) { return kHeader + "\n" + r + "\n"; };
  CHECK_THROWS_AS(parse_event_csv(row("5,4,1.0,5.0,a,b,c,d,e,f,g,DSS_TO_FFB")), RowError);
  CHECK_THROWS_AS(parse_event_csv(row("1,2,-1.0,5.0,a,b,c,d,e,f,g,DSS_TO_FFB")), RowError);
  CHECK_THROWS_AS(parse_event_csv(row("1,2,nan,5.0,a,b,c,d,e,f,g,DSS_TO_FFB")), RowError);
  CHECK_THROWS_AS(parse_event_csv(row("1,2,1.0,5.0,a,b,c,d,e,f,g,ANA_TO_TAPE")), RowError);
  CHECK_THROWS_AS(parse_event_csv(row("1,2,1.0,5.0,a,b,c,d,e,f")), RowError);
  CHECK_THROWS_AS(parse_event_csv(row("1.5,2,1.0,5.0,a,b,c,d,e,f,g,DSS_TO_FFB")), RowError);
}

TEST_CASE("CRLF and quoted fields") {
  const auto log = parse_event_csv(kHeader + "\r\n1,2,1.0,5.0,a,\"b,c\",h,t,s,n,f,DSS_TO_FFB\r\n");
  REQUIRE(log.size() == 1);
  CHECK(log[0].experiment == "b,c");
  CHECK(log[0].stage == Stage::DssToFfb);
}

TEST_CASE("serialize then parse is bit exact") {
  auto log = oracle::random_events(300, 11);
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (auto& e : log) {
    e.file_size = u(g) / 3.0;
    e.transfer_rate = u(g) * 0.1 + 1e-7;
  }
  log[0].experiment = "needs,\"quotes\"";
  const auto back = parse_event_csv(format_event_csv(log));
  CHECK(back == log);
}

TEST_CASE("cleaning drops oversize first, then zero records") {
  EventLog log = {make(0, 1, 0.5), make(1, 2, 1200.0), make(2, 3, 0.0)};
  renumber(log);
  const auto r = clean_events(log);
  REQUIRE(r.events.size() == 1);
  CHECK(r.events[0].file_size == 0.5);
  CHECK(r.report == CleaningReport{3, 1, 1, 1});

  // Oversize with zero rate counts once, as oversize.
  EventLog both = {make(0, 1, 2000.0, 0.0)};
  CHECK(clean_events(both).report == CleaningReport{1, 1, 0, 0});
  // The threshold is exclusive.
  EventLog edge = {make(0, 1, 1000.0)};
  CHECK(clean_events(edge).events.size() == 1);
}

TEST_CASE("cleaning a valid log is the identity and is idempotent") {
  const auto log = oracle::random_events(200, 3);
  const auto once = clean_events(log);
  CHECK(once.events == log);
  CHECK(once.report == CleaningReport{200, 0, 0, 200});
  const auto twice = clean_events(once.events);
  CHECK(twice.events == once.events);
}

TEST_CASE("12 oversize and 76 zero records injected into 10000") {
  auto log = oracle::random_events(10000, 99);
  std::mt19937_64 g(1);
  std::vector<std::size_t> idx(log.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), g);
  for (std::size_t k = 0; k < 12; ++k) log[idx[k]].file_size = 1000.5 + k;
  for (std::size_t k = 12; k < 88; ++k) {
    if (k % 2) log[idx[k]].file_size = 0.0;
    else log[idx[k]].transfer_rate = 0.0;
  }
  // Brute-force expectation.
  EventLog expect;
  for (const auto& e : log) {
    if (e.file_size <= 1000.0 && e.file_size != 0.0 && e.transfer_rate != 0.0) expect.push_back(e);
  }
  const auto r = clean_events(log);
  CHECK(r.events == expect);
  CHECK(r.report.n_oversize_removed == 12);
  CHECK(r.report.n_zero_removed == 76);
  CHECK(r.report.n_output == 10000 - 88);
}

TEST_CASE("sort by start") {
  SUBCASE("equal start orders by stop") {
    EventLog log = {make(5, 10), make(5, 5)};
    renumber(log);
    const auto s = sort_by_start(log);
    CHECK(s[0].stop_time == 5);
    CHECK(s[1].stop_time == 10);
  }
  SUBCASE("sorted input is unchanged") {
    const auto log = oracle::random_events(100, 4);
    CHECK(sort_by_start(log) == log);
    CHECK(is_sorted_by_start(log));
  }
  SUBCASE("reversed distinct starts come back reversed") {
    EventLog log;
    for (int i = 0; i < 50; ++i) log.push_back(make(1000 - i, 2000));
    renumber(log);
    const auto s = sort_by_start(log);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i].id == log.size() - 1 - i);
    CHECK_FALSE(is_sorted_by_start(log));
  }
  SUBCASE("permutation of ids") {
    auto log = oracle::random_events(300, 8);
    std::shuffle(log.begin(), log.end(), std::mt19937_64(2));
    auto s = sort_by_start(log);
    std::vector<std::size_t> a, b;
    for (auto& e : log) a.push_back(e.id);
    for (auto& e : s) b.push_back(e.id);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
}

TEST_CASE("stage filter") {
  EventLog log = {make(0, 1), make(1, 2), make(2, 3)};
  log[1].stage = Stage::DssToFfb;
  renumber(log);
  const auto f = filter_stage(log, Stage::DssToFfb);
  REQUIRE(f.size() == 1);
  CHECK(f[0].start_time == 1);
  CHECK(parse_stage(to_string(Stage::FfbToAna)) == Stage::FfbToAna);
  CHECK_THROWS_AS(parse_stage("ffb_to_ana"), InvalidArgument);
}
