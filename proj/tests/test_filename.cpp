#include <random>
#include <string>

#include "doctest.h"
#include "xferlag/error.hpp"
#include "xferlag/filename.hpp"

using namespace xferlag;

TEST_CASE("quoted file name") {
  const auto p = parse_filename("e991-r0002-s01-c00.xtc");
  CHECK(p.experiment_num == 991);
  CHECK(p.run_num == 2);
  CHECK(p.stream_num == 1);
  CHECK(p.chunk_num == 0);
}

TEST_CASE("zero parts without extension") {
  const auto p = parse_filename("e0-r0-s0-c0");
  CHECK(p == FileNameParts{0, 0, 0, 0});
}

TEST_CASE("malformed names") {
  try {
    parse_filename("notafile.dat");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.input() == "notafile.dat");
  }
  for (const char* bad : {"", "e1-r2-s3", "e1-r2-s3-c", "e-r2-s3-c4", "e1-r2-s3-c4.", "e1-r2-s3-c4.x.y",
                          "E1-r2-s3-c4", "e1_r2_s3_c4", " e1-r2-s3-c4", "e1-r2-s3-c4-s5",
                          "e+1-r2-s3-c4", "e99999999999999999999999-r0-s0-c0"}) {
    CAPTURE(bad);
    CHECK_FALSE(try_parse_filename(bad).has_value());
    CHECK_THROWS_AS(parse_filename(bad), ParseError);
  }
}

TEST_CASE("wide zero padding is accepted") {
  CHECK(parse_filename("e00000991-r2-s000001-c0000.h5") == FileNameParts{991, 2, 1, 0});
}

TEST_CASE("round trip over random tuples") {
  std::mt19937_64 g(2024);
  for (int i = 0; i < 10000; ++i) {
    // Mix small values (padding) with full-range ones.
    auto draw = [&] { return (g() & 1) ? g() % 100 : g(); };
    const FileNameParts p{draw(), draw(), draw(), draw()};
    const auto name = format_filename(p);
    REQUIRE(parse_filename(name) == p);
  }
  CHECK(format_filename({991, 2, 1, 0}) == "e0991-r0002-s01-c00.xtc");
  CHECK(format_filename({7, 0, 0, 0}, "h5") == "e0007-r0000-s00-c00.h5");
}

TEST_CASE("arbitrary bytes never escape as anything but a parse result") {
  std::mt19937_64 g(7);
  const std::string alphabet("ersc-.0123456789x\0\xff", 19);
  for (int i = 0; i < 20000; ++i) {
    std::string s;
    const auto len = g() % 24;
    for (std::size_t k = 0; k < len; ++k) {
      s.push_back((g() % 3) ? alphabet[g() % alphabet.size()] : static_cast<char>(g() & 0xff));
    }
    CHECK_NOTHROW((void)try_parse_filename(s));
  }
}
