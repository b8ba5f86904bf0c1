#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>
#include <set>

#include "bioproc/common.hpp"

using namespace bioproc;

TEST_CASE("split keeps empty fields") {
  auto f = split("a\t\tb", '\t');
  REQUIRE(f.size() == 3);
  CHECK(f[0] == "a");
  CHECK(f[1] == "");
  CHECK(f[2] == "b");
  CHECK(split("", ',').size() == 1);
  CHECK(split("x,", ',').size() == 2);
}

TEST_CASE("trim and case helpers") {
  CHECK(trim("  a b \t") == "a b");
  CHECK(trim("") == "");
  CHECK(trim(" \t ") == "");
  CHECK(lower("MiXeD09_") == "mixed09_");
  CHECK(starts_with("prefix_rest", "prefix"));
  CHECK(!starts_with("pre", "prefix"));
}

TEST_CASE("numeric parsing rejects partial tokens") {
  CHECK(parse_double("2.5", "x") == 2.5);
  CHECK(parse_double("-1e-3", "x") == -1e-3);
  CHECK(parse_long("42", "x") == 42);
  CHECK_THROWS_AS(parse_double("2.5abc", "fieldname"), ValidationError);
  CHECK_THROWS_AS(parse_double("", "fieldname"), ValidationError);
  CHECK_THROWS_AS(parse_long("1.5", "fieldname"), ValidationError);
  CHECK_THROWS_AS(parse_long("abc", "fieldname"), ValidationError);
  try {
    parse_double("oops", "the_offender");
    CHECK(false);
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("the_offender") != std::string::npos);
  }
}

TEST_CASE("format_double round-trips arbitrary values") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-30, 30);
  for (int k = 0; k < 2000; ++k) {
    const double v = mant(rng) * std::pow(10.0, expo(rng));
    const std::string s = format_double(v);
    CHECK(parse_double(s, "rt") == v);
  }
  CHECK(format_double(0.0) == "0");
  CHECK(parse_double(format_double(0.1), "rt") == 0.1);
  CHECK(parse_double(format_double(1.0 / 3.0), "rt") == 1.0 / 3.0);
}

TEST_CASE("mix_seed separates streams and repeats itself") {
  CHECK(mix_seed(1, 1) == mix_seed(1, 1));
  std::set<std::uint64_t> seen;
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
    for (std::uint64_t stream = 0; stream < 50; ++stream)
      seen.insert(mix_seed(seed, stream));
  CHECK(seen.size() == 20u * 50u);  // no collisions across this grid
}

TEST_CASE("file and tsv round-trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "bioproc_common_test";
  fs::create_directories(dir);
  const std::string path = (dir / "t.tsv").string();

  write_file(path, "# comment\ncol1\tcol2\n\na\t1\n  \nb\t2\n");
  CHECK(read_file(path) == "# comment\ncol1\tcol2\n\na\t1\n  \nb\t2\n");

  auto rows = read_tsv(path);
  REQUIRE(rows.size() == 3);  // header + 2 data rows; comments/blank dropped
  CHECK(rows[0][0] == "col1");
  CHECK(rows[1][0] == "a");
  CHECK(rows[2][1] == "2");

  CHECK_THROWS_AS(read_file((dir / "missing.txt").string()), ValidationError);
  fs::remove_all(dir);
}
