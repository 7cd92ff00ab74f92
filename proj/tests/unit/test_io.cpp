#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "pipegrade/io.hpp"
#include "pipegrade/record.hpp"

using namespace pipegrade;

namespace {

std::vector<std::vector<std::string>> read_all(const std::string& text) {
  std::istringstream in(text);
  CsvReader reader(in);
  std::vector<std::vector<std::string>> rows;
  while (auto r = reader.next()) rows.push_back(*r);
  return rows;
}

}  // namespace

TEST_CASE("csv reader handles quotes, embedded breaks, CRLF and BOM") {
  const auto rows = read_all("\xEF\xBB\xBF" "a,b\r\n\"x, y\",\"say \"\"hi\"\"\"\r\n\"two\nlines\",z\n");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"a", "b"});
  CHECK(rows[1] == std::vector<std::string>{"x, y", "say \"hi\""});
  CHECK(rows[2] == std::vector<std::string>{"two\nlines", "z"});
}

TEST_CASE("csv reader reports the starting line of each row and skips blank lines") {
  std::istringstream in("h\n\n\"a\nb\"\nc\n");
  CsvReader reader(in);
  reader.next();
  reader.next();
  CHECK(reader.line() == 3);
  reader.next();
  CHECK(reader.line() == 5);
}

TEST_CASE("unterminated quote is an error") {
  CHECK_THROWS_AS(read_all("a,\"open\n"), Error);
}

TEST_CASE("csv escaping round-trips") {
  const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", "line\nbreak", ""};
  const auto rows = read_all(csv_row(fields));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0] == fields);
}

TEST_CASE("normalize_key lowercases, trims and collapses whitespace") {
  CHECK(normalize_key("  Pipe   Age\t(years) ") == "pipe age (years)");
  CHECK(trim("\t x \n") == "x");
}

TEST_CASE("format_number uses the shortest round-trip form") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(8) == "8");
  CHECK(format_number(0.3129) == "0.3129");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("atomic writes create parents and leave no temporary files") {
  const auto dir = test::scratch("io_atomic");
  const auto target = dir / "nested" / "out.txt";
  write_file_atomic(target, "first");
  write_file_atomic(target, "second");
  CHECK(read_file(target) == "second");
  std::size_t entries = 0;
  for (const auto& e : std::filesystem::directory_iterator(target.parent_path())) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);
  CHECK_THROWS_AS(read_file(dir / "absent.txt"), Error);
}

TEST_CASE("field names round-trip") {
  for (Field f : kAllFields) CHECK(parse_field(field_name(f)) == f);
  CHECK_FALSE(find_field("nope"));
  CHECK_THROWS_AS(parse_field("nope"), Error);
}

TEST_CASE("clear_field refuses identity and label") {
  PipeRecord r;
  r.pipe_id = "1";
  r.material = "Cast Iron";
  clear_field(r, Field::Material);
  CHECK_FALSE(r.material);
  CHECK_THROWS_AS(clear_field(r, Field::PipeId), Error);
  CHECK_THROWS_AS(clear_field(r, Field::ComprehensiveRating), Error);
}
