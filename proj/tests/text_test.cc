#include <random>
#include <sstream>

#include "doctest.h"
#include "labelforge/error.h"
#include "labelforge/text.h"
#include "labelforge/toml_lite.h"
#include "support/oracles.h"

namespace lf = labelforge;

TEST_CASE("string helpers") {
  CHECK(lf::Trim("  a b \t\n") == "a b");
  CHECK(lf::Trim("   ").empty());
  CHECK(lf::AsciiLower("PICC Line") == "picc line");
  CHECK(lf::Join({"a", "b", "c"}, ", ") == "a, b, c");
  CHECK(lf::SplitOn("a\tb\t", '\t') == std::vector<std::string>{"a", "b", ""});
  CHECK(lf::CsvField("plain") == "plain");
  CHECK(lf::CsvField("a,b") == "\"a,b\"");
  CHECK(lf::CsvField("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("one-edit check agrees with Levenshtein") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> len(0, 5), ch(0, 2);
  for (int trial = 0; trial < 5000; ++trial) {
    std::string a, b;
    for (int i = len(rng); i > 0; --i) a += static_cast<char>('a' + ch(rng));
    for (int i = len(rng); i > 0; --i) b += static_cast<char>('a' + ch(rng));
    REQUIRE_MESSAGE(lf::WithinOneEdit(a, b) == (lf::testing::Levenshtein(a, b) == 1),
                    a << " / " << b);
  }
}

TEST_CASE("toml subset") {
  std::istringstream in(R"(# comment
corpus = "reports.jsonl"
min_support = 50
dense_matrix = true
ratio = -0.25
words = ["a", 'b',
         "c"]   # trailing comment
[similarity]
tau = 0.75
"quoted key" = "x # not a comment"
[a.b]
c = 1
)");
  const auto doc = lf::ParseTomlLite(in);
  CHECK(doc["corpus"] == "reports.jsonl");
  CHECK(doc["min_support"] == 50);
  CHECK(doc["dense_matrix"] == true);
  CHECK(doc["ratio"].get<double>() == -0.25);
  CHECK(doc["words"] == nlohmann::json::array({"a", "b", "c"}));
  CHECK(doc["similarity"]["tau"].get<double>() == 0.75);
  CHECK(doc["similarity"]["quoted key"] == "x # not a comment");
  CHECK(doc["a"]["b"]["c"] == 1);
}

TEST_CASE("toml errors carry the line") {
  for (const char* bad : {"x = \n", "x = {a = 1}\n", "just words\n", "x = 1\nx = 2\n",
                          "x = [1, 2\n", "[t\n"}) {
    std::istringstream in(bad);
    CHECK_THROWS_AS(lf::ParseTomlLite(in), lf::Error);
  }
  std::istringstream in("a = 1\nb = nope\n");
  try {
    lf::ParseTomlLite(in);
    FAIL("expected an error");
  } catch (const lf::Error& e) {
    CHECK(e.kind() == lf::ErrorKind::kInvalidConfig);
    CHECK(e.line() == 2);
  }
}

TEST_CASE("error formatting") {
  const lf::Error e(lf::ErrorKind::kMalformedRecord, "bad json", 7);
  CHECK(std::string(e.what()) == "MalformedRecord (line 7): bad json");
  CHECK(e.detail() == "bad json");
  CHECK(lf::ErrorKindName(lf::ErrorKind::kCorruptLog) == "CorruptLog");
}
