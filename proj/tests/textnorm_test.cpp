#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>

#include "json.hpp"
#include "squid/textnorm.hpp"

using namespace squid;
using Catch::Approx;

TEST_CASE("normalize applies lowercase, punctuation, article and whitespace rules") {
  CHECK(normalize("The Cat!") == TokenSequence{"cat"});
  CHECK(normalize("").empty());
  CHECK(normalize("a an the").empty());
  CHECK(normalize("what is x") == TokenSequence{"what", "is", "x"});
  // Articles are removed only as whole tokens.
  CHECK(normalize("Theater anthem") == TokenSequence{"theater", "anthem"});
  CHECK(normalize("don't") == TokenSequence{"dont"});
  CHECK(normalize("Ünïcode STAYS") == TokenSequence{"Ünïcode", "stays"});
}

TEST_CASE("metric fixture matches hand-computed EM and F1") {
  std::ifstream in(SQUID_TEST_DATA "/metric_cases.jsonl");
  REQUIRE(in);
  std::string line;
  int cases = 0;
  while (std::getline(in, line)) {
    const auto c = nlohmann::json::parse(line);
    const auto pred = c["prediction"].get<std::string>();
    const auto golds = c["golds"].get<std::vector<std::string>>();
    INFO("prediction: " << pred);
    CHECK(exact_match(pred, golds) == c["expected_em"].get<int>());
    CHECK(token_f1(pred, golds) == Approx(c["expected_f1"].get<double>()).margin(1e-9));
    ++cases;
  }
  CHECK(cases == 20);
}

TEST_CASE("exact match and F1 edge values") {
  CHECK(exact_match("dog", {"cat"}) == 0);
  CHECK(token_f1("alpha", {"beta"}) == 0.0);
  CHECK(token_f1("new york city", {"york city"}) == Approx(0.8).margin(1e-12));
  // Max over golds.
  CHECK(token_f1("york", {"paris", "new york"}) == Approx(2.0 / 3.0).margin(1e-12));
}

namespace {

std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces{"The", "a", "cat", "Cat.", "dog", "new", "york", "!", "an",
                                               "x-ray", "1,000", "  ", "city", "é", "New", "the"};
  std::uniform_int_distribution<std::size_t> n(0, 6), pick(0, pieces.size() - 1);
  std::string s;
  for (auto i = n(rng); i > 0; --i) s += pieces[pick(rng)] + " ";
  return s;
}

std::string join(const TokenSequence& t) {
  std::string s;
  for (const auto& x : t) s += (s.empty() ? "" : " ") + x;
  return s;
}

}  // namespace

TEST_CASE("metric properties over random text") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto p = random_text(rng);
    const auto g = random_text(rng);
    const double f1 = token_f1(p, {g});
    CHECK(f1 >= 0.0);
    CHECK(f1 <= 1.0);
    CHECK(f1 == Approx(token_f1(g, {p})).margin(1e-12));
    if (exact_match(p, {g}) == 1) CHECK(f1 == 1.0);
    CHECK(exact_match(p, {p}) == 1);
    CHECK(token_f1(p, {p}) == 1.0);

    const auto tokens = normalize(p);
    CHECK(normalize(join(tokens)) == tokens);
    for (const auto& t : tokens) {
      CHECK_FALSE(t.empty());
      CHECK(t.find(' ') == std::string::npos);
    }
  }
}
