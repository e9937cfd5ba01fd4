#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "squid/corpus.hpp"

using namespace squid;

TEST_CASE("QA corpus ids follow line order") {
  std::istringstream in(R"({"question":"q1","answer":"a1"}
{"question":"q2","answer":"a2","source":"paq"}
{"question":"q3","answer":"a3"}
)");
  const auto corpus = parse_qa_corpus(in);
  REQUIRE(corpus.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(corpus[i].id == i);
    CHECK(corpus[i].question == "q" + std::to_string(i + 1));
  }
  CHECK(corpus[1].source == "paq");
  CHECK(corpus.back().id == corpus.size() - 1);
}

TEST_CASE("empty QA file gives an empty corpus") {
  std::istringstream in("");
  CHECK(parse_qa_corpus(in).empty());
}

TEST_CASE("QA loader errors name the line") {
  auto message = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_qa_corpus(in);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("{\"question\":\"q\",\"answer\":\"a\"}\n{\"answer\":\"a\"}\n") == "line 2: missing field question");
  CHECK(message("{\"question\":\"   \",\"answer\":\"a\"}\n") == "line 1: empty question");
  CHECK(message("{\"question\":\"q\",\"answer\":\"a\"}\n{oops\n").rfind("line 2: malformed JSON", 0) == 0);
  CHECK(message("{\"question\":\"q\"}\n") == "line 1: missing field answer");
}

TEST_CASE("eval set loading") {
  {
    std::istringstream in(R"({"question":"q","answers":["x","y"]})");
    const auto set = parse_eval_set(in);
    REQUIRE(set.size() == 1);
    CHECK(set[0].gold_answers == std::vector<std::string>{"x", "y"});
  }
  {
    std::istringstream in(R"({"question":"q","answers":[]})");
    CHECK_THROWS_AS(parse_eval_set(in), ValidationError);
  }
  {
    std::string text;
    for (int i = 0; i < 100; ++i) text += R"({"question":"q)" + std::to_string(i) + R"(","answers":["x"]})" "\n";
    std::istringstream in(text);
    const auto set = parse_eval_set(in);
    REQUIRE(set.size() == 100);
    CHECK(set.front().id == 0);
    CHECK(set.back().id == 99);
  }
}

TEST_CASE("missing file is an I/O error") {
  CHECK_THROWS_AS(load_qa_corpus("/nonexistent/corpus.jsonl"), IoError);
  CHECK_THROWS_AS(load_eval_set("/nonexistent/eval.jsonl"), IoError);
}

TEST_CASE("corpus JSONL round trip preserves triples") {
  QACorpus corpus;
  for (QaId i = 0; i < 25; ++i) {
    corpus.push_back({i, "question \"" + std::to_string(i) + "\" é\t?", "answer " + std::to_string(i * 3),
                      i % 2 ? "src" : ""});
  }
  const auto path = std::filesystem::temp_directory_path() / "squid_corpus_roundtrip.jsonl";
  save_qa_corpus(path, corpus);
  const auto back = load_qa_corpus(path);
  REQUIRE(back.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(back[i].id == corpus[i].id);
    CHECK(back[i].question == corpus[i].question);
    CHECK(back[i].answer == corpus[i].answer);
  }
  std::filesystem::remove(path);
}
