#include "squid/corpus.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "squid/textnorm.hpp"

namespace squid {
namespace {

using nlohmann::json;

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ValidationError("line " + std::to_string(line) + ": " + what);
}

json parse_line(const std::string& text, std::size_t line) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(line, std::string("malformed JSON (") + e.what() + ")");
  }
  if (!obj.is_object()) fail(line, "expected a JSON object");
  return obj;
}

std::string required_string(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) fail(line, std::string("missing field ") + field);
  if (!it->is_string()) fail(line, std::string("field ") + field + " must be a string");
  return it->get<std::string>();
}

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    fn(parse_line(text, line), line);
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

QACorpus parse_qa_corpus(std::istream& in) {
  QACorpus corpus;
  for_each_record(in, [&](const json& obj, std::size_t line) {
    QAPair pair;
    pair.id = static_cast<QaId>(corpus.size());
    pair.question = required_string(obj, "question", line);
    pair.answer = required_string(obj, "answer", line);
    if (obj.contains("source")) pair.source = required_string(obj, "source", line);
    if (blank(pair.question)) fail(line, "empty question");
    corpus.push_back(std::move(pair));
  });
  return corpus;
}

QACorpus load_qa_corpus(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_qa_corpus(in);
}

EvalSet parse_eval_set(std::istream& in) {
  EvalSet set;
  for_each_record(in, [&](const json& obj, std::size_t line) {
    EvalQuestion q;
    q.id = static_cast<QaId>(set.size());
    q.question = required_string(obj, "question", line);
    auto it = obj.find("answers");
    if (it == obj.end()) fail(line, "missing field answers");
    if (!it->is_array()) fail(line, "field answers must be a list");
    if (it->empty()) fail(line, "empty answers list");
    for (const auto& a : *it) {
      if (!a.is_string()) fail(line, "answers must be strings");
      auto gold = a.get<std::string>();
      if (normalize(gold).empty()) fail(line, "answer is empty after normalization");
      q.gold_answers.push_back(std::move(gold));
    }
    set.push_back(std::move(q));
  });
  return set;
}

EvalSet load_eval_set(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_eval_set(in);
}

void write_qa_corpus(std::ostream& out, const QACorpus& corpus) {
  for (const auto& p : corpus) {
    json obj = {{"question", p.question}, {"answer", p.answer}};
    if (!p.source.empty()) obj["source"] = p.source;
    out << obj.dump() << '\n';
  }
}

void save_qa_corpus(const std::filesystem::path& path, const QACorpus& corpus) {
  auto out = open_output(path);
  write_qa_corpus(out, corpus);
  if (!out) throw IoError("write failed: " + path.string());
}

void write_eval_set(std::ostream& out, const EvalSet& set) {
  for (const auto& q : set) {
    out << json{{"question", q.question}, {"answers", q.gold_answers}}.dump() << '\n';
  }
}

void save_eval_set(const std::filesystem::path& path, const EvalSet& set) {
  auto out = open_output(path);
  write_eval_set(out, set);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace squid
