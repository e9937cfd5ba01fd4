#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "squid/common.hpp"

namespace squid {

struct QAPair {
  QaId id = 0;
  std::string question;
  std::string answer;
  std::string source;
};

struct EvalQuestion {
  QaId id = 0;
  std::string question;
  std::vector<std::string> gold_answers;
};

using QACorpus = std::vector<QAPair>;
using EvalSet = std::vector<EvalQuestion>;

// JSONL readers. Ids are assigned by line order, never read from the file.
// Blank lines are skipped and do not consume an id. Errors are
// ValidationError("line N: ...") or IoError for unreadable files.
QACorpus load_qa_corpus(const std::filesystem::path& path);
QACorpus parse_qa_corpus(std::istream& in);
EvalSet load_eval_set(const std::filesystem::path& path);
EvalSet parse_eval_set(std::istream& in);

void write_qa_corpus(std::ostream& out, const QACorpus& corpus);
void save_qa_corpus(const std::filesystem::path& path, const QACorpus& corpus);
void write_eval_set(std::ostream& out, const EvalSet& set);
void save_eval_set(const std::filesystem::path& path, const EvalSet& set);

}  // namespace squid
