#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "squid/common.hpp"
#include "squid/corpus.hpp"
#include "squid/retriever.hpp"

namespace squid {

/// Positive-sampling strategy for distant supervision.
///   Self        - the input question itself
///   Similar     - the candidate whose answer has the best F1 against the golds
///   SimilarSelf - a candidate carrying a gold answer, else the input question
///   SameAnswer  - a random candidate carrying a gold answer
enum class Strategy { Self, Similar, SimilarSelf, SameAnswer };

std::string_view to_string(Strategy s);
/// Accepts "self", "similar", "similar-self", "same-answer" (and the
/// CamelCase names). Throws ValidationError otherwise.
Strategy parse_strategy(std::string_view name);

enum class NegativeOrder { Rank, Uniform };

/// Either an indexed QA pair or literal question text (the query itself).
struct Positive {
  std::variant<QaId, std::string> value;

  bool is_indexed() const { return std::holds_alternative<QaId>(value); }
  QaId id() const { return std::get<QaId>(value); }
  const std::string& text() const { return std::get<std::string>(value); }

  friend bool operator==(const Positive&, const Positive&) = default;
};

struct TrainingExample {
  QaId qid = 0;
  std::string query;
  Positive positive;
  std::vector<QaId> negatives;

  std::size_t m() const { return negatives.size(); }

  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

struct SupervisionConfig {
  std::size_t k = 50;
  Strategy strategy = Strategy::Similar;
  std::size_t m = 16;
  double min_f1 = 0.5;
  std::uint64_t seed = 0;
  NegativeOrder negative_order = NegativeOrder::Rank;
};

struct SupervisionSummary {
  std::size_t kept = 0;
  std::size_t skipped_no_positive = 0;
  std::size_t skipped_no_negative = 0;
};

struct ExampleSet {
  std::vector<TrainingExample> examples;
  SupervisionSummary summary;
};

std::optional<Positive> select_positive(const EvalQuestion& query, const Ranking& candidates,
                                        const QACorpus& corpus, Strategy strategy, double min_f1,
                                        std::uint64_t seed = 0);

/// Up to m candidates whose answers miss every gold (EM = 0), excluding the
/// positive. Rank order keeps the highest-ranked; Uniform draws a seeded
/// sample and returns it in rank order.
std::vector<QaId> select_negatives(const EvalQuestion& query, const Ranking& candidates,
                                   const QACorpus& corpus, const Positive& positive, std::size_t m,
                                   NegativeOrder order = NegativeOrder::Rank, std::uint64_t seed = 0);

ExampleSet build_examples(const EvalSet& train_set, const FirstStageRetriever& first_stage,
                          const QACorpus& corpus, const SupervisionConfig& config);

void write_examples(std::ostream& out, const std::vector<TrainingExample>& examples);
std::vector<TrainingExample> parse_examples(std::istream& in);
void save_examples(const std::filesystem::path& path, const std::vector<TrainingExample>& examples);
std::vector<TrainingExample> load_examples(const std::filesystem::path& path);

}  // namespace squid
