#include "squid/supervision.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "json.hpp"
#include "squid/textnorm.hpp"

namespace squid {
namespace {

using nlohmann::json;

std::mt19937_64 question_rng(std::uint64_t seed, QaId qid, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(qid), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

const std::string& answer_of(const QACorpus& corpus, QaId id) {
  if (id >= corpus.size()) throw ValidationError("candidate id " + std::to_string(id) + " out of range");
  return corpus[id].answer;
}

std::vector<QaId> gold_bearing(const EvalQuestion& q, const Ranking& candidates, const QACorpus& corpus) {
  std::vector<QaId> out;
  for (const auto& c : candidates) {
    if (exact_match(answer_of(corpus, c.id), q.gold_answers) == 1) out.push_back(c.id);
  }
  return out;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Self: return "self";
    case Strategy::Similar: return "similar";
    case Strategy::SimilarSelf: return "similar-self";
    case Strategy::SameAnswer: return "same-answer";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "self" || name == "Self") return Strategy::Self;
  if (name == "similar" || name == "Similar") return Strategy::Similar;
  if (name == "similar-self" || name == "SimilarSelf" || name == "similar/self") return Strategy::SimilarSelf;
  if (name == "same-answer" || name == "SameAnswer") return Strategy::SameAnswer;
  throw ValidationError("unknown strategy: " + std::string(name));
}

std::optional<Positive> select_positive(const EvalQuestion& query, const Ranking& candidates,
                                        const QACorpus& corpus, Strategy strategy, double min_f1,
                                        std::uint64_t seed) {
  switch (strategy) {
    case Strategy::Self:
      return Positive{query.question};

    case Strategy::Similar: {
      std::optional<QaId> best;
      double best_f1 = -1.0;
      for (const auto& c : candidates) {  // rank order, so strict > keeps the better rank on ties
        const double f1 = token_f1(answer_of(corpus, c.id), query.gold_answers);
        if (f1 > best_f1) {
          best_f1 = f1;
          best = c.id;
        }
      }
      if (!best || best_f1 < min_f1) return std::nullopt;
      return Positive{*best};
    }

    case Strategy::SimilarSelf: {
      const auto feasible = gold_bearing(query, candidates, corpus);
      if (feasible.empty()) return Positive{query.question};
      return Positive{feasible.front()};
    }

    case Strategy::SameAnswer: {
      const auto feasible = gold_bearing(query, candidates, corpus);
      if (feasible.empty()) return std::nullopt;
      auto rng = question_rng(seed, query.id, 1);
      std::uniform_int_distribution<std::size_t> pick(0, feasible.size() - 1);
      return Positive{feasible[pick(rng)]};
    }
  }
  return std::nullopt;
}

std::vector<QaId> select_negatives(const EvalQuestion& query, const Ranking& candidates,
                                   const QACorpus& corpus, const Positive& positive, std::size_t m,
                                   NegativeOrder order, std::uint64_t seed) {
  if (m == 0) throw ValidationError("m must be >= 1");
  std::vector<QaId> pool;
  for (const auto& c : candidates) {
    if (positive.is_indexed() && positive.id() == c.id) continue;
    if (exact_match(answer_of(corpus, c.id), query.gold_answers) == 0) pool.push_back(c.id);
  }
  if (order == NegativeOrder::Uniform && pool.size() > m) {
    std::vector<std::size_t> slots(pool.size());
    for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
    auto rng = question_rng(seed, query.id, 2);
    std::shuffle(slots.begin(), slots.end(), rng);
    slots.resize(m);
    std::sort(slots.begin(), slots.end());
    std::vector<QaId> sample;
    for (const auto s : slots) sample.push_back(pool[s]);
    return sample;
  }
  if (pool.size() > m) pool.resize(m);
  return pool;
}

ExampleSet build_examples(const EvalSet& train_set, const FirstStageRetriever& first_stage,
                          const QACorpus& corpus, const SupervisionConfig& config) {
  if (config.k == 0) throw ValidationError("k must be >= 1");
  if (config.m == 0) throw ValidationError("m must be >= 1");
  ExampleSet out;
  for (const auto& q : train_set) {
    const auto candidates = first_stage.search(q.question, config.k);
    auto positive = select_positive(q, candidates, corpus, config.strategy, config.min_f1, config.seed);
    if (!positive) {
      ++out.summary.skipped_no_positive;
      continue;
    }
    auto negatives = select_negatives(q, candidates, corpus, *positive, config.m,
                                      config.negative_order, config.seed);
    if (negatives.empty()) {
      ++out.summary.skipped_no_negative;
      continue;
    }
    out.examples.push_back({q.id, q.question, std::move(*positive), std::move(negatives)});
    ++out.summary.kept;
  }
  std::sort(out.examples.begin(), out.examples.end(),
            [](const auto& a, const auto& b) { return a.qid < b.qid; });
  return out;
}

void write_examples(std::ostream& out, const std::vector<TrainingExample>& examples) {
  for (const auto& e : examples) {
    json pos = e.positive.is_indexed() ? json{{"kind", "indexed"}, {"value", e.positive.id()}}
                                       : json{{"kind", "text"}, {"value", e.positive.text()}};
    json obj = {{"qid", e.qid}, {"query", e.query}, {"positive", pos}, {"negatives", e.negatives}};
    out << obj.dump() << '\n';
  }
}

std::vector<TrainingExample> parse_examples(std::istream& in) {
  std::vector<TrainingExample> examples;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      const auto obj = json::parse(text);
      TrainingExample e;
      e.qid = obj.at("qid").get<QaId>();
      e.query = obj.at("query").get<std::string>();
      const auto& pos = obj.at("positive");
      const auto kind = pos.at("kind").get<std::string>();
      if (kind == "indexed") {
        e.positive = Positive{pos.at("value").get<QaId>()};
      } else if (kind == "text") {
        e.positive = Positive{pos.at("value").get<std::string>()};
      } else {
        throw ValidationError("unknown positive kind " + kind);
      }
      e.negatives = obj.at("negatives").get<std::vector<QaId>>();
      if (e.negatives.empty()) throw ValidationError("example has no negatives");
      examples.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw ValidationError("line " + std::to_string(line) + ": " + ex.what());
    } catch (const ValidationError& ex) {
      throw ValidationError("line " + std::to_string(line) + ": " + ex.what());
    }
  }
  return examples;
}

void save_examples(const std::filesystem::path& path, const std::vector<TrainingExample>& examples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_examples(out, examples);
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<TrainingExample> load_examples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_examples(in);
}

}  // namespace squid
