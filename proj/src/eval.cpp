#include "squid/eval.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "squid/textnorm.hpp"

namespace squid {

using nlohmann::json;

AnswerFn stage1_answerer(const FirstStageRetriever& stage1, const QACorpus& corpus) {
  return [&stage1, &corpus](std::string_view q) -> std::string {
    const auto hits = stage1.search(q, 1);
    return hits.empty() ? std::string() : corpus[hits.front().id].answer;
  };
}

EvalReport eval_em(const AnswerFn& system, const EvalSet& dataset) {
  if (dataset.empty()) throw ValidationError("eval_em: empty dataset");
  EvalReport report;
  report.n = dataset.size();
  std::size_t hits = 0;
  for (const auto& q : dataset) {
    auto answer = system(q.question);
    const int em = answer.empty() ? 0 : exact_match(answer, q.gold_answers);
    hits += static_cast<std::size_t>(em);
    report.per_question.push_back({q.id, std::move(answer), em});
  }
  report.em = 100.0 * static_cast<double>(hits) / static_cast<double>(dataset.size());
  return report;
}

std::map<std::size_t, double> recall_at_k(const FirstStageRetriever& stage1, const QACorpus& corpus,
                                          const EvalSet& dataset, std::span<const std::size_t> ks) {
  if (dataset.empty()) throw ValidationError("recall_at_k: empty dataset");
  if (ks.empty()) return {};
  if (ks.front() == 0) throw ValidationError("recall_at_k: k must be >= 1");
  if (!std::is_sorted(ks.begin(), ks.end())) throw ValidationError("recall_at_k: ks must be ascending");

  const std::size_t k_max = ks.back();
  std::vector<std::size_t> found(ks.size(), 0);
  for (const auto& q : dataset) {
    const auto hits = stage1.search(q.question, k_max);
    // 1-based rank of the first candidate carrying a gold answer.
    std::size_t first = 0;
    for (std::size_t r = 0; r < hits.size(); ++r) {
      if (exact_match(corpus[hits[r].id].answer, q.gold_answers) == 1) {
        first = r + 1;
        break;
      }
    }
    if (first == 0) continue;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (first <= ks[i]) ++found[i];
    }
  }
  std::map<std::size_t, double> out;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    out[ks[i]] = 100.0 * static_cast<double>(found[i]) / static_cast<double>(dataset.size());
  }
  return out;
}

std::string EvalReport::to_json(bool include_per_question) const {
  json obj = {{"em", em}, {"n", n}};
  json recall = json::object();
  for (const auto& [k, v] : recall_at_k) recall[std::to_string(k)] = v;
  obj["recall_at_k"] = recall;
  if (include_per_question) {
    json rows = json::array();
    for (const auto& q : per_question) rows.push_back({{"qid", q.qid}, {"answer", q.answer}, {"em", q.em}});
    obj["per_question"] = rows;
  }
  return obj.dump(2);
}

std::string_view to_string(BenchMode mode) {
  return mode == BenchMode::Concurrent ? "concurrent" : "sequential";
}

BenchMode parse_bench_mode(std::string_view name) {
  if (name == "sequential") return BenchMode::Sequential;
  if (name == "concurrent") return BenchMode::Concurrent;
  throw ValidationError("unknown bench mode: " + std::string(name));
}

double nearest_rank(std::span<const double> sorted, double p) {
  if (sorted.empty()) return 0.0;
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

std::string BenchReport::to_json() const {
  json trial_rows = json::array();
  for (const auto& t : trials) trial_rows.push_back({{"wall_seconds", t.wall_seconds}, {"q_per_sec", t.q_per_sec}});
  json obj = {
      {"q_per_sec", q_per_sec},
      {"total_queries", total_queries},
      {"wall_seconds", wall_seconds},
      {"measured_queries", measured_queries},
      {"warmup_queries", warmup_queries},
      {"latency_ms", {{"p50", p50_ms}, {"p95", p95_ms}, {"p99", p99_ms}}},
      {"mode", std::string(to_string(mode))},
      {"workers", workers},
      {"trials", trial_rows},
      {"checksum", checksum},
  };
  return obj.dump(2);
}

std::string tradeoff_csv(std::span<const TradeoffPoint> points) {
  std::ostringstream out;
  out << "k,em,q_per_sec\n";
  for (const auto& p : points) out << p.k << ',' << p.em << ',' << p.q_per_sec << '\n';
  return out.str();
}

}  // namespace squid
