#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "squid/cascade.hpp"
#include "squid/common.hpp"
#include "squid/corpus.hpp"
#include "squid/retriever.hpp"

namespace squid {

/// Anything that maps a question to an answer string ("" for no answer).
using AnswerFn = std::function<std::string(std::string_view)>;

/// Answer of the stage-1 top hit, or "" when stage 1 returns nothing.
AnswerFn stage1_answerer(const FirstStageRetriever& stage1, const QACorpus& corpus);

template <typename Scalar>
AnswerFn cascade_answerer(const Cascade<Scalar>& cascade) {
  return [&cascade](std::string_view q) { return cascade.retrieve(q).answer; };
}

struct QuestionOutcome {
  QaId qid;
  std::string answer;
  int em;

  friend bool operator==(const QuestionOutcome&, const QuestionOutcome&) = default;
};

struct EvalReport {
  double em = 0.0;  // percent
  std::size_t n = 0;
  std::map<std::size_t, double> recall_at_k;  // k -> percent
  std::vector<QuestionOutcome> per_question;

  std::string to_json(bool include_per_question = false) const;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// EM = 100 * mean exact match over the dataset. Throws on an empty dataset.
EvalReport eval_em(const AnswerFn& system, const EvalSet& dataset);

/// Percent of questions whose stage-1 top-k holds a candidate whose stored
/// answer exactly matches a gold, for each k. ks must be ascending and >= 1.
std::map<std::size_t, double> recall_at_k(const FirstStageRetriever& stage1, const QACorpus& corpus,
                                          const EvalSet& dataset, std::span<const std::size_t> ks);

enum class BenchMode { Sequential, Concurrent };

std::string_view to_string(BenchMode mode);
BenchMode parse_bench_mode(std::string_view name);

struct TrialStats {
  double wall_seconds;
  double q_per_sec;
};

struct BenchReport {
  double q_per_sec = 0.0;          // total_queries / wall_seconds
  std::size_t total_queries = 0;   // queries per timed trial
  double wall_seconds = 0.0;       // mean wall time of a timed trial
  std::size_t measured_queries = 0;  // total_queries * trials
  std::size_t warmup_queries = 0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  BenchMode mode = BenchMode::Sequential;
  std::size_t workers = 1;
  std::vector<TrialStats> trials;
  std::uint64_t checksum = 0;

  std::string to_json() const;
};

inline constexpr std::size_t kBenchTrials = 3;

/// Nearest-rank percentile of an ascending-sorted sample (p in (0, 100]).
double nearest_rank(std::span<const double> sorted, double p);

/// Runs `warmup` queries unmeasured (cycling through the list), then times the
/// whole list kBenchTrials times with the cascade in the requested mode.
/// Latency percentiles pool every timed query.
template <typename Scalar>
BenchReport bench_throughput(const Cascade<Scalar>& cascade, std::span<const std::string> queries,
                             std::size_t warmup, BenchMode mode);

/// One row of a k-sweep: EM and throughput at a given stage-1 fanout.
struct TradeoffPoint {
  std::size_t k;
  double em;
  double q_per_sec;
};

std::string tradeoff_csv(std::span<const TradeoffPoint> points);

// ---------------------------------------------------------------------------

template <typename Scalar>
BenchReport bench_throughput(const Cascade<Scalar>& cascade, std::span<const std::string> queries,
                             std::size_t warmup, BenchMode mode) {
  if (queries.empty()) throw ValidationError("bench_throughput: no queries");
  using Clock = std::chrono::steady_clock;

  CascadeConfig cfg = cascade.config();
  cfg.concurrent_encoders = mode == BenchMode::Concurrent;
  const auto runner = cascade.with_config(cfg);

  BenchReport report;
  report.mode = mode;
  report.workers = mode == BenchMode::Concurrent ? 2 : 1;
  report.total_queries = queries.size();
  report.warmup_queries = warmup;

  std::vector<std::string> warm;
  for (std::size_t i = 0; i < warmup; ++i) warm.push_back(queries[i % queries.size()]);

  runner.retrieve_batch(warm);

  std::vector<double> all_latencies;
  double wall_total = 0.0;
  for (std::size_t t = 0; t < kBenchTrials; ++t) {
    std::vector<double> lat;
    const auto t0 = Clock::now();
    const auto results = runner.retrieve_batch(queries, &lat);
    const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
    for (const auto& r : results) report.checksum += r.chosen;
    all_latencies.insert(all_latencies.end(), lat.begin(), lat.end());
    report.trials.push_back({wall, static_cast<double>(queries.size()) / wall});
    wall_total += wall;
  }
  report.measured_queries = queries.size() * kBenchTrials;
  report.wall_seconds = wall_total / static_cast<double>(kBenchTrials);
  report.q_per_sec = static_cast<double>(report.total_queries) / report.wall_seconds;

  std::sort(all_latencies.begin(), all_latencies.end());
  report.p50_ms = nearest_rank(all_latencies, 50.0);
  report.p95_ms = nearest_rank(all_latencies, 95.0);
  report.p99_ms = nearest_rank(all_latencies, 99.0);
  return report;
}

}  // namespace squid
