#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "json.hpp"
#include "oracles.hpp"
#include "squid/eval.hpp"
#include "squid/sparse_index.hpp"
#include "stub_retriever.hpp"

using namespace squid;
using squid::testing::StubRetriever;

namespace {

EvalSet ten_questions() {
  EvalSet set;
  for (QaId i = 0; i < 10; ++i) set.push_back({i, "q" + std::to_string(i), {"gold " + std::to_string(i), "alt"}});
  return set;
}

}  // namespace

TEST_CASE("EM of trivial systems") {
  const auto set = ten_questions();
  auto oracle_system = [&](std::string_view q) {
    for (const auto& e : set) {
      if (e.question == q) return e.gold_answers.front();
    }
    return std::string();
  };
  CHECK(eval_em(oracle_system, set).em == 100.0);
  CHECK(eval_em([](std::string_view) { return std::string(); }, set).em == 0.0);
  CHECK_THROWS_AS(eval_em(oracle_system, EvalSet{}), ValidationError);
}

TEST_CASE("EM on a hand-labelled fixture is 70") {
  const auto set = ten_questions();
  // Hand-verified: q0..q6 normalize to a gold, q7..q9 do not.
  const std::vector<std::string> answers{"Gold 0",  "gold 1!", "the gold 2", "ALT",     "alt.", "gold  5",
                                         "a gold 6", "gold 8", "gold",       "alt gold"};
  auto system = [&](std::string_view q) { return answers[std::stoul(std::string(q.substr(1)))]; };
  const auto report = eval_em(system, set);
  CHECK(report.em == 70.0);
  CHECK(report.n == 10);
  REQUIRE(report.per_question.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(report.per_question[i].em == (i < 7 ? 1 : 0));
  const auto j = nlohmann::json::parse(report.to_json(true));
  CHECK(j["em"] == 70.0);
  CHECK(j["per_question"].size() == 10);
}

TEST_CASE("planted recall: 6 of 10 questions have the paraphrase in the top 5") {
  QACorpus corpus;
  for (QaId i = 0; i < 10; ++i) corpus.push_back({i, "p" + std::to_string(i), "gold " + std::to_string(i), ""});
  for (QaId i = 0; i < 40; ++i) corpus.push_back({10 + i, "d" + std::to_string(i), "noise " + std::to_string(i), ""});
  StubRetriever stub(corpus.size());
  const auto set = ten_questions();
  for (QaId i = 0; i < 10; ++i) {
    Ranking r;
    for (QaId j = 0; j < 10; ++j) r.push_back({10 + (i * 3 + j) % 40, 10.0 - j});
    // Paraphrase at rank 2 for six questions, rank 8 for two, absent for two.
    if (i < 6) r.insert(r.begin() + 1, {i, 9.5});
    else if (i < 8) r.insert(r.begin() + 7, {i, 3.5});
    stub.set(set[i].question, r);
  }
  const std::vector<std::size_t> ks{1, 5, 10, 50};
  const auto recall = recall_at_k(stub, corpus, set, ks);
  CHECK(recall.at(1) == 0.0);
  CHECK(recall.at(5) == 60.0);
  CHECK(recall.at(10) == 80.0);
  CHECK(recall.at(50) == 80.0);

  const std::vector<std::size_t> unsorted{5, 1};
  CHECK_THROWS_AS(recall_at_k(stub, corpus, set, unsorted), ValidationError);
}

TEST_CASE("recall is monotone in k and reaches 100 at full depth") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 10; ++t) {
    const auto corpus = oracle::random_corpus(rng, 80, 30, 6);
    const auto sparse = build_sparse_index(corpus);
    EvalSet set;
    for (const auto& p : oracle::random_corpus(rng, 40, 30, 4)) {
      set.push_back({p.id, p.question, {"ans" + std::to_string(rng() % 7)}});
    }
    const std::vector<std::size_t> ks{1, 2, 5, 10, 20, 50, 80};
    const auto r = recall_at_k(sparse, corpus, set, ks);
    double prev = 0.0;
    for (const auto k : ks) {
      CHECK(r.at(k) >= prev);
      prev = r.at(k);
    }
  }
  // Every question is a verbatim indexed question with its own answer.
  const QACorpus corpus{{0, "alpha", "x", ""}, {1, "beta", "y", ""}, {2, "gamma", "z", ""}};
  const auto sparse = build_sparse_index(corpus);
  const EvalSet set{{0, "alpha", {"x"}}, {1, "beta", {"y"}}, {2, "gamma", {"z"}}};
  const std::vector<std::size_t> ks{3};
  CHECK(recall_at_k(sparse, corpus, set, ks).at(3) == 100.0);
}

TEST_CASE("nearest-rank percentiles") {
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(nearest_rank(v, 50) == 5);
  CHECK(nearest_rank(v, 95) == 10);
  CHECK(nearest_rank(v, 10) == 1);
  CHECK(nearest_rank(v, 100) == 10);
  const std::vector<double> one{4.2};
  CHECK(nearest_rank(one, 99) == 4.2);
}

TEST_CASE("bench accounting identities") {
  std::mt19937_64 rng(30);
  const auto corpus = oracle::random_corpus(rng, 300, 60, 8);
  const auto sparse = build_sparse_index(corpus);
  const auto params = EncoderParams<double>::random(1024, 32, 0, 1);
  const auto vectors = embed_corpus(params, corpus);
  const Cascade<double> cascade(corpus, sparse, params, vectors, {50, false});
  std::vector<std::string> queries;
  for (const auto& p : oracle::random_corpus(rng, 300, 60, 5)) queries.push_back(p.question);

  for (const auto mode : {BenchMode::Sequential, BenchMode::Concurrent}) {
    const auto r = bench_throughput(cascade, queries, 25, mode);
    CHECK(r.total_queries == queries.size());
    CHECK(r.measured_queries == queries.size() * kBenchTrials);
    CHECK(r.warmup_queries == 25);
    REQUIRE(r.trials.size() == kBenchTrials);
    CHECK(r.q_per_sec * r.wall_seconds == Catch::Approx(static_cast<double>(r.total_queries)).epsilon(1e-12));
    double mean = 0.0;
    for (const auto& t : r.trials) mean += t.wall_seconds / kBenchTrials;
    CHECK(r.wall_seconds == Catch::Approx(mean).epsilon(1e-12));
    CHECK(r.p50_ms <= r.p95_ms);
    CHECK(r.p95_ms <= r.p99_ms);
    CHECK(r.mode == mode);
    const auto j = nlohmann::json::parse(r.to_json());
    CHECK(j["trials"].size() == kBenchTrials);
  }

  auto doubled = queries;
  doubled.insert(doubled.end(), queries.begin(), queries.end());
  const auto single = bench_throughput(cascade, queries, 25, BenchMode::Sequential);
  const auto twice = bench_throughput(cascade, doubled, 25, BenchMode::Sequential);
  CHECK(twice.total_queries == 2 * single.total_queries);
  CHECK(twice.q_per_sec > 0.5 * single.q_per_sec);
  CHECK(twice.q_per_sec < 1.5 * single.q_per_sec);

  CHECK_THROWS_AS(bench_throughput(cascade, std::vector<std::string>{}, 0, BenchMode::Sequential), ValidationError);
}

TEST_CASE("trade-off CSV and bench mode names") {
  const std::vector<TradeoffPoint> pts{{1, 30.0, 900.0}, {50, 70.5, 300.25}};
  CHECK(tradeoff_csv(pts) == "k,em,q_per_sec\n1,30,900\n50,70.5,300.25\n");
  CHECK(parse_bench_mode("concurrent") == BenchMode::Concurrent);
  CHECK_THROWS_AS(parse_bench_mode("parallel"), ValidationError);
}
