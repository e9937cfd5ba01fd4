#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "squid/cascade.hpp"
#include "squid/eval.hpp"
#include "squid/sparse_index.hpp"

using namespace squid;

namespace {

struct World {
  QACorpus corpus;
  SparseIndex sparse;
  EncoderParams<double> params;
  EmbeddingMatrix vectors;
};

World random_world(std::uint64_t seed, std::size_t docs = 120) {
  std::mt19937_64 rng(seed);
  auto corpus = oracle::random_corpus(rng, docs, 40, 7);
  auto sparse = build_sparse_index(corpus);
  auto params = EncoderParams<double>::random(256, 16, seed, seed + 1);
  auto vectors = embed_corpus(params, corpus);
  return {std::move(corpus), std::move(sparse), std::move(params), std::move(vectors)};
}

std::vector<std::string> random_queries(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  for (const auto& p : oracle::random_corpus(rng, n, 45, 5)) out.push_back(p.question);
  return out;
}

}  // namespace

TEST_CASE("hand fixture: the encoder overrides a lexical distractor") {
  const QACorpus corpus{{0, "which city is capital of germany", "berlin", ""},
                        {1, "france capital is what", "paris", ""},
                        {2, "who wrote hamlet", "shakespeare", ""},
                        {3, "largest ocean on earth", "pacific", ""},
                        {4, "capital of spain", "madrid", ""},
                        {5, "currency of japan", "yen", ""}};
  const std::string query = "which city is capital of france";
  const auto sparse = build_sparse_index(corpus);

  const Eigen::Index h = 4096;
  auto params = EncoderParams<double>::zeros(h, 2, 0);
  const auto b_france = hash_bucket("france", h, 0);
  const auto b_germany = hash_bucket("germany", h, 0);
  const auto b_spain = hash_bucket("spain", h, 0);
  std::set<Eigen::Index> other;
  for (const auto& p : corpus) {
    for (const auto& t : normalize(p.question)) {
      if (t != "france" && t != "germany" && t != "spain") other.insert(hash_bucket(t, h, 0));
    }
  }
  for (const auto b : {b_france, b_germany, b_spain}) REQUIRE(other.count(b) == 0);
  REQUIRE(b_france != b_germany);
  params.weights.col(b_france) << 1.0, 0.0;
  params.weights.col(b_germany) << 0.0, 1.0;
  params.weights.col(b_spain) << 0.0, 1.0;
  const auto vectors = embed_corpus(params, corpus);

  const Cascade<double> cascade(corpus, sparse, params, vectors, {6, false});
  const auto stage1 = cascade.first_stage(query);
  REQUIRE_FALSE(stage1.empty());
  CHECK(stage1.front().id == 0);

  const auto result = cascade.retrieve(query);
  CHECK(result.chosen == 1);
  CHECK(result.answer == "paris");
  for (const auto& c : result.candidates) {
    if (c.id == 1) {
      // e_q = (1/sqrt 6, 0), row 1 = (1/2, 0).
      CHECK(c.stage2_score == Catch::Approx(1.0 / (2.0 * std::sqrt(6.0))).epsilon(1e-6));
      CHECK(c.stage2_rank == 1);
    }
    if (c.id == 0) {
      CHECK(c.stage1_rank == 1);
      CHECK(c.stage2_score == 0.0);
    }
  }
}

TEST_CASE("k = 1 leaves the stage-1 choice unchanged") {
  const auto w = random_world(1);
  const Cascade<double> cascade(w.corpus, w.sparse, w.params, w.vectors, {1, false});
  for (const auto& q : random_queries(2, 100)) {
    const auto hits = w.sparse.search(q, 1);
    const auto r = cascade.retrieve(q);
    if (hits.empty()) {
      CHECK_FALSE(r.has_answer());
    } else {
      CHECK(r.chosen == hits[0].id);
      CHECK(r.answer == w.corpus[hits[0].id].answer);
    }
  }
}

TEST_CASE("no shared terms gives the no-answer marker") {
  const auto w = random_world(3);
  const Cascade<double> cascade(w.corpus, w.sparse, w.params, w.vectors);
  const auto r = cascade.retrieve("zebra quokka");
  CHECK_FALSE(r.has_answer());
  CHECK(r.chosen == kNoAnswerId);
  CHECK(r.answer.empty());
  CHECK(r.candidates.empty());
}

TEST_CASE("result invariants") {
  const auto w = random_world(4);
  const Cascade<double> cascade(w.corpus, w.sparse, w.params, w.vectors, {20, false});
  for (const auto& q : random_queries(5, 100)) {
    const auto r = cascade.retrieve(q);
    if (!r.has_answer()) continue;
    const auto stage1 = w.sparse.search(q, 20);
    REQUIRE(r.candidates.size() == stage1.size());
    std::vector<bool> seen(r.candidates.size() + 1, false);
    bool chosen_in = false;
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
      const auto& c = r.candidates[i];
      CHECK(c.id == stage1[i].id);
      CHECK(c.stage1_rank == i + 1);
      REQUIRE(c.stage2_rank >= 1);
      REQUIRE(c.stage2_rank <= r.candidates.size());
      CHECK_FALSE(seen[c.stage2_rank]);
      seen[c.stage2_rank] = true;
      if (c.id == r.chosen) {
        chosen_in = true;
        CHECK(c.stage2_rank == 1);
      }
    }
    CHECK(chosen_in);
    CHECK(r.answer == w.corpus[r.chosen].answer);
  }
}

TEST_CASE("construction validates sizes") {
  const auto w = random_world(6);
  QACorpus shorter(w.corpus.begin(), w.corpus.end() - 1);
  CHECK_THROWS_AS(Cascade<double>(shorter, w.sparse, w.params, w.vectors), ValidationError);
  const auto narrow = EncoderParams<double>::random(256, 8, 0, 1);
  CHECK_THROWS_AS(Cascade<double>(w.corpus, w.sparse, narrow, w.vectors), ValidationError);
  CHECK_THROWS_AS(Cascade<double>(w.corpus, w.sparse, w.params, w.vectors, {0, false}), ValidationError);
}

TEST_CASE("concurrent batch equals sequential retrieve") {
  const auto w = random_world(7, 200);
  const Cascade<double> seq(w.corpus, w.sparse, w.params, w.vectors, {50, false});
  const auto con = seq.with_config({50, true});
  const auto queries = random_queries(8, 200);
  std::vector<double> lat;
  const auto a = seq.retrieve_batch(queries);
  const auto b = con.retrieve_batch(queries, &lat);
  REQUIRE(a.size() == queries.size());
  CHECK(a == b);
  CHECK(lat.size() == queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) CHECK(a[i] == seq.retrieve(queries[i]));
}

TEST_CASE("dense first stage plugs into the cascade") {
  const auto w = random_world(9);
  const DenseRetriever<double> dense(w.params, w.vectors);
  CHECK(dense.size() == w.corpus.size());
  const Cascade<double> cascade(w.corpus, dense, w.params, w.vectors, {10, false});
  const auto q = random_queries(10, 1)[0];
  const auto r = cascade.retrieve(q);
  // Same encoder on both steps, so stage 2 agrees with stage 1's top hit.
  REQUIRE(r.has_answer());
  CHECK(r.chosen == dense.search(q, 1)[0].id);
}

TEST_CASE("upper-bound law: EM never exceeds R@k") {
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    const auto w = random_world(seed);
    EvalSet dataset;
    std::mt19937_64 rng(seed);
    for (const auto& q : random_queries(seed + 100, 60)) {
      dataset.push_back({static_cast<QaId>(dataset.size()), q, {"ans" + std::to_string(rng() % 7)}});
    }
    for (const std::size_t k : {1, 5, 50}) {
      const Cascade<double> cascade(w.corpus, w.sparse, w.params, w.vectors, {k, false});
      const std::vector<std::size_t> ks{k};
      const double em = eval_em(cascade_answerer(cascade), dataset).em;
      CHECK(em <= recall_at_k(w.sparse, w.corpus, dataset, ks).at(k));
    }
  }
}
