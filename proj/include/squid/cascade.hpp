#pragma once

#include <chrono>
#include <future>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "squid/common.hpp"
#include "squid/corpus.hpp"
#include "squid/dense_index.hpp"
#include "squid/encoder.hpp"
#include "squid/retriever.hpp"

namespace squid {

struct CascadeConfig {
  std::size_t k = 50;
  bool concurrent_encoders = false;
};

struct CandidateScore {
  QaId id;
  double stage1_score;
  double stage2_score;
  std::uint32_t stage1_rank;  // 1-based
  std::uint32_t stage2_rank;  // 1-based

  friend bool operator==(const CandidateScore&, const CandidateScore&) = default;
};

/// Candidates are listed in stage-1 order. An empty stage 1 yields
/// chosen == kNoAnswerId, an empty answer, and no candidates.
struct CascadeResult {
  std::string answer;
  QaId chosen = kNoAnswerId;
  std::vector<CandidateScore> candidates;

  bool has_answer() const { return chosen != kNoAnswerId; }

  friend bool operator==(const CascadeResult&, const CascadeResult&) = default;
};

/// Dense first-step retriever: full-scan MIPS with its own encoder.
template <typename Scalar>
class DenseRetriever final : public FirstStageRetriever {
 public:
  DenseRetriever(const EncoderParams<Scalar>& params, const EmbeddingMatrix& vectors)
      : params_(params), vectors_(vectors) {
    if (params.embed_dim() != vectors.dim()) {
      throw ValidationError("dense retriever: encoder and index dimensions differ");
    }
  }

  Ranking search(std::string_view query, std::size_t k) const override {
    return mips_full(vectors_, embed(params_, query), k);
  }
  std::size_t size() const override { return static_cast<std::size_t>(vectors_.size()); }

 private:
  const EncoderParams<Scalar>& params_;
  const EmbeddingMatrix& vectors_;
};

/// Two-step question retrieval: stage-1 top-k, then exact MIPS over the k
/// candidates' precomputed vectors; the answer of the best candidate wins.
/// Holds references only; every referenced object must outlive the cascade.
template <typename Scalar>
class Cascade {
 public:
  Cascade(const QACorpus& corpus, const FirstStageRetriever& stage1, const EncoderParams<Scalar>& params,
          const EmbeddingMatrix& index_vectors, CascadeConfig config = {})
      : corpus_(corpus), stage1_(stage1), params_(params), vectors_(index_vectors), config_(config) {
    if (config.k == 0) throw ValidationError("cascade k must be >= 1");
    if (stage1.size() != corpus.size() || static_cast<std::size_t>(index_vectors.size()) != corpus.size()) {
      throw ValidationError("cascade: corpus (" + std::to_string(corpus.size()) + "), stage-1 index (" +
                            std::to_string(stage1.size()) + ") and vectors (" +
                            std::to_string(index_vectors.size()) + ") sizes differ");
    }
    if (params.embed_dim() != index_vectors.dim()) {
      throw ValidationError("cascade: encoder dimension " + std::to_string(params.embed_dim()) +
                            " does not match vector dimension " + std::to_string(index_vectors.dim()));
    }
  }

  const CascadeConfig& config() const { return config_; }

  /// Same indexes and encoder, different fanout/concurrency.
  Cascade with_config(CascadeConfig config) const {
    return Cascade(corpus_, stage1_, params_, vectors_, config);
  }
  const QACorpus& corpus() const { return corpus_; }

  Ranking first_stage(std::string_view question) const { return stage1_.search(question, config_.k); }

  QuestionVector<Scalar> encode(std::string_view question) const { return embed(params_, question); }

  CascadeResult rerank(const Ranking& stage1, const QuestionVector<Scalar>& query) const {
    CascadeResult result;
    if (stage1.empty()) return result;

    std::vector<QaId> ids;
    ids.reserve(stage1.size());
    for (const auto& c : stage1) ids.push_back(c.id);
    const auto stage2 = mips_restricted(vectors_, query, ids, ids.size());

    result.candidates.reserve(stage1.size());
    for (std::size_t i = 0; i < stage1.size(); ++i) {
      result.candidates.push_back({stage1[i].id, stage1[i].score, 0.0, static_cast<std::uint32_t>(i + 1), 0});
    }
    for (std::size_t r = 0; r < stage2.size(); ++r) {
      for (auto& c : result.candidates) {
        if (c.id == stage2[r].id) {
          c.stage2_score = stage2[r].score;
          c.stage2_rank = static_cast<std::uint32_t>(r + 1);
          break;
        }
      }
    }
    result.chosen = stage2.front().id;
    result.answer = corpus_[result.chosen].answer;
    return result;
  }

  CascadeResult retrieve(std::string_view question) const {
    return rerank(first_stage(question), encode(question));
  }

  /// Positionally aligned with the input. With concurrent_encoders set, stage-1
  /// search runs on a worker thread while the caller encodes queries and runs
  /// the second step; the output is identical to the sequential path.
  /// latencies_ms, when given, receives per-query wall time.
  std::vector<CascadeResult> retrieve_batch(std::span<const std::string> questions,
                                            std::vector<double>* latencies_ms = nullptr) const {
    using Clock = std::chrono::steady_clock;
    std::vector<CascadeResult> out;
    out.reserve(questions.size());
    if (latencies_ms) latencies_ms->assign(questions.size(), 0.0);
    auto ms = [](Clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };

    if (!config_.concurrent_encoders) {
      for (std::size_t i = 0; i < questions.size(); ++i) {
        const auto t0 = Clock::now();
        out.push_back(retrieve(questions[i]));
        if (latencies_ms) (*latencies_ms)[i] = ms(Clock::now() - t0);
      }
      return out;
    }

    std::vector<std::promise<Ranking>> slots(questions.size());
    std::vector<Clock::time_point> stage1_start(questions.size());
    std::jthread worker([&] {
      for (std::size_t i = 0; i < questions.size(); ++i) {
        stage1_start[i] = Clock::now();
        try {
          slots[i].set_value(first_stage(questions[i]));
        } catch (...) {
          slots[i].set_exception(std::current_exception());
        }
      }
    });
    for (std::size_t i = 0; i < questions.size(); ++i) {
      const auto t0 = Clock::now();
      auto query = encode(questions[i]);
      auto stage1 = slots[i].get_future().get();
      out.push_back(rerank(stage1, query));
      if (latencies_ms) (*latencies_ms)[i] = ms(Clock::now() - std::min(t0, stage1_start[i]));
    }
    return out;
  }

 private:
  const QACorpus& corpus_;
  const FirstStageRetriever& stage1_;
  const EncoderParams<Scalar>& params_;
  const EmbeddingMatrix& vectors_;
  CascadeConfig config_;
};

}  // namespace squid
