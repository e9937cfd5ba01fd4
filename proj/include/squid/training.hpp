#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "squid/common.hpp"
#include "squid/corpus.hpp"
#include "squid/encoder.hpp"
#include "squid/retriever.hpp"
#include "squid/supervision.hpp"

namespace squid {

// ---------------------------------------------------------------------------
// Contrastive loss
//
//   L = -log( exp(s+) / (exp(s+) + sum_i exp(s_i-)) ) = logsumexp(s+, s-...) - s+
//
// evaluated with max subtraction so |s| up to 1e4 neither overflows nor
// underflows to a spurious 0 when the positive dominates.
// ---------------------------------------------------------------------------

template <typename Scalar>
Scalar contrastive_loss(Scalar sim_pos, std::span<const Scalar> sim_negs) {
  if (sim_negs.empty()) throw ValidationError("contrastive_loss: no negatives");
  if (!std::isfinite(sim_pos)) throw ValidationError("contrastive_loss: non-finite positive similarity");
  Scalar top = sim_pos;
  for (const Scalar s : sim_negs) {
    if (!std::isfinite(s)) throw ValidationError("contrastive_loss: non-finite negative similarity");
    top = std::max(top, s);
  }
  Scalar tail = 0;
  for (const Scalar s : sim_negs) tail += std::exp(s - top);
  if (top == sim_pos) return std::log1p(tail);
  return (top - sim_pos) + std::log(std::exp(sim_pos - top) + tail);
}

template <typename Scalar>
Scalar contrastive_loss(Scalar sim_pos, const std::vector<Scalar>& sim_negs) {
  return contrastive_loss(sim_pos, std::span<const Scalar>(sim_negs));
}

/// dL/ds_j for s = (s+, s_1-, ..., s_m-): softmax(s) - e_0.
template <typename Scalar>
Vector<Scalar> contrastive_sim_grad(const Vector<Scalar>& sims) {
  const Scalar top = sims.maxCoeff();
  Vector<Scalar> p = (sims.array() - top).exp().matrix();
  p /= p.sum();
  p(0) -= Scalar(1);
  return p;
}

// ---------------------------------------------------------------------------
// Loss and gradient through the shared linear encoder.
//
// With e = W f and s_j = e_q . e_j, and g_j = dL/ds_j:
//   dL/dW = e_q u^T + v f_q^T,   u = sum_j g_j f_j,   v = sum_j g_j e_j
// Both sides of every similarity go through W. The gradient is nonzero only
// on columns touched by some feature vector, so it is kept column-sparse.
// ---------------------------------------------------------------------------

template <typename Scalar>
struct ResolvedExample {
  FeatureVector<Scalar> query;
  FeatureVector<Scalar> positive;
  std::vector<FeatureVector<Scalar>> negatives;
};

template <typename Scalar>
struct SparseGradient {
  std::vector<Eigen::Index> columns;  // ascending
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> block;  // embed_dim x columns.size()

  typename EncoderParams<Scalar>::Matrix to_dense(Eigen::Index embed_dim, Eigen::Index hash_dim) const {
    typename EncoderParams<Scalar>::Matrix g = EncoderParams<Scalar>::Matrix::Zero(embed_dim, hash_dim);
    for (std::size_t i = 0; i < columns.size(); ++i) g.col(columns[i]) = block.col(static_cast<Eigen::Index>(i));
    return g;
  }
};

template <typename Scalar>
struct SparseLossGrad {
  Scalar loss;
  SparseGradient<Scalar> gradient;
};

template <typename Scalar>
struct LossAndGrad {
  Scalar loss;
  typename EncoderParams<Scalar>::Matrix gradient;
};

/// Features for every indexed question, computed once per encoder shape.
template <typename Scalar>
std::vector<FeatureVector<Scalar>> featurize_corpus(const QACorpus& corpus, Eigen::Index hash_dim,
                                                    std::uint64_t seed) {
  std::vector<FeatureVector<Scalar>> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus) out.push_back(featurize<Scalar>(p.question, hash_dim, seed));
  return out;
}

/// Resolves ids to feature vectors. At most max_negatives negatives are kept
/// (0 keeps all).
template <typename Scalar>
ResolvedExample<Scalar> resolve(const TrainingExample& example, std::span<const FeatureVector<Scalar>> corpus_features,
                                Eigen::Index hash_dim, std::uint64_t seed, std::size_t max_negatives = 0) {
  auto lookup = [&](QaId id) -> const FeatureVector<Scalar>& {
    if (id >= corpus_features.size()) throw ValidationError("example references unknown id " + std::to_string(id));
    return corpus_features[id];
  };
  ResolvedExample<Scalar> r;
  r.query = featurize<Scalar>(example.query, hash_dim, seed);
  r.positive = example.positive.is_indexed() ? lookup(example.positive.id())
                                             : featurize<Scalar>(example.positive.text(), hash_dim, seed);
  const auto n = max_negatives == 0 ? example.negatives.size() : std::min(max_negatives, example.negatives.size());
  for (std::size_t i = 0; i < n; ++i) r.negatives.push_back(lookup(example.negatives[i]));
  if (r.negatives.empty()) throw ValidationError("training example has no negatives");
  return r;
}

template <typename Scalar>
SparseLossGrad<Scalar> sparse_loss_and_grad(const EncoderParams<Scalar>& params, const ResolvedExample<Scalar>& ex) {
  const auto check = [&](const FeatureVector<Scalar>& f) {
    if (f.size() != params.hash_dim()) throw ValidationError("loss_and_grad: feature dimension mismatch");
  };
  check(ex.query);
  check(ex.positive);
  for (const auto& f : ex.negatives) check(f);
  if (ex.negatives.empty()) throw ValidationError("loss_and_grad: no negatives");

  const std::size_t n = ex.negatives.size() + 1;
  auto feature = [&](std::size_t j) -> const FeatureVector<Scalar>& { return j == 0 ? ex.positive : ex.negatives[j - 1]; };

  const QuestionVector<Scalar> eq = embed_features(params, ex.query);
  std::vector<QuestionVector<Scalar>> emb;
  emb.reserve(n);
  Vector<Scalar> sims(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    emb.push_back(embed_features(params, feature(j)));
    sims(static_cast<Eigen::Index>(j)) = eq.dot(emb.back());
  }

  std::vector<Scalar> negs(sims.data() + 1, sims.data() + n);
  const Scalar loss = contrastive_loss<Scalar>(sims(0), std::span<const Scalar>(negs));
  const Vector<Scalar> g = contrastive_sim_grad(sims);

  std::map<Eigen::Index, Scalar> u;
  Vector<Scalar> v = Vector<Scalar>::Zero(params.embed_dim());
  for (std::size_t j = 0; j < n; ++j) {
    const Scalar gj = g(static_cast<Eigen::Index>(j));
    v.noalias() += gj * emb[j];
    for (typename FeatureVector<Scalar>::InnerIterator it(feature(j)); it; ++it) u[it.index()] += gj * it.value();
  }
  std::map<Eigen::Index, Scalar> fq;
  for (typename FeatureVector<Scalar>::InnerIterator it(ex.query); it; ++it) {
    fq[it.index()] = it.value();
    u.try_emplace(it.index(), Scalar(0));
  }

  SparseLossGrad<Scalar> out{loss, {}};
  out.gradient.columns.reserve(u.size());
  out.gradient.block.resize(params.embed_dim(), static_cast<Eigen::Index>(u.size()));
  Eigen::Index col = 0;
  for (const auto& [c, uc] : u) {
    out.gradient.columns.push_back(c);
    auto it = fq.find(c);
    const Scalar fqc = it == fq.end() ? Scalar(0) : it->second;
    out.gradient.block.col(col++) = eq * uc + v * fqc;
  }
  return out;
}

template <typename Scalar>
LossAndGrad<Scalar> loss_and_grad(const EncoderParams<Scalar>& params, const ResolvedExample<Scalar>& ex) {
  auto sparse = sparse_loss_and_grad(params, ex);
  return {sparse.loss, sparse.gradient.to_dense(params.embed_dim(), params.hash_dim())};
}

template <typename Scalar>
LossAndGrad<Scalar> loss_and_grad(const EncoderParams<Scalar>& params, const TrainingExample& example,
                                  const QACorpus& corpus) {
  const auto features = featurize_corpus<Scalar>(corpus, params.hash_dim(), params.seed);
  return loss_and_grad(params, resolve<Scalar>(example, features, params.hash_dim(), params.seed));
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  std::size_t m = 16;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  std::size_t epoch;  // 1-based
  double mean_loss;
  double val_em;
};

struct TrainReport {
  double initial_val_em = 0.0;
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;  // 0 means the initial parameters were best
  bool stopped_early = false;

  std::string to_json() const;
};

using TrainParams = EncoderParams<double>;

struct TrainResult {
  TrainParams params;
  TrainReport report;
};

/// Validation EM (percent) of a parameter set.
using Validator = std::function<double(const TrainParams&)>;

/// Mini-batch gradient descent on the mean contrastive loss. Examples are
/// reshuffled each epoch with a seed derived from (config.seed, epoch);
/// gradients accumulate in batch order. After each epoch the validator runs;
/// training stops once `patience` epochs pass without a strict improvement,
/// and the best parameters seen (possibly params0) are returned.
TrainResult train(TrainParams params0, const std::vector<TrainingExample>& examples, const QACorpus& corpus,
                  const TrainConfig& config, const Validator& validate_em);

/// Same, validating with the full cascade (stage 1 + restricted MIPS) on val_set.
TrainResult train(TrainParams params0, const std::vector<TrainingExample>& examples, const QACorpus& corpus,
                  const EvalSet& val_set, const FirstStageRetriever& first_stage, const TrainConfig& config,
                  std::size_t cascade_k = 50);

// Checkpoint: "SQCK", u32 version, TrainConfig echo, u64 hash seed, then an
// SQEM block holding the embed_dim x hash_dim weights as float32.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  TrainConfig config;
  EncoderParams<float> params;
};

void write_checkpoint(std::ostream& out, const TrainConfig& config, const TrainParams& params);
void save_checkpoint(const std::filesystem::path& path, const TrainConfig& config, const TrainParams& params);
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace squid
