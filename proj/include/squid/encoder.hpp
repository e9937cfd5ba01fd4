#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string_view>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "squid/common.hpp"
#include "squid/textnorm.hpp"

namespace squid {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using FeatureVector = Eigen::SparseVector<Scalar>;

/// E_Q output. One shared encoder embeds queries and indexed questions.
template <typename Scalar>
using QuestionVector = Vector<Scalar>;

inline constexpr Eigen::Index kDefaultHashDim = Eigen::Index{1} << 16;
inline constexpr Eigen::Index kDefaultEmbedDim = 128;

/// 64-bit FNV-1a over raw bytes.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline Eigen::Index hash_bucket(std::string_view token, Eigen::Index hash_dim, std::uint64_t seed) {
  return static_cast<Eigen::Index>((fnv1a64(token) ^ seed) % static_cast<std::uint64_t>(hash_dim));
}

/// Hashed bag of tokens: bucket value = count / sqrt(total tokens).
/// Empty (after normalization) text maps to the zero vector.
template <typename Scalar = double>
FeatureVector<Scalar> featurize(std::string_view text, Eigen::Index hash_dim, std::uint64_t seed) {
  if (hash_dim < 1) throw ValidationError("hash_dim must be >= 1");
  const auto tokens = normalize(text);
  std::map<Eigen::Index, int> counts;
  for (const auto& t : tokens) ++counts[hash_bucket(t, hash_dim, seed)];

  FeatureVector<Scalar> f(hash_dim);
  f.reserve(static_cast<Eigen::Index>(counts.size()));
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(tokens.size()));
  for (const auto& [bucket, count] : counts) f.insertBack(bucket) = static_cast<Scalar>(count) * scale;
  return f;
}

/// Parameters of the linear question encoder: embed(x) = weights * featurize(x).
/// weights is embed_dim x hash_dim, so column c is the contribution of bucket c.
template <typename Scalar>
struct EncoderParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  std::uint64_t seed = 0;  // feature-hash seed
  Matrix weights;

  Eigen::Index hash_dim() const { return weights.cols(); }
  Eigen::Index embed_dim() const { return weights.rows(); }

  static EncoderParams zeros(Eigen::Index hash_dim, Eigen::Index embed_dim, std::uint64_t seed) {
    check_shape(hash_dim, embed_dim);
    return {seed, Matrix::Zero(embed_dim, hash_dim)};
  }

  /// Gaussian init with variance 1/embed_dim, so that E[W^T W] = I and the
  /// untrained encoder approximates normalized bag-of-words overlap.
  static EncoderParams random(Eigen::Index hash_dim, Eigen::Index embed_dim, std::uint64_t seed,
                              std::uint64_t init_seed) {
    check_shape(hash_dim, embed_dim);
    std::mt19937_64 rng(init_seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(embed_dim)));
    Matrix w(embed_dim, hash_dim);
    for (Eigen::Index c = 0; c < hash_dim; ++c) {
      for (Eigen::Index r = 0; r < embed_dim; ++r) w(r, c) = static_cast<Scalar>(normal(rng));
    }
    return {seed, std::move(w)};
  }

  template <typename Other>
  EncoderParams<Other> cast() const {
    return {seed, weights.template cast<Other>()};
  }

  bool valid() const {
    return hash_dim() >= embed_dim() && embed_dim() >= 1 && weights.allFinite();
  }

  static void check_shape(Eigen::Index hash_dim, Eigen::Index embed_dim) {
    if (embed_dim < 1 || hash_dim < embed_dim) {
      throw ValidationError("encoder shape requires hash_dim >= embed_dim >= 1");
    }
  }
};

template <typename Scalar>
FeatureVector<Scalar> featurize(const EncoderParams<Scalar>& params, std::string_view text) {
  return featurize<Scalar>(text, params.hash_dim(), params.seed);
}

template <typename Scalar>
QuestionVector<Scalar> embed_features(const EncoderParams<Scalar>& params,
                                      const FeatureVector<Scalar>& features) {
  QuestionVector<Scalar> out = QuestionVector<Scalar>::Zero(params.embed_dim());
  for (typename FeatureVector<Scalar>::InnerIterator it(features); it; ++it) {
    out.noalias() += it.value() * params.weights.col(it.index());
  }
  return out;
}

template <typename Scalar>
QuestionVector<Scalar> embed(const EncoderParams<Scalar>& params, std::string_view text) {
  return embed_features(params, featurize(params, text));
}

/// Dot-product similarity. Accumulates in double regardless of operand types.
template <typename A, typename B>
double sim(const Eigen::MatrixBase<A>& v1, const Eigen::MatrixBase<B>& v2) {
  if (v1.size() != v2.size()) {
    throw ValidationError("sim: dimension mismatch (" + std::to_string(v1.size()) + " vs " +
                          std::to_string(v2.size()) + ")");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v1.size(); ++i) {
    acc += static_cast<double>(v1.coeff(i)) * static_cast<double>(v2.coeff(i));
  }
  return acc;
}

}  // namespace squid
