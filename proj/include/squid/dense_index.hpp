#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include <Eigen/Core>

#include "squid/common.hpp"
#include "squid/corpus.hpp"
#include "squid/encoder.hpp"

namespace squid {

/// Precomputed question vectors, one row per QA pair, 32-bit storage.
struct EmbeddingMatrix {
  using Storage = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  static constexpr std::uint32_t kFormatVersion = 1;

  Storage rows;

  Eigen::Index size() const { return rows.rows(); }
  Eigen::Index dim() const { return rows.cols(); }

  void write(std::ostream& out) const;
  static EmbeddingMatrix read(std::istream& in);
};

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

/// Row i = embed(params, corpus[i].question), rounded to float.
template <typename Scalar>
EmbeddingMatrix embed_corpus(const EncoderParams<Scalar>& params, const QACorpus& corpus) {
  if (corpus.empty()) throw ValidationError("embed_corpus: empty corpus");
  EmbeddingMatrix m;
  m.rows.resize(static_cast<Eigen::Index>(corpus.size()), params.embed_dim());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    m.rows.row(static_cast<Eigen::Index>(i)) = embed(params, corpus[i].question).template cast<float>().transpose();
  }
  return m;
}

namespace detail {

template <typename Derived>
double row_dot(const EmbeddingMatrix& m, Eigen::Index row, const Eigen::MatrixBase<Derived>& query) {
  const float* r = m.rows.data() + row * m.dim();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < m.dim(); ++j) {
    acc += static_cast<double>(r[j]) * static_cast<double>(query.coeff(j));
  }
  return acc;
}

inline Ranking top_k(Ranking scored, std::size_t k) {
  const auto n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                    ranks_before);
  scored.resize(n);
  return scored;
}

template <typename Derived>
void check_query(const EmbeddingMatrix& m, const Eigen::MatrixBase<Derived>& query, std::size_t k) {
  if (k == 0) throw ValidationError("k must be >= 1");
  if (query.size() != m.dim()) {
    throw ValidationError("query dimension " + std::to_string(query.size()) +
                          " does not match index dimension " + std::to_string(m.dim()));
  }
}

}  // namespace detail

/// Exact MIPS over a candidate subset. Scores accumulate in double in a fixed
/// left-to-right order, so identical rows always tie exactly and ties resolve
/// by ascending id.
template <typename Derived>
Ranking mips_restricted(const EmbeddingMatrix& matrix, const Eigen::MatrixBase<Derived>& query,
                        std::span<const QaId> candidate_ids, std::size_t k) {
  detail::check_query(matrix, query, k);
  if (candidate_ids.empty()) throw ValidationError("mips_restricted: empty candidate set");
  Ranking scored;
  scored.reserve(candidate_ids.size());
  for (const auto id : candidate_ids) {
    if (static_cast<Eigen::Index>(id) >= matrix.size()) {
      throw ValidationError("mips_restricted: invalid candidate id " + std::to_string(id));
    }
    scored.push_back({id, detail::row_dot(matrix, id, query)});
  }
  return detail::top_k(std::move(scored), k);
}

template <typename Derived>
Ranking mips_full(const EmbeddingMatrix& matrix, const Eigen::MatrixBase<Derived>& query, std::size_t k) {
  detail::check_query(matrix, query, k);
  Ranking scored;
  scored.reserve(static_cast<std::size_t>(matrix.size()));
  for (Eigen::Index i = 0; i < matrix.size(); ++i) {
    scored.push_back({static_cast<QaId>(i), detail::row_dot(matrix, i, query)});
  }
  return detail::top_k(std::move(scored), k);
}

}  // namespace squid
