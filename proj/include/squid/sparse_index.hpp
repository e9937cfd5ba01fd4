#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "squid/common.hpp"
#include "squid/corpus.hpp"
#include "squid/retriever.hpp"

namespace squid {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct Posting {
  QaId id;
  std::uint32_t tf;

  friend bool operator==(const Posting&, const Posting&) = default;
};

/// Okapi BM25 inverted index over normalized questions.
///
/// Scoring per query term t (unique terms, first-occurrence order):
///   idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg_len))
/// with idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)). Only documents with a
/// positive total are returned, ordered by score desc then id asc.
class SparseIndex final : public FirstStageRetriever {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  SparseIndex() = default;

  Ranking search(std::string_view query, std::size_t k) const override;
  std::size_t size() const override { return doc_lengths_.size(); }

  const Bm25Params& params() const { return params_; }
  std::size_t doc_count() const { return doc_lengths_.size(); }
  double avg_doc_length() const { return avg_doc_length_; }
  const std::vector<std::uint32_t>& doc_lengths() const { return doc_lengths_; }
  const std::vector<std::string>& vocabulary() const { return terms_; }

  /// Posting list of a term, or nullptr when the term is not indexed.
  const std::vector<Posting>* postings(std::string_view term) const;
  std::size_t document_frequency(std::string_view term) const;
  double idf(std::size_t df) const;

  void write(std::ostream& out) const;
  static SparseIndex read(std::istream& in);

  friend SparseIndex build_sparse_index(const QACorpus& corpus, Bm25Params params);

 private:
  void finalize();

  Bm25Params params_;
  std::vector<std::string> terms_;  // sorted
  std::vector<std::vector<Posting>> postings_;
  std::unordered_map<std::string, std::size_t> term_slot_;
  std::vector<std::uint32_t> doc_lengths_;
  double avg_doc_length_ = 0.0;
};

/// Throws ValidationError on an empty corpus, k1 <= 0, or b outside [0, 1].
SparseIndex build_sparse_index(const QACorpus& corpus, Bm25Params params = {});

inline Ranking sparse_search(const SparseIndex& index, std::string_view query, std::size_t k) {
  return index.search(query, k);
}

void save_sparse_index(const std::filesystem::path& path, const SparseIndex& index);
SparseIndex load_sparse_index(const std::filesystem::path& path);

}  // namespace squid
