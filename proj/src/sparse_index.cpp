#include "squid/sparse_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "binary_io.hpp"
#include "squid/textnorm.hpp"

namespace squid {
namespace {

constexpr std::string_view kMagic = "SQIX";

std::vector<std::string> unique_in_order(const TokenSequence& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  }
  return out;
}

void write_section(detail::LeWriter& w, const std::string& payload) {
  w.u64(payload.size());
  w.bytes(payload);
}

std::istringstream read_section(detail::LeReader& r) {
  const auto n = r.u64();
  return std::istringstream(r.bytes(static_cast<std::size_t>(n)));
}

}  // namespace

SparseIndex build_sparse_index(const QACorpus& corpus, Bm25Params params) {
  if (corpus.empty()) throw ValidationError("cannot build a sparse index over an empty corpus");
  if (!(params.k1 > 0.0)) throw ValidationError("BM25 k1 must be > 0");
  if (!(params.b >= 0.0 && params.b <= 1.0)) throw ValidationError("BM25 b must lie in [0, 1]");

  std::map<std::string, std::vector<Posting>> by_term;
  SparseIndex index;
  index.params_ = params;
  index.doc_lengths_.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto tokens = normalize(corpus[i].question);
    std::map<std::string, std::uint32_t> tf;
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [term, count] : tf) by_term[term].push_back({static_cast<QaId>(i), count});
    index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
  }
  for (auto& [term, list] : by_term) {
    index.terms_.push_back(term);
    index.postings_.push_back(std::move(list));
  }
  index.finalize();
  return index;
}

void SparseIndex::finalize() {
  term_slot_.clear();
  term_slot_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) term_slot_.emplace(terms_[i], i);
  double total = 0.0;
  for (const auto len : doc_lengths_) total += len;
  avg_doc_length_ = doc_lengths_.empty() ? 0.0 : total / static_cast<double>(doc_lengths_.size());
}

const std::vector<Posting>* SparseIndex::postings(std::string_view term) const {
  auto it = term_slot_.find(std::string(term));
  return it == term_slot_.end() ? nullptr : &postings_[it->second];
}

std::size_t SparseIndex::document_frequency(std::string_view term) const {
  const auto* list = postings(term);
  return list ? list->size() : 0;
}

double SparseIndex::idf(std::size_t df) const {
  const double n = static_cast<double>(doc_count());
  const double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

Ranking SparseIndex::search(std::string_view query, std::size_t k) const {
  if (k == 0) throw ValidationError("k must be >= 1");

  std::vector<double> acc(doc_count(), 0.0);
  std::vector<QaId> touched;
  const double k1 = params_.k1;
  const double b = params_.b;
  for (const auto& term : unique_in_order(normalize(query))) {
    const auto* list = postings(term);
    if (list == nullptr) continue;
    const double w = idf(list->size());
    for (const auto& p : *list) {
      const double tf = p.tf;
      const double norm = k1 * (1.0 - b + b * doc_lengths_[p.id] / avg_doc_length_);
      if (acc[p.id] == 0.0) touched.push_back(p.id);
      acc[p.id] += w * (tf * (k1 + 1.0)) / (tf + norm);
    }
  }

  Ranking hits;
  hits.reserve(touched.size());
  for (const auto id : touched) {
    if (acc[id] > 0.0) hits.push_back({id, acc[id]});
  }
  const auto n = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(),
                    ranks_before);
  hits.resize(n);
  return hits;
}

void SparseIndex::write(std::ostream& out) const {
  detail::LeWriter w(out);
  w.bytes(kMagic);
  w.u32(kFormatVersion);
  w.f64(params_.k1);
  w.f64(params_.b);

  {
    std::ostringstream s;
    detail::LeWriter sw(s);
    sw.u64(terms_.size());
    for (const auto& t : terms_) sw.str(t);
    write_section(w, s.str());
  }
  {
    std::ostringstream s;
    detail::LeWriter sw(s);
    for (const auto& list : postings_) {
      sw.u64(list.size());
      QaId prev = 0;
      for (const auto& p : list) {
        sw.u32(p.id - prev);
        sw.u32(p.tf);
        prev = p.id;
      }
    }
    write_section(w, s.str());
  }
  {
    std::ostringstream s;
    detail::LeWriter sw(s);
    sw.u64(doc_lengths_.size());
    for (const auto len : doc_lengths_) sw.u32(len);
    write_section(w, s.str());
  }
}

SparseIndex SparseIndex::read(std::istream& in) {
  detail::LeReader r(in, "SQIX");
  r.expect_magic(kMagic);
  const auto version = r.u32();
  if (version != kFormatVersion) {
    throw ValidationError("SQIX: unsupported format version " + std::to_string(version));
  }
  SparseIndex index;
  index.params_.k1 = r.f64();
  index.params_.b = r.f64();

  {
    auto s = read_section(r);
    detail::LeReader sr(s, "SQIX vocabulary");
    const auto n = sr.u64();
    for (std::uint64_t i = 0; i < n; ++i) index.terms_.push_back(sr.str());
    if (!std::is_sorted(index.terms_.begin(), index.terms_.end()) ||
        std::adjacent_find(index.terms_.begin(), index.terms_.end()) != index.terms_.end()) {
      throw ValidationError("SQIX: vocabulary is not strictly sorted");
    }
  }
  std::vector<std::vector<Posting>> postings(index.terms_.size());
  {
    auto s = read_section(r);
    detail::LeReader sr(s, "SQIX postings");
    for (auto& list : postings) {
      const auto n = sr.u64();
      std::uint64_t id = 0;
      for (std::uint64_t j = 0; j < n; ++j) {
        const auto gap = sr.u32();
        if (j > 0 && gap == 0) throw ValidationError("SQIX: duplicate id in posting list");
        id += gap;
        const auto tf = sr.u32();
        if (tf == 0) throw ValidationError("SQIX: zero term frequency");
        list.push_back({static_cast<QaId>(id), tf});
      }
    }
  }
  {
    auto s = read_section(r);
    detail::LeReader sr(s, "SQIX doc lengths");
    const auto n = sr.u64();
    for (std::uint64_t i = 0; i < n; ++i) index.doc_lengths_.push_back(sr.u32());
  }
  for (const auto& list : postings) {
    if (!list.empty() && list.back().id >= index.doc_lengths_.size()) {
      throw ValidationError("SQIX: posting id out of range");
    }
  }
  index.postings_ = std::move(postings);
  index.finalize();
  return index;
}

void save_sparse_index(const std::filesystem::path& path, const SparseIndex& index) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  index.write(out);
  if (!out) throw IoError("write failed: " + path.string());
}

SparseIndex load_sparse_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return SparseIndex::read(in);
}

}  // namespace squid
