#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace squid {

/// Dense 0-based row address of a QA pair in the indexed corpus.
using QaId = std::uint32_t;

/// Sentinel id carried by a cascade result when stage 1 returned nothing.
inline constexpr QaId kNoAnswerId = std::numeric_limits<QaId>::max();

/// Input failed validation (bad record, bad argument, bad file contents).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read, or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScoredId {
  QaId id;
  double score;

  friend bool operator==(const ScoredId&, const ScoredId&) = default;
};

using Ranking = std::vector<ScoredId>;

/// Strict ordering used by every ranked list: score descending, then id ascending.
inline bool ranks_before(const ScoredId& a, const ScoredId& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

}  // namespace squid
