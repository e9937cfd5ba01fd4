#pragma once

#include <cstddef>
#include <string_view>

#include "squid/common.hpp"

namespace squid {

/// A first-step retriever: text query in, top-k ranked qa ids out.
/// Implementations are immutable after construction and safe to share
/// between threads.
class FirstStageRetriever {
 public:
  virtual ~FirstStageRetriever() = default;

  /// Ranked (score desc, id asc), at most k entries. Throws ValidationError
  /// when k is 0.
  virtual Ranking search(std::string_view query, std::size_t k) const = 0;

  /// Number of indexed QA pairs.
  virtual std::size_t size() const = 0;
};

}  // namespace squid
