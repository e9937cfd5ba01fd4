#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "squid/corpus.hpp"

namespace squid {

/// Planted-paraphrase QA world.
///
/// Every (subject, relation) fact gets a unique two-token answer entity and is
/// indexed under each of the relation's indexed templates. Train/val/test
/// questions ask about disjoint facts using the relation's held-out templates,
/// whose wording differs from the indexed phrasings, so lexical retrieval
/// lands on the right subject but often the wrong relation.
struct SyntheticConfig {
  std::size_t subjects = 125;
  std::size_t relations = 8;  // at most relation_count()
  std::size_t train = 500;
  std::size_t val = 200;
  std::size_t test = 200;
  std::uint64_t seed = 7;
};

struct SyntheticWorld {
  QACorpus corpus;
  EvalSet train;
  EvalSet val;
  EvalSet test;
  std::size_t answer_entities = 0;
  std::size_t indexed_templates_per_fact = 0;
};

std::size_t relation_count();

/// Throws ValidationError when there are fewer facts than requested questions.
SyntheticWorld make_synthetic_world(const SyntheticConfig& config);

}  // namespace squid
