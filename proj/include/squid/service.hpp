#pragma once

#include <cstddef>
#include <string>

#include "squid/cascade.hpp"
#include "squid/corpus.hpp"
#include "squid/dense_index.hpp"
#include "squid/encoder.hpp"
#include "squid/sparse_index.hpp"

namespace httplib {
class Server;
}

namespace squid {

/// Everything a query needs, loaded once and read-only afterwards.
struct ServiceState {
  QACorpus corpus;
  SparseIndex sparse;
  EncoderParams<double> params;
  EmbeddingMatrix vectors;
  std::size_t default_k = 50;
};

/// {"answer", "chosen_id" (-1 for no answer), "candidates": [...]}.
/// Candidate objects carry id, question, answer, both scores and both ranks.
std::string cascade_result_json(const CascadeResult& result, const QACorpus& corpus);

/// POST /retrieve and GET /healthz.
void install_routes(httplib::Server& server, const ServiceState& state);

}  // namespace squid
