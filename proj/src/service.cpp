#include "squid/service.hpp"

#include "httplib.h"
#include "json.hpp"

namespace squid {
namespace {

using nlohmann::json;

void reply_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n\f\v") == std::string::npos; }

}  // namespace

std::string cascade_result_json(const CascadeResult& result, const QACorpus& corpus) {
  json candidates = json::array();
  for (const auto& c : result.candidates) {
    candidates.push_back({{"id", c.id},
                          {"question", corpus[c.id].question},
                          {"answer", corpus[c.id].answer},
                          {"stage1_score", c.stage1_score},
                          {"stage2_score", c.stage2_score},
                          {"stage1_rank", c.stage1_rank},
                          {"stage2_rank", c.stage2_rank}});
  }
  const json obj = {{"answer", result.answer},
                    {"chosen_id", result.has_answer() ? static_cast<std::int64_t>(result.chosen) : -1},
                    {"candidates", candidates}};
  return obj.dump();
}

void install_routes(httplib::Server& server, const ServiceState& state) {
  server.Get("/healthz", [&state](const httplib::Request&, httplib::Response& res) {
    const json body = {{"status", "ok"},
                       {"corpus_size", state.corpus.size()},
                       {"sparse_docs", state.sparse.doc_count()},
                       {"vectors", state.vectors.size()},
                       {"dim", state.vectors.dim()},
                       {"default_k", state.default_k}};
    res.set_content(body.dump(), "application/json");
  });

  server.Post("/retrieve", [&state](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error&) {
      return reply_error(res, 400, "malformed JSON body");
    }
    if (!body.is_object() || !body.contains("question") || !body["question"].is_string()) {
      return reply_error(res, 400, "field question (string) is required");
    }
    const auto question = body["question"].get<std::string>();
    if (blank(question)) return reply_error(res, 400, "question must be non-empty");

    std::size_t k = state.default_k;
    if (body.contains("k")) {
      const auto& kv = body["k"];
      if (!kv.is_number_integer() || kv.get<std::int64_t>() < 1) {
        return reply_error(res, 400, "k must be an integer >= 1");
      }
      k = static_cast<std::size_t>(kv.get<std::int64_t>());
    }

    try {
      const Cascade<double> cascade(state.corpus, state.sparse, state.params, state.vectors, {k, false});
      res.set_content(cascade_result_json(cascade.retrieve(question), state.corpus), "application/json");
    } catch (const ValidationError& e) {
      reply_error(res, 400, e.what());
    }
  });
}

}  // namespace squid
