// squid: command-line driver for the two-step question retrieval pipeline.
//
// JSON goes to stdout, human summaries to stderr. Exit status is 0 on
// success, 1 on usage or validation errors and 2 on I/O errors.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "squid/cascade.hpp"
#include "squid/corpus.hpp"
#include "squid/dense_index.hpp"
#include "squid/eval.hpp"
#include "squid/manifest.hpp"
#include "squid/service.hpp"
#include "squid/sparse_index.hpp"
#include "squid/supervision.hpp"
#include "squid/synthetic.hpp"
#include "squid/training.hpp"

// After Eigen: <resolv.h> defines a _res macro that breaks Eigen headers.
#include "httplib.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace squid;

namespace {

// Role names used in the run manifest.
constexpr const char* kCorpus = "corpus";
constexpr const char* kSparse = "sparse-index";
constexpr const char* kVectors = "vectors";
constexpr const char* kCheckpoint = "checkpoint";
constexpr const char* kExamples = "examples";

/// Resolves artifact paths from flags first, then from the manifest, and
/// records new artifacts back into it.
struct Artifacts {
  std::string manifest_path;
  std::string corpus, sparse, vectors, checkpoint;

  fs::path manifest_file(const fs::path& output) const {
    if (!manifest_path.empty()) return manifest_path;
    return output.parent_path() / "manifest.json";
  }

  RunManifest manifest() const {
    return manifest_path.empty() ? RunManifest{} : RunManifest::load(manifest_path);
  }

  fs::path need(const std::string& flag_value, const char* role, const char* flag) const {
    if (!flag_value.empty()) return flag_value;
    if (auto p = manifest().path_of(role)) return *p;
    throw ValidationError(std::string("missing ") + flag + " (and no '" + role + "' entry in a manifest)");
  }

  void record(const fs::path& output, const char* role, const json& config = {}) const {
    const auto path = manifest_file(output);
    auto m = RunManifest::load(path);
    m.record(role, output);
    for (const auto& [key, value] : config.items()) m.config()[key] = value;
    m.save(path);
  }

  /// Refuses to proceed when the manifest names artifacts whose bytes changed.
  void verify() const {
    if (!manifest_path.empty()) RunManifest::load(manifest_path).verify_all();
  }
};

void add_artifact_flags(CLI::App* cmd, Artifacts& a, bool vectors, bool checkpoint) {
  cmd->add_option("--corpus", a.corpus, "QA corpus (JSONL)");
  cmd->add_option("--index", a.sparse, "sparse index (SQIX)");
  if (vectors) cmd->add_option("--vectors", a.vectors, "question vectors (SQEM); recomputed when omitted");
  if (checkpoint) cmd->add_option("--checkpoint", a.checkpoint, "encoder checkpoint (SQCK)");
}

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      const long v = std::stol(item);
      if (v < 1) throw ValidationError("k values must be >= 1");
      ks.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw ValidationError("bad k list: " + text);
    }
  }
  if (ks.empty()) throw ValidationError("empty k list");
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

// Encoder shape and init; used whenever no checkpoint is given.
struct EncoderFlags {
  std::int64_t hash_dim = kDefaultHashDim;
  std::int64_t dim = kDefaultEmbedDim;
  std::uint64_t hash_seed = 0;
  std::uint64_t init_seed = 1;

  void add(CLI::App* cmd) {
    cmd->add_option("--hash-dim", hash_dim, "feature hash buckets")->capture_default_str();
    cmd->add_option("--dim", dim, "embedding dimension")->capture_default_str();
    cmd->add_option("--hash-seed", hash_seed, "feature hash seed")->capture_default_str();
    cmd->add_option("--init-seed", init_seed, "weight initialization seed")->capture_default_str();
  }

  EncoderParams<double> init() const { return EncoderParams<double>::random(hash_dim, dim, hash_seed, init_seed); }
};

struct Loaded {
  QACorpus corpus;
  SparseIndex sparse;
  EncoderParams<double> params;
  EmbeddingMatrix vectors;
};

Loaded load_pipeline(const Artifacts& a, const EncoderFlags& enc) {
  a.verify();
  Loaded l;
  l.corpus = load_qa_corpus(a.need(a.corpus, kCorpus, "--corpus"));
  l.sparse = load_sparse_index(a.need(a.sparse, kSparse, "--index"));
  fs::path checkpoint = a.checkpoint;
  if (checkpoint.empty()) {
    if (auto p = a.manifest().path_of(kCheckpoint)) checkpoint = *p;
  }
  // Without a checkpoint the untrained encoder is used.
  l.params = checkpoint.empty() ? enc.init() : load_checkpoint(checkpoint).params.cast<double>();
  fs::path vectors = a.vectors;
  if (vectors.empty()) {
    if (auto p = a.manifest().path_of(kVectors)) vectors = *p;
  }
  l.vectors = vectors.empty() ? embed_corpus(l.params, l.corpus) : load_embeddings(vectors);
  return l;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"squid: two-step question retrieval"};
  app.set_config("--config", "", "TOML file with option values");
  app.require_subcommand(1);
  Artifacts art;
  app.add_option("--manifest", art.manifest_path, "run manifest (JSON) to read roles from and record into");

  // synth
  SyntheticConfig synth;
  std::string synth_dir;
  auto* synth_cmd = app.add_subcommand("synth", "generate a planted-paraphrase QA world");
  synth_cmd->add_option("--out-dir", synth_dir, "output directory")->required();
  synth_cmd->add_option("--subjects", synth.subjects)->capture_default_str();
  synth_cmd->add_option("--relations", synth.relations)->capture_default_str();
  synth_cmd->add_option("--train", synth.train)->capture_default_str();
  synth_cmd->add_option("--val", synth.val)->capture_default_str();
  synth_cmd->add_option("--test", synth.test)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();

  // ingest
  std::string ingest_in, ingest_out;
  auto* ingest_cmd = app.add_subcommand("ingest", "validate a QA corpus and write it normalized to JSONL");
  ingest_cmd->add_option("--corpus", ingest_in, "input JSONL")->required();
  ingest_cmd->add_option("--out", ingest_out, "validated corpus output");

  // build-sparse
  Bm25Params bm25;
  std::string sparse_out;
  auto* sparse_cmd = app.add_subcommand("build-sparse", "build the BM25 index over questions");
  sparse_cmd->add_option("--corpus", art.corpus);
  sparse_cmd->add_option("--out", sparse_out)->required();
  sparse_cmd->add_option("--k1", bm25.k1)->capture_default_str();
  sparse_cmd->add_option("--b", bm25.b)->capture_default_str();

  // embed
  EncoderFlags enc;
  std::string embed_out;
  auto* embed_cmd = app.add_subcommand("embed", "precompute question vectors for the corpus");
  embed_cmd->add_option("--corpus", art.corpus);
  embed_cmd->add_option("--checkpoint", art.checkpoint, "trained encoder; random init when omitted");
  embed_cmd->add_option("--out", embed_out)->required();
  enc.add(embed_cmd);

  // build-examples
  SupervisionConfig sup;
  std::string sup_train, sup_out, sup_strategy = "similar", sup_order = "rank";
  auto* ex_cmd = app.add_subcommand("build-examples", "distant supervision from first-stage results");
  add_artifact_flags(ex_cmd, art, false, false);
  ex_cmd->add_option("--train", sup_train, "training questions (JSONL with answers)")->required();
  ex_cmd->add_option("--out", sup_out)->required();
  ex_cmd->add_option("--strategy", sup_strategy, "self | similar | similar-self | same-answer")->capture_default_str();
  ex_cmd->add_option("--k", sup.k)->capture_default_str();
  ex_cmd->add_option("--m", sup.m)->capture_default_str();
  ex_cmd->add_option("--min-f1", sup.min_f1)->capture_default_str();
  ex_cmd->add_option("--seed", sup.seed)->capture_default_str();
  ex_cmd->add_option("--negatives", sup_order, "rank | uniform")->capture_default_str();

  // train
  TrainConfig tc;
  std::string train_examples, train_val, train_out, train_report, train_vectors;
  std::size_t train_k = 50;
  auto* train_cmd = app.add_subcommand("train", "fit the question encoder");
  add_artifact_flags(train_cmd, art, false, false);
  train_cmd->add_option("--examples", train_examples, "training examples (JSONL)");
  train_cmd->add_option("--val", train_val, "validation questions for early stopping")->required();
  train_cmd->add_option("--out", train_out, "checkpoint output")->required();
  train_cmd->add_option("--report", train_report, "write the training report here as well");
  train_cmd->add_option("--vectors-out", train_vectors, "also write question vectors for the best encoder");
  train_cmd->add_option("--lr", tc.learning_rate)->capture_default_str();
  train_cmd->add_option("--batch", tc.batch_size)->capture_default_str();
  train_cmd->add_option("--epochs", tc.max_epochs)->capture_default_str();
  train_cmd->add_option("--patience", tc.patience)->capture_default_str();
  train_cmd->add_option("--m", tc.m)->capture_default_str();
  train_cmd->add_option("--seed", tc.seed)->capture_default_str();
  train_cmd->add_option("--k", train_k, "cascade fanout used for validation")->capture_default_str();
  enc.add(train_cmd);

  // eval
  std::string eval_dataset;
  std::size_t eval_k = 50;
  bool eval_stage1 = false, eval_per_question = false;
  auto* eval_cmd = app.add_subcommand("eval", "exact match of the cascade on a labelled set");
  add_artifact_flags(eval_cmd, art, true, true);
  enc.add(eval_cmd);
  eval_cmd->add_option("--dataset", eval_dataset)->required();
  eval_cmd->add_option("--k", eval_k)->capture_default_str();
  eval_cmd->add_flag("--stage1-only", eval_stage1, "answer with the first-stage top hit");
  eval_cmd->add_flag("--per-question", eval_per_question);

  // recall
  std::string recall_dataset, recall_ks = "1,5,10,20,50";
  auto* recall_cmd = app.add_subcommand("recall", "first-stage answer recall at k");
  add_artifact_flags(recall_cmd, art, false, false);
  recall_cmd->add_option("--dataset", recall_dataset)->required();
  recall_cmd->add_option("--ks", recall_ks)->capture_default_str();

  // bench
  std::string bench_queries, bench_mode = "sequential", bench_ks, bench_csv;
  std::size_t bench_k = 50, bench_warmup = 50;
  auto* bench_cmd = app.add_subcommand("bench", "throughput and latency of the cascade");
  add_artifact_flags(bench_cmd, art, true, true);
  enc.add(bench_cmd);
  bench_cmd->add_option("--queries", bench_queries, "labelled questions (JSONL)")->required();
  bench_cmd->add_option("--k", bench_k)->capture_default_str();
  bench_cmd->add_option("--warmup", bench_warmup)->capture_default_str();
  bench_cmd->add_option("--mode", bench_mode, "sequential | concurrent")->capture_default_str();
  bench_cmd->add_option("--ks", bench_ks, "sweep these fanouts and report EM against Q/sec");
  bench_cmd->add_option("--csv", bench_csv, "write the sweep as CSV");

  // retrieve
  std::string question;
  std::size_t retrieve_k = 50;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "answer one question");
  add_artifact_flags(retrieve_cmd, art, true, true);
  enc.add(retrieve_cmd);
  retrieve_cmd->add_option("--q", question)->required();
  retrieve_cmd->add_option("--k", retrieve_k)->capture_default_str();

  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t serve_k = 50;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP endpoint: POST /retrieve, GET /healthz");
  add_artifact_flags(serve_cmd, art, true, true);
  enc.add(serve_cmd);
  serve_cmd->add_option("--host", host)->envname("SQUID_HOST")->capture_default_str();
  serve_cmd->add_option("--port", port)->envname("SQUID_PORT")->capture_default_str();
  serve_cmd->add_option("--k", serve_k, "default fanout")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) {
      const auto world = make_synthetic_world(synth);
      const fs::path dir = synth_dir;
      fs::create_directories(dir);
      save_qa_corpus(dir / "corpus.jsonl", world.corpus);
      save_eval_set(dir / "train.jsonl", world.train);
      save_eval_set(dir / "val.jsonl", world.val);
      save_eval_set(dir / "test.jsonl", world.test);
      art.record(dir / "corpus.jsonl", kCorpus);
      std::cout << json{{"pairs", world.corpus.size()},
                        {"answers", world.answer_entities},
                        {"templates_per_fact", world.indexed_templates_per_fact},
                        {"train", world.train.size()},
                        {"val", world.val.size()},
                        {"test", world.test.size()}}
                       .dump()
                << '\n';
      std::cerr << "wrote synthetic world to " << dir.string() << '\n';

    } else if (ingest_cmd->parsed()) {
      const auto corpus = load_qa_corpus(ingest_in);
      if (corpus.empty()) throw ValidationError("corpus " + ingest_in + " has no QA pairs");
      if (!ingest_out.empty()) {
        save_qa_corpus(ingest_out, corpus);
        art.record(ingest_out, kCorpus);
      }
      std::cout << json{{"pairs", corpus.size()}}.dump() << '\n';
      std::cerr << "validated " << corpus.size() << " QA pairs\n";

    } else if (sparse_cmd->parsed()) {
      const auto corpus = load_qa_corpus(art.need(art.corpus, kCorpus, "--corpus"));
      const auto index = build_sparse_index(corpus, bm25);
      save_sparse_index(sparse_out, index);
      art.record(sparse_out, kSparse, {{"k1", bm25.k1}, {"b", bm25.b}});
      std::cout << json{{"docs", index.doc_count()}, {"terms", index.vocabulary().size()},
                        {"avg_doc_length", index.avg_doc_length()}}
                       .dump()
                << '\n';

    } else if (embed_cmd->parsed()) {
      const auto corpus = load_qa_corpus(art.need(art.corpus, kCorpus, "--corpus"));
      const auto params = art.checkpoint.empty() ? enc.init() : load_checkpoint(art.checkpoint).params.cast<double>();
      const auto vectors = embed_corpus(params, corpus);
      save_embeddings(embed_out, vectors);
      art.record(embed_out, kVectors);
      std::cout << json{{"rows", vectors.size()}, {"dim", vectors.dim()}}.dump() << '\n';

    } else if (ex_cmd->parsed()) {
      sup.strategy = parse_strategy(sup_strategy);
      if (sup_order == "rank") sup.negative_order = NegativeOrder::Rank;
      else if (sup_order == "uniform") sup.negative_order = NegativeOrder::Uniform;
      else throw ValidationError("unknown negative order: " + sup_order);
      const auto corpus = load_qa_corpus(art.need(art.corpus, kCorpus, "--corpus"));
      const auto sparse = load_sparse_index(art.need(art.sparse, kSparse, "--index"));
      const auto train_set = load_eval_set(sup_train);
      const auto set = build_examples(train_set, sparse, corpus, sup);
      save_examples(sup_out, set.examples);
      art.record(sup_out, kExamples,
                 {{"strategy", std::string(to_string(sup.strategy))}, {"k", sup.k}, {"m", sup.m},
                  {"min_f1", sup.min_f1}, {"supervision_seed", sup.seed}});
      std::cout << json{{"kept", set.summary.kept},
                        {"skipped_no_positive", set.summary.skipped_no_positive},
                        {"skipped_no_negative", set.summary.skipped_no_negative}}
                       .dump()
                << '\n';
      std::cerr << "kept " << set.summary.kept << " of " << train_set.size() << " training questions\n";

    } else if (train_cmd->parsed()) {
      const auto corpus = load_qa_corpus(art.need(art.corpus, kCorpus, "--corpus"));
      const auto sparse = load_sparse_index(art.need(art.sparse, kSparse, "--index"));
      const auto examples = load_examples(art.need(train_examples, kExamples, "--examples"));
      const auto val = load_eval_set(train_val);
      const auto result = train(enc.init(), examples, corpus, val, sparse, tc, train_k);
      save_checkpoint(train_out, tc, result.params);
      art.record(train_out, kCheckpoint,
                 {{"learning_rate", tc.learning_rate}, {"batch_size", tc.batch_size}, {"max_epochs", tc.max_epochs},
                  {"patience", tc.patience}, {"m", tc.m}, {"train_seed", tc.seed}, {"hash_dim", enc.hash_dim},
                  {"dim", enc.dim}, {"hash_seed", enc.hash_seed}, {"init_seed", enc.init_seed}});
      if (!train_vectors.empty()) {
        // Vectors come from the stored float32 weights so they match what a reload sees.
        const auto stored = load_checkpoint(train_out).params.cast<double>();
        save_embeddings(train_vectors, embed_corpus(stored, corpus));
        art.record(train_vectors, kVectors);
      }
      const auto report = result.report.to_json();
      if (!train_report.empty()) write_text(train_report, report + "\n");
      std::cout << report << '\n';
      std::cerr << "best epoch " << result.report.best_epoch << " of " << result.report.epochs.size() << '\n';

    } else if (eval_cmd->parsed()) {
      const auto l = load_pipeline(art, enc);
      const auto dataset = load_eval_set(eval_dataset);
      const Cascade<double> cascade(l.corpus, l.sparse, l.params, l.vectors, {eval_k, false});
      auto report = eval_em(eval_stage1 ? stage1_answerer(l.sparse, l.corpus) : cascade_answerer(cascade), dataset);
      const std::vector<std::size_t> ks{eval_k};
      report.recall_at_k = recall_at_k(l.sparse, l.corpus, dataset, ks);
      std::cout << report.to_json(eval_per_question) << '\n';
      std::cerr << "EM " << report.em << " on " << report.n << " questions\n";

    } else if (recall_cmd->parsed()) {
      const auto corpus = load_qa_corpus(art.need(art.corpus, kCorpus, "--corpus"));
      const auto sparse = load_sparse_index(art.need(art.sparse, kSparse, "--index"));
      const auto dataset = load_eval_set(recall_dataset);
      const auto ks = parse_ks(recall_ks);
      json out = json::object();
      for (const auto& [k, v] : recall_at_k(sparse, corpus, dataset, ks)) out[std::to_string(k)] = v;
      std::cout << json{{"n", dataset.size()}, {"recall_at_k", out}}.dump(2) << '\n';

    } else if (bench_cmd->parsed()) {
      const auto l = load_pipeline(art, enc);
      const auto dataset = load_eval_set(bench_queries);
      std::vector<std::string> queries;
      for (const auto& q : dataset) queries.push_back(q.question);
      const auto mode = parse_bench_mode(bench_mode);
      if (bench_ks.empty()) {
        const Cascade<double> cascade(l.corpus, l.sparse, l.params, l.vectors, {bench_k, false});
        const auto report = bench_throughput(cascade, queries, bench_warmup, mode);
        std::cout << report.to_json() << '\n';
        std::cerr << report.q_per_sec << " Q/sec over " << report.total_queries << " queries\n";
      } else {
        std::vector<TradeoffPoint> points;
        json rows = json::array();
        for (const auto k : parse_ks(bench_ks)) {
          const Cascade<double> cascade(l.corpus, l.sparse, l.params, l.vectors, {k, false});
          const auto em = eval_em(cascade_answerer(cascade), dataset).em;
          const auto report = bench_throughput(cascade, queries, bench_warmup, mode);
          points.push_back({k, em, report.q_per_sec});
          auto row = json::parse(report.to_json());
          row["k"] = k;
          row["em"] = em;
          rows.push_back(row);
        }
        if (!bench_csv.empty()) write_text(bench_csv, tradeoff_csv(points));
        std::cout << rows.dump(2) << '\n';
      }

    } else if (retrieve_cmd->parsed()) {
      const auto l = load_pipeline(art, enc);
      const Cascade<double> cascade(l.corpus, l.sparse, l.params, l.vectors, {retrieve_k, false});
      std::cout << cascade_result_json(cascade.retrieve(question), l.corpus) << '\n';

    } else if (serve_cmd->parsed()) {
      auto l = load_pipeline(art, enc);
      const ServiceState state{std::move(l.corpus), std::move(l.sparse), std::move(l.params), std::move(l.vectors),
                               serve_k};
      if (serve_k == 0) throw ValidationError("--k must be >= 1");
      httplib::Server server;
      install_routes(server, state);

      // SIGINT/SIGTERM are taken synchronously by a watcher thread that stops the server.
      sigset_t signals;
      sigemptyset(&signals);
      sigaddset(&signals, SIGINT);
      sigaddset(&signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &signals, nullptr);
      std::jthread watcher([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
      });

      if (!server.bind_to_port(host, port)) {
        pthread_kill(watcher.native_handle(), SIGTERM);
        throw IoError("cannot bind " + host + ":" + std::to_string(port));
      }
      std::cerr << "serving " << state.corpus.size() << " QA pairs on http://" << host << ':' << port << '\n';
      server.listen_after_bind();
      std::cerr << "shut down\n";
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
