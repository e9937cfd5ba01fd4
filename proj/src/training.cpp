#include "squid/training.hpp"

#include <fstream>
#include <numeric>
#include <random>

#include "binary_io.hpp"
#include "json.hpp"
#include "squid/cascade.hpp"
#include "squid/dense_index.hpp"
#include "squid/eval.hpp"

namespace squid {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be > 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (patience < 1) throw ValidationError("patience must be >= 1");
  if (m < 1) throw ValidationError("m must be >= 1");
}

std::string TrainReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : epochs) rows.push_back({{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"val_em", e.val_em}});
  nlohmann::json obj = {{"initial_val_em", initial_val_em},
                        {"epochs", rows},
                        {"best_epoch", best_epoch},
                        {"stopped_early", stopped_early}};
  return obj.dump(2);
}

TrainResult train(TrainParams params0, const std::vector<TrainingExample>& examples, const QACorpus& corpus,
                  const TrainConfig& config, const Validator& validate_em) {
  config.validate();
  if (!params0.valid()) throw ValidationError("initial encoder parameters are invalid");
  TrainResult result{std::move(params0), {}};
  if (config.max_epochs == 0) return result;
  if (examples.empty()) throw ValidationError("train: no training examples");

  auto& params = result.params;
  auto& report = result.report;
  const auto hash_dim = params.hash_dim();
  const auto embed_dim = params.embed_dim();

  const auto corpus_features = featurize_corpus<double>(corpus, hash_dim, params.seed);
  std::vector<ResolvedExample<double>> resolved;
  resolved.reserve(examples.size());
  for (const auto& e : examples) resolved.push_back(resolve<double>(e, corpus_features, hash_dim, params.seed, config.m));

  TrainParams best = params;
  report.initial_val_em = validate_em(params);
  double best_em = report.initial_val_em;
  std::size_t since_best = 0;

  TrainParams::Matrix grad = TrainParams::Matrix::Zero(embed_dim, hash_dim);
  std::vector<char> touched(static_cast<std::size_t>(hash_dim), 0);
  std::vector<Eigen::Index> touched_cols;
  std::vector<std::size_t> order(resolved.size());

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(config.seed * 0x9E3779B97F4A7C15ULL + epoch);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      for (std::size_t i = start; i < end; ++i) {
        const auto lg = sparse_loss_and_grad(params, resolved[order[i]]);
        loss_sum += lg.loss;
        for (std::size_t c = 0; c < lg.gradient.columns.size(); ++c) {
          const auto col = lg.gradient.columns[c];
          if (!touched[static_cast<std::size_t>(col)]) {
            touched[static_cast<std::size_t>(col)] = 1;
            touched_cols.push_back(col);
          }
          grad.col(col) += lg.gradient.block.col(static_cast<Eigen::Index>(c));
        }
      }
      const double step = config.learning_rate / static_cast<double>(end - start);
      for (const auto col : touched_cols) {
        params.weights.col(col) -= step * grad.col(col);
        grad.col(col).setZero();
        touched[static_cast<std::size_t>(col)] = 0;
      }
      touched_cols.clear();
    }

    const double em = validate_em(params);
    report.epochs.push_back({epoch, loss_sum / static_cast<double>(resolved.size()), em});
    if (em > best_em) {
      best_em = em;
      best = params;
      report.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      report.stopped_early = epoch < config.max_epochs;
      break;
    }
  }
  params = std::move(best);
  return result;
}

TrainResult train(TrainParams params0, const std::vector<TrainingExample>& examples, const QACorpus& corpus,
                  const EvalSet& val_set, const FirstStageRetriever& first_stage, const TrainConfig& config,
                  std::size_t cascade_k) {
  auto validator = [&](const TrainParams& params) {
    const auto vectors = embed_corpus(params, corpus);
    const Cascade<double> cascade(corpus, first_stage, params, vectors, {cascade_k, false});
    return eval_em(cascade_answerer(cascade), val_set).em;
  };
  return train(std::move(params0), examples, corpus, config, validator);
}

namespace {
constexpr std::string_view kMagic = "SQCK";
}

void write_checkpoint(std::ostream& out, const TrainConfig& config, const TrainParams& params) {
  detail::LeWriter w(out);
  w.bytes(kMagic);
  w.u32(Checkpoint::kFormatVersion);
  w.f64(config.learning_rate);
  w.u64(config.batch_size);
  w.u64(config.max_epochs);
  w.u64(config.patience);
  w.u64(config.m);
  w.u64(config.seed);
  w.u64(params.seed);
  EmbeddingMatrix block;
  block.rows = params.weights.cast<float>();
  block.write(out);
}

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& config, const TrainParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_checkpoint(out, config, params);
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint read_checkpoint(std::istream& in) {
  detail::LeReader r(in, "SQCK");
  r.expect_magic(kMagic);
  const auto version = r.u32();
  if (version != Checkpoint::kFormatVersion) {
    throw ValidationError("SQCK: unsupported format version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.config.learning_rate = r.f64();
  ck.config.batch_size = r.u64();
  ck.config.max_epochs = r.u64();
  ck.config.patience = r.u64();
  ck.config.m = r.u64();
  ck.config.seed = r.u64();
  ck.params.seed = r.u64();
  const auto block = EmbeddingMatrix::read(in);
  ck.params.weights = block.rows;
  if (!ck.params.valid()) throw ValidationError("SQCK: encoder shape requires hash_dim >= embed_dim >= 1");
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace squid
