#include "trl/harness/experiment.hpp"

#include <fstream>
#include <map>
#include <mutex>

#include <spdlog/spdlog.h>

#include "trl/error.hpp"
#include "trl/metrics/overlap.hpp"
#include "trl/simscore/kernel_cosine.hpp"
#include "trl/simscore/trainer.hpp"
#include "trl/transport/wmd.hpp"

namespace trl::harness {

namespace {

Experiment from_corpus(const core::Corpus& all, core::EmbeddingTable emb, core::Lexicon lexicon, const TrainConfig& cfg) {
  auto parts = core::split_corpus(all, {}, cfg.data_seed);
  Experiment ex;
  ex.train = std::move(parts[0]);
  ex.val = std::move(parts[1]);
  ex.test = std::move(parts[2]);
  ex.embeddings = std::move(emb);
  ex.lexicon = std::move(lexicon);
  ex.train_idf = metrics::IdfTable::build(ex.train);
  return ex;
}

core::GeneratorSpec generator_spec(const TrainConfig& cfg) {
  core::GeneratorSpec spec;
  spec.n_scenes = cfg.scenes;
  spec.noise_std = cfg.feature_noise;
  return spec;
}

}  // namespace

Experiment make_experiment(const TrainConfig& cfg) {
  cfg.validate();
  auto data = core::generate_synthetic_corpus(generator_spec(cfg), cfg.data_seed);
  auto emb = core::synthetic_embeddings(data.lexicon, data.corpus.vocabulary, cfg.word_dim, cfg.data_seed);
  return from_corpus(data.corpus, std::move(emb), std::move(data.lexicon), cfg);
}

void write_dataset(const core::SyntheticData& data, const core::EmbeddingTable& emb, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  core::save_corpus(data.corpus, dir / "corpus.jsonl");
  core::save_vocabulary(data.corpus.vocabulary, dir / "vocab.txt");
  core::save_embeddings(emb, data.corpus.vocabulary, dir / "embeddings.txt");
  core::save_lexicon(data.lexicon, dir / "lexicon.tsv");
}

void write_synthetic_dataset(const TrainConfig& cfg, const std::filesystem::path& dir) {
  cfg.validate();
  const auto data = core::generate_synthetic_corpus(generator_spec(cfg), cfg.data_seed);
  write_dataset(data, core::synthetic_embeddings(data.lexicon, data.corpus.vocabulary, cfg.word_dim, cfg.data_seed), dir);
}

Experiment load_experiment(const std::filesystem::path& dir, const TrainConfig& cfg) {
  cfg.validate();
  const auto vocab = core::load_vocabulary(dir / "vocab.txt");
  const auto corpus = core::load_corpus(dir / "corpus.jsonl", &vocab);
  auto emb = core::load_embeddings(dir / "embeddings.txt", vocab, true, cfg.data_seed);
  core::Lexicon lex;
  if (std::filesystem::exists(dir / "lexicon.tsv")) lex = core::load_lexicon(dir / "lexicon.tsv");
  return from_corpus(corpus, std::move(emb), std::move(lex), cfg);
}

std::shared_ptr<const simscore::RewardModel> train_reward_model(const Experiment& ex, const TrainConfig& cfg) {
  const auto pairs = simscore::make_similarity_pairs(ex.train, ex.lexicon, cfg.scorer_pairs, cfg.scorer_seed);
  simscore::ScorerTrainConfig sc;
  sc.model.encoder.kind = cfg.scorer_kind;
  sc.model.encoder.d_h = cfg.scorer_d_h;
  sc.model.aggregation = cfg.aggregation;
  sc.model.granularity = cfg.granularity;
  sc.epochs = cfg.scorer_epochs;
  sc.lr = cfg.scorer_lr;
  sc.seed = cfg.scorer_seed;
  auto res = simscore::train_scorer(pairs, ex.embeddings, sc);
  return std::make_shared<const simscore::RewardModel>(std::move(res.model));
}

void ensure_reward_model(Experiment& ex, const TrainConfig& cfg) {
  if (cfg.reward == RewardKind::trl && !ex.reward_model) ex.reward_model = train_reward_model(ex, cfg);
}

std::vector<double> TerminalReward::step_rewards(const core::Scene& scene, std::span<const core::TokenId> actions) const {
  std::vector<double> r(actions.size(), 0.0);
  if (actions.empty()) return r;
  const auto content = core::strip_markers(actions);
  if (!content.empty()) r.back() = core::quantize_reward(score(scene, content));
  return r;
}

namespace {

class BleuReward final : public TerminalReward {
 public:
  double score(const core::Scene& s, std::span<const core::TokenId> c) const override {
    return metrics::bleu(c, s.references, {4, true});
  }
};

class RougeReward final : public TerminalReward {
 public:
  double score(const core::Scene& s, std::span<const core::TokenId> c) const override { return metrics::rouge_l(c, s.references); }
};

class CiderReward final : public TerminalReward {
 public:
  explicit CiderReward(const metrics::IdfTable& idf) : idf_(idf) {}
  double score(const core::Scene& s, std::span<const core::TokenId> c) const override {
    return metrics::cider_sentence(c, s.references, idf_) / 10.0;
  }

 private:
  const metrics::IdfTable& idf_;
};

class WmdReward final : public TerminalReward {
 public:
  WmdReward(const core::EmbeddingTable& emb, transport::WmdRewardOptions opts) : emb_(emb), opts_(opts) {}
  double score(const core::Scene& s, std::span<const core::TokenId> c) const override {
    return transport::wmd_reward(c, s.references, emb_, opts_);
  }

 private:
  const core::EmbeddingTable& emb_;
  transport::WmdRewardOptions opts_;
};

class KernelCosReward final : public TerminalReward {
 public:
  KernelCosReward(const core::EmbeddingTable& emb, simscore::KernelCosineOptions opts) : emb_(emb), opts_(opts) {}
  double score(const core::Scene& s, std::span<const core::TokenId> c) const override {
    return simscore::kernel_cosine(c, s.references, emb_, opts_);
  }

 private:
  const core::EmbeddingTable& emb_;
  simscore::KernelCosineOptions opts_;
};

class TrlReward final : public RewardFunction {
 public:
  TrlReward(std::shared_ptr<const simscore::RewardModel> model, const core::EmbeddingTable& emb)
      : model_(std::move(model)), emb_(emb) {}

  std::vector<double> step_rewards(const core::Scene& scene, std::span<const core::TokenId> actions) const override {
    return simscore::trl_step_rewards(*model_, actions, references(scene), emb_);
  }

 private:
  const simscore::EncodedReferences& references(const core::Scene& scene) const {
    std::lock_guard lock(mu_);
    auto it = cache_.find(scene.id);
    if (it == cache_.end()) it = cache_.emplace(scene.id, simscore::encode_references(*model_, scene.references, emb_)).first;
    return it->second;
  }

  std::shared_ptr<const simscore::RewardModel> model_;
  const core::EmbeddingTable& emb_;
  mutable std::mutex mu_;
  mutable std::map<std::int64_t, simscore::EncodedReferences> cache_;
};

}  // namespace

std::unique_ptr<RewardFunction> make_reward(const Experiment& ex, const TrainConfig& cfg) {
  switch (cfg.reward) {
    case RewardKind::ml: throw Error("the ml objective has no reward function");
    case RewardKind::bleu: return std::make_unique<BleuReward>();
    case RewardKind::rouge_l: return std::make_unique<RougeReward>();
    case RewardKind::cider: return std::make_unique<CiderReward>(ex.train_idf);
    case RewardKind::wmd: {
      transport::WmdRewardOptions o;
      o.similarity = cfg.wmd_similarity;
      o.aggregation = cfg.aggregation;
      return std::make_unique<WmdReward>(ex.embeddings, o);
    }
    case RewardKind::kernel_cos: {
      simscore::KernelCosineOptions o;
      o.window = cfg.kernel_window;
      o.aggregation = cfg.aggregation;
      return std::make_unique<KernelCosReward>(ex.embeddings, o);
    }
    case RewardKind::trl: {
      if (!ex.reward_model) throw Error("trl reward requested but no reward model is loaded");
      if (!ex.reward_model->frozen()) throw Error("reward model must be frozen");
      return std::make_unique<TrlReward>(ex.reward_model, ex.embeddings);
    }
  }
  throw Error("unknown reward");
}

}  // namespace trl::harness
