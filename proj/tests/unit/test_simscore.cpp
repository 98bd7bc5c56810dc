#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "trl/core/synthetic.hpp"
#include "trl/error.hpp"
#include "trl/nn/gradcheck.hpp"
#include "trl/simscore/encoder.hpp"
#include "trl/simscore/kernel_cosine.hpp"
#include "trl/simscore/reward_model.hpp"
#include "trl/simscore/trainer.hpp"

using namespace trl;
using namespace trl::simscore;
using core::TokenSequence;
using S = TokenSequence;

namespace {

struct Fixture {
  core::SyntheticData data = core::generate_synthetic_corpus({}, 5);
  core::EmbeddingTable emb = core::synthetic_embeddings(data.lexicon, data.corpus.vocabulary, 16, 5);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

RewardModel zero_head_model(const core::EmbeddingTable& emb, Granularity g = Granularity::terminal) {
  RewardModelConfig cfg;
  cfg.encoder.d_emb = emb.dim();
  cfg.encoder.d_h = 4;
  cfg.granularity = g;
  RewardModel m(cfg, 3);
  m.store().get("head.W").value.fill(0.0);
  m.store().get("head.b").value.fill(0.0);
  m.freeze();
  return m;
}

core::EmbeddingTable basis(std::size_t words, std::size_t dim) {
  core::EmbeddingTable e(core::kNumReserved + words, dim);
  for (std::size_t r = 1; r < e.rows(); ++r) e.row(r)[(r + dim - core::kNumReserved) % dim] = 1.0;
  e.normalize();
  return e;
}

// The windowed cosine written out directly from its definition.
double kernel_cosine_oracle(const S& cand, const S& ref, const core::EmbeddingTable& emb, std::size_t k) {
  double total = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i)
    for (std::size_t j = 0; j < cand.size(); ++j) {
      const std::size_t gap = i > j ? i - j : j - i;
      if (gap > k) continue;
      double dot = 0.0, nr = 0.0, nc = 0.0;
      for (std::size_t d = 0; d < emb.dim(); ++d) {
        dot += emb.row(ref[i])[d] * emb.row(cand[j])[d];
        nr += emb.row(ref[i])[d] * emb.row(ref[i])[d];
        nc += emb.row(cand[j])[d] * emb.row(cand[j])[d];
      }
      total += std::exp(-static_cast<double>(gap)) * dot / std::sqrt(nr * nc);
    }
  const double bp = cand.size() >= ref.size() ? 1.0 : std::exp(1.0 - static_cast<double>(ref.size()) / cand.size());
  return oracle::sigmoid(static_cast<double>(k) / ref.size() * bp * total);
}

constexpr core::TokenId u = core::kNumReserved, v = core::kNumReserved + 1, w = core::kNumReserved + 2;

}  // namespace

TEST(Encoder, MaxPoolOfSingleTokenIsItsState) {
  const auto& f = fixture();
  nn::ParameterStore store;
  SentenceEncoder enc(store, "e", {EncoderKind::bigru_maxpool, f.emb.dim(), 5});
  store.init_uniform(1);
  nn::Tape t;
  const S one{7};
  const auto states = enc.states(t, one, f.emb);
  ASSERT_EQ(states.size(), 1u);
  const auto out = enc.encode(t, one, f.emb);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(out[i], states[0][i]);
}

TEST(Encoder, UniformAttentionAveragesStates) {
  const auto& f = fixture();
  nn::ParameterStore store;
  SentenceEncoder enc(store, "e", {EncoderKind::self_attentive, f.emb.dim(), 4});
  store.init_uniform(2);
  store.get("e.att.W").value.fill(0.0);
  store.get("e.att.b").value.fill(0.0);
  nn::Tape t;
  const S s{5, 9, 6, 12};
  const auto states = enc.states(t, s, f.emb);
  const auto out = enc.encode(t, s, f.emb);
  for (std::size_t i = 0; i < 8; ++i) {
    double mean = 0.0;
    for (const auto& st : states) mean += st[i] / 4.0;
    EXPECT_NEAR(out[i], mean, 1e-15);
  }
}

TEST(Encoder, OutputDimensionIndependentOfLength) {
  const auto& f = fixture();
  for (auto kind : {EncoderKind::bigru_maxpool, EncoderKind::self_attentive}) {
    nn::ParameterStore store;
    SentenceEncoder enc(store, "e", {kind, f.emb.dim(), 6});
    store.init_uniform(3);
    S s;
    for (std::size_t len = 1; len <= 30; ++len) {
      s.push_back(static_cast<core::TokenId>(core::kNumReserved + len % 20));
      EXPECT_EQ(enc.encode_values(s, f.emb).size(), 12u);
    }
  }
}

TEST(Encoder, BidirectionalStatesMatchGruOracle) {
  const auto& f = fixture();
  nn::ParameterStore store;
  SentenceEncoder enc(store, "e", {EncoderKind::bigru_maxpool, f.emb.dim(), 3});
  store.init_uniform(4);
  const S s{8, 5, 11};
  auto vec = [&](const std::string& n) {
    return std::vector<double>(store.get(n).value.data().begin(), store.get(n).value.data().end());
  };
  auto x = [&](std::size_t t) { return std::vector<double>(f.emb.row(s[t]).begin(), f.emb.row(s[t]).end()); };
  std::vector<std::vector<double>> fwd(3), bwd(3);
  std::vector<double> h(3, 0.0);
  for (std::size_t t = 0; t < 3; ++t) fwd[t] = h = oracle::gru_step(vec("e.fwd.W"), vec("e.fwd.Uzr"), vec("e.fwd.Un"), vec("e.fwd.b"), x(t), h);
  h.assign(3, 0.0);
  for (std::size_t t = 3; t-- > 0;) bwd[t] = h = oracle::gru_step(vec("e.bwd.W"), vec("e.bwd.Uzr"), vec("e.bwd.Un"), vec("e.bwd.b"), x(t), h);
  nn::Tape tape;
  const auto states = enc.states(tape, s, f.emb);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(states[t][j], fwd[t][j], 1e-14);
      EXPECT_NEAR(states[t][3 + j], bwd[t][j], 1e-14);
    }
  const auto pooled = enc.encode_values(s, f.emb);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(pooled[j], std::max({fwd[0][j], fwd[1][j], fwd[2][j]}), 1e-14);
}

TEST(Encoder, InvalidInputs) {
  const auto& f = fixture();
  nn::ParameterStore store;
  SentenceEncoder enc(store, "e", {EncoderKind::bigru_maxpool, f.emb.dim(), 3});
  EXPECT_THROW(enc.encode_values(S{}, f.emb), Error);
  const core::EmbeddingTable other(f.emb.rows(), f.emb.dim() + 1);
  EXPECT_THROW(enc.encode_values(S{5}, other), Error);
  EXPECT_THROW(encoder_kind_from_string("lstm"), Error);
  EXPECT_EQ(encoder_kind_from_string(to_string(EncoderKind::self_attentive)), EncoderKind::self_attentive);
}

TEST(PairScorer, FeaturesAndZeroHead) {
  EXPECT_EQ(pair_features(std::vector<double>{1, 2}, std::vector<double>{3, 1}), (std::vector<double>{1, 2, 3, 1, 2, 1, 3, 2}));
  nn::ParameterStore store;
  PairScorer head(store, "h", 3);
  EXPECT_EQ(head.score_values(std::vector<double>{1, -4, 2}, std::vector<double>{0.3, 9, 1}), 0.5);
  EXPECT_THROW(head.score_values(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
  EXPECT_THROW(pair_features(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST(PairScorer, MatchesSigmoidOfDot) {
  nn::ParameterStore store;
  PairScorer head(store, "h", 2);
  store.init_uniform(5);
  const std::vector<double> h1{0.3, -0.2}, h2{0.9, 0.4};
  const auto feats = pair_features(h1, h2);
  double z = store.get("h.b").value[0];
  for (std::size_t i = 0; i < 8; ++i) z += store.get("h.W").value[i] * feats[i];
  EXPECT_NEAR(head.score_values(h1, h2), oracle::sigmoid(z), 1e-15);
}

TEST(KernelCosine, ClosedForms) {
  const auto emb = basis(3, 3);
  EXPECT_NEAR(kernel_cosine(S{u}, S{u}, emb, 1), 0.7310585786300049, 1e-12);
  EXPECT_NEAR(kernel_cosine(S{u, u}, S{v, v}, emb, 2), 0.5, 1e-15);
  EXPECT_THROW(kernel_cosine(S{}, S{u}, emb, 1), Error);
  EXPECT_THROW(kernel_cosine(S{u}, S{u}, emb, 0), Error);
}

TEST(KernelCosine, ShiftLowersScore) {
  const auto emb = basis(3, 3);
  const S ref{u, v, w};
  // The shifted candidate keeps two tokens at distance 1 instead of 0.
  const double aligned = kernel_cosine(ref, ref, emb, 1);
  const double shifted = kernel_cosine(S{w, u, v}, ref, emb, 1);
  EXPECT_LT(shifted, aligned);
  EXPECT_NEAR(aligned, oracle::sigmoid(1.0 / 3.0 * 3.0), 1e-12);
  EXPECT_NEAR(shifted, oracle::sigmoid(1.0 / 3.0 * 2.0 * std::exp(-1.0)), 1e-12);
}

TEST(KernelCosine, MatchesDefinitionOnRandomSentences) {
  const auto& f = fixture();
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<core::TokenId> tok(core::kNumReserved, static_cast<core::TokenId>(f.emb.rows() - 1));
  std::uniform_int_distribution<std::size_t> len(1, 9);
  for (int trial = 0; trial < 200; ++trial) {
    S a(len(rng)), b(len(rng));
    for (auto& t : a) t = tok(rng);
    for (auto& t : b) t = tok(rng);
    const std::size_t k = 1 + trial % 3;
    EXPECT_NEAR(kernel_cosine(a, b, f.emb, k), kernel_cosine_oracle(a, b, f.emb, k), 1e-12);
  }
}

TEST(KernelCosine, MultiReferenceAggregation) {
  const auto emb = basis(3, 3);
  const std::vector<S> refs{S{u}, S{v}};
  KernelCosineOptions o;
  o.window = 1;
  EXPECT_NEAR(kernel_cosine(S{u}, refs, emb, o), 0.5 * (oracle::sigmoid(1.0) + 0.5), 1e-15);
  o.aggregation = core::Aggregation::max;
  EXPECT_NEAR(kernel_cosine(S{u}, refs, emb, o), oracle::sigmoid(1.0), 1e-15);
}

TEST(TrlReward, RequiresFrozenModel) {
  const auto& f = fixture();
  RewardModelConfig cfg;
  cfg.encoder.d_emb = f.emb.dim();
  RewardModel m(cfg, 1);
  try {
    trl_reward(m, S{5, 6}, std::vector<S>{S{5, 6}}, f.emb);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "reward model must be frozen");
  }
}

TEST(TrlReward, ZeroHeadGivesConstantHalf) {
  const auto& f = fixture();
  const std::vector<S> refs{S{5, 6, 7}};
  const auto term = zero_head_model(f.emb, Granularity::terminal);
  const auto enc = encode_references(term, refs, f.emb);
  EXPECT_EQ(trl_reward(term, S{9, 8}, enc, f.emb), 0.5);
  EXPECT_EQ(trl_step_rewards(term, S{9, 8, core::kEnd}, enc, f.emb), (std::vector<double>{0, 0, 0.5}));
  const auto inc = zero_head_model(f.emb, Granularity::incremental);
  EXPECT_EQ(trl_step_rewards(inc, S{9, 8, core::kEnd}, enc, f.emb), (std::vector<double>{0.5, 0, 0}));
}

TEST(TrlReward, IncrementalRewardsTelescope) {
  const auto& f = fixture();
  RewardModelConfig cfg;
  cfg.encoder.d_emb = f.emb.dim();
  cfg.encoder.d_h = 6;
  cfg.granularity = Granularity::incremental;
  RewardModel m(cfg, 8);
  m.freeze();
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<core::TokenId> tok(core::kNumReserved, static_cast<core::TokenId>(f.emb.rows() - 1));
  for (int trial = 0; trial < 50; ++trial) {
    S cand(1 + trial % 12);
    for (auto& t : cand) t = tok(rng);
    cand.push_back(core::kEnd);
    const auto& refs = f.data.corpus.scenes[trial].references;
    const auto enc = encode_references(m, refs, f.emb);
    const auto r = trl_step_rewards(m, cand, enc, f.emb);
    double sum = 0.0;
    for (double x : r) sum += x;
    EXPECT_EQ(sum, core::quantize_reward(trl_reward(m, cand, enc, f.emb)));
  }
}

TEST(TrlReward, MeanEqualsMaxForDuplicateReferences) {
  const auto& f = fixture();
  RewardModelConfig cfg;
  cfg.encoder.d_emb = f.emb.dim();
  RewardModel m(cfg, 9);
  m.freeze();
  const S ref{5, 9, 12};
  const std::vector<S> refs{ref, ref, ref};
  m.set_aggregation(core::Aggregation::mean);
  const double mean = trl_reward(m, S{5, 6}, refs, f.emb);
  m.set_aggregation(core::Aggregation::max);
  EXPECT_DOUBLE_EQ(trl_reward(m, S{5, 6}, refs, f.emb), mean);
  EXPECT_THROW(trl_reward(m, S{core::kEnd}, refs, f.emb), Error);
}

TEST(RewardModel, SaveLoadRoundTrip) {
  const auto& f = fixture();
  RewardModelConfig cfg;
  cfg.encoder = {EncoderKind::self_attentive, f.emb.dim(), 5};
  cfg.aggregation = core::Aggregation::max;
  cfg.granularity = Granularity::incremental;
  RewardModel m(cfg, 10);
  m.freeze();
  const auto dir = std::filesystem::temp_directory_path() / "trl_test_reward_model";
  std::filesystem::create_directories(dir);
  const auto path = dir / "rm.bin";
  save_reward_model(m, path);
  const auto back = load_reward_model(path);
  EXPECT_EQ(back.store().checksum(), m.store().checksum());
  EXPECT_TRUE(back.frozen());
  EXPECT_EQ(back.config().encoder.kind, EncoderKind::self_attentive);
  EXPECT_EQ(back.config().aggregation, core::Aggregation::max);
  EXPECT_EQ(back.config().granularity, Granularity::incremental);
  const std::vector<S> refs{S{5, 6, 7}};
  EXPECT_EQ(trl_reward(back, S{8, 6}, refs, f.emb), trl_reward(m, S{8, 6}, refs, f.emb));

  // A sidecar from a different model no longer matches the weights.
  RewardModel other(cfg, 11);
  other.freeze();
  save_reward_model(other, dir / "other.bin");
  std::filesystem::copy_file(dir / "other.bin.json", path.string() + ".json", std::filesystem::copy_options::overwrite_existing);
  EXPECT_THROW(load_reward_model(path), Error);
  std::filesystem::remove_all(dir);
}

TEST(ConceptSimilarity, SynonymsAndSwaps) {
  const auto& f = fixture();
  const auto& lex = f.data.lexicon;
  const auto& voc = f.data.corpus.vocabulary;
  auto tok = [&](std::vector<std::string> words) { return core::tokenize(words, voc); };
  const auto& o0 = lex.objects[0];
  const auto& o1 = lex.objects[1];
  const auto& a0 = lex.attributes[0];
  const auto base = tok({"a", a0[0], o0[0]});
  EXPECT_DOUBLE_EQ(concept_similarity(base, base, voc, lex), 1.0);
  if (o0.size() > 1) {
    EXPECT_DOUBLE_EQ(concept_similarity(base, tok({"a", a0[0], o0[1]}), voc, lex), 1.0);
  }
  const double swapped = concept_similarity(base, tok({"a", a0[0], o1[0]}), voc, lex);
  EXPECT_LT(swapped, 1.0);
  EXPECT_GT(swapped, 0.0);
}

TEST(ScorerTraining, ReducesErrorAndRanksHeldOutPairs) {
  const auto& f = fixture();
  const auto pairs = make_similarity_pairs(f.data.corpus, f.data.lexicon, 700, 3);
  ASSERT_EQ(pairs.size(), 700u);
  const std::vector<ScorerPair> train(pairs.begin(), pairs.begin() + 500), held(pairs.begin() + 500, pairs.end());
  ScorerTrainConfig cfg;
  cfg.model.encoder.d_h = 8;
  cfg.epochs = 30;
  cfg.seed = 4;
  const auto res = train_scorer(train, f.emb, cfg);
  EXPECT_TRUE(res.model.frozen());
  EXPECT_EQ(res.curve.size(), 30u);
  EXPECT_LT(res.final_mse, 0.5 * res.initial_mse);
  std::vector<double> scores, labels;
  for (const auto& p : held) {
    scores.push_back(res.model.pair_score(res.model.encode(p.a, f.emb), res.model.encode(p.b, f.emb)));
    labels.push_back(p.label);
  }
  EXPECT_GT(spearman(scores, labels), 0.0);

  // Self pairs outscore random pairs in the median.
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pick(0, f.data.corpus.scenes.size() - 1);
  std::vector<double> self, random;
  for (int i = 0; i < 101; ++i) {
    const auto& s = f.data.corpus.scenes[pick(rng)].references[0];
    const auto& o = f.data.corpus.scenes[pick(rng)].references[1];
    const auto hs = res.model.encode(s, f.emb);
    self.push_back(res.model.pair_score(hs, hs));
    random.push_back(res.model.pair_score(hs, res.model.encode(o, f.emb)));
  }
  std::nth_element(self.begin(), self.begin() + 50, self.end());
  std::nth_element(random.begin(), random.begin() + 50, random.end());
  EXPECT_GE(self[50], random[50]);
}

TEST(ScorerTraining, ConstantHalfLabelsKeepZeroHead) {
  const auto& f = fixture();
  auto pairs = make_similarity_pairs(f.data.corpus, f.data.lexicon, 120, 6);
  for (auto& p : pairs) p.label = 0.5;
  ScorerTrainConfig cfg;
  cfg.model.encoder.d_h = 4;
  cfg.epochs = 3;
  cfg.zero_head_init = true;
  const auto res = train_scorer(pairs, f.emb, cfg);
  EXPECT_TRUE(res.degenerate_labels);
  EXPECT_LT(res.initial_mse, 1e-20);
  for (double x : res.model.store().get("head.W").value.data()) EXPECT_LT(std::abs(x), 1e-12);
}

TEST(ScorerTraining, RejectsSmallOrInvalidSets) {
  const auto& f = fixture();
  auto pairs = make_similarity_pairs(f.data.corpus, f.data.lexicon, 99, 6);
  EXPECT_THROW(train_scorer(pairs, f.emb, {}), Error);
  pairs = make_similarity_pairs(f.data.corpus, f.data.lexicon, 100, 6);
  pairs[3].label = 1.5;
  EXPECT_THROW(train_scorer(pairs, f.emb, {}), Error);
}

TEST(Spearman, KnownValues) {
  EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{4, 3, 2, 1}), -1.0);
  // Ties take average ranks: x ranks (1.5, 1.5, 3), y ranks (1, 2, 3).
  EXPECT_NEAR(spearman(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 3}), std::sqrt(3.0) / 2.0, 1e-12);
}

TEST(ScorerGradients, EncodersAndHeadPassFiniteDifferences) {
  const auto& f = fixture();
  for (auto kind : {EncoderKind::bigru_maxpool, EncoderKind::self_attentive}) {
    RewardModelConfig cfg;
    cfg.encoder = {kind, f.emb.dim(), 3};
    RewardModel m(cfg, 12);
    const S a{5, 9, 6}, b{7, 5};
    auto loss = [&](nn::Tape& t) {
      auto h1 = m.encoder().encode(t, a, f.emb);
      auto h2 = m.encoder().encode(t, b, f.emb);
      auto d = nn::add_const(m.scorer().score(t, h1, h2), -0.3);
      return nn::mul(d, d);
    };
    const auto r = nn::finite_difference_check(loss, m.store(), {1e-5, 24, 13});
    EXPECT_LT(r.max_relative_error, 1e-4) << to_string(kind);
  }
}
