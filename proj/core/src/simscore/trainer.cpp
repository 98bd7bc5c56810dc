#include "trl/simscore/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "trl/error.hpp"
#include "trl/nn/optim.hpp"

namespace trl::simscore {

namespace {

double multiset_f1(const std::map<std::size_t, int>& a, const std::map<std::size_t, int>& b) {
  int na = 0, nb = 0, common = 0;
  for (auto [k, c] : a) {
    na += c;
    if (auto it = b.find(k); it != b.end()) common += std::min(c, it->second);
  }
  for (auto [k, c] : b) nb += c;
  if (na == 0 && nb == 0) return 1.0;
  return 2.0 * common / static_cast<double>(na + nb);
}

}  // namespace

double concept_similarity(std::span<const TokenId> a, std::span<const TokenId> b, const core::Vocabulary& vocab,
                          const core::Lexicon& lexicon) {
  auto bags = [&](std::span<const TokenId> s) {
    std::pair<std::map<std::size_t, int>, std::map<std::size_t, int>> out;  // (content, all)
    for (TokenId t : s) {
      if (core::is_marker(t)) continue;
      const auto e = lexicon.lookup(vocab.token_of(t));
      ++out.second[e.concept_id];
      if (e.content) ++out.first[e.concept_id];
    }
    return out;
  };
  const auto [ca, aa] = bags(a);
  const auto [cb, ab] = bags(b);
  return 0.5 * multiset_f1(ca, cb) + 0.5 * multiset_f1(aa, ab);
}

namespace {

// Vocabulary ids of every surface form of every concept in `groups`.
std::vector<std::vector<TokenId>> form_ids(const std::vector<std::vector<std::string>>& groups, const core::Vocabulary& vocab) {
  std::vector<std::vector<TokenId>> out;
  for (const auto& forms : groups) {
    std::vector<TokenId> ids;
    for (const auto& w : forms)
      if (auto id = vocab.find(w)) ids.push_back(*id);
    out.push_back(std::move(ids));
  }
  return out;
}

struct Perturber {
  const core::Vocabulary& vocab;
  std::vector<std::vector<TokenId>> objects, attributes;
  std::mt19937_64& rng;

  std::size_t uniform(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

  // Group index of `t` within `groups`, or npos.
  static std::size_t group_of(TokenId t, const std::vector<std::vector<TokenId>>& groups) {
    for (std::size_t g = 0; g < groups.size(); ++g)
      if (std::find(groups[g].begin(), groups[g].end(), t) != groups[g].end()) return g;
    return std::string::npos;
  }

  // Replaces one member of `groups` in `s` by a form of another group
  // (swap_concept) or by another form of the same group.
  bool replace(TokenSequence& s, const std::vector<std::vector<TokenId>>& groups, bool swap_concept) {
    std::vector<std::size_t> slots;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (group_of(s[i], groups) != std::string::npos) slots.push_back(i);
    if (slots.empty()) return false;
    const std::size_t i = slots[uniform(slots.size())];
    const std::size_t g = group_of(s[i], groups);
    if (swap_concept) {
      std::vector<std::size_t> others;
      for (std::size_t h = 0; h < groups.size(); ++h)
        if (h != g && !groups[h].empty()) others.push_back(h);
      if (others.empty()) return false;
      const auto& forms = groups[others[uniform(others.size())]];
      s[i] = forms[uniform(forms.size())];
    } else {
      std::vector<TokenId> alts;
      for (TokenId t : groups[g])
        if (t != s[i]) alts.push_back(t);
      if (alts.empty()) return false;
      s[i] = alts[uniform(alts.size())];
    }
    return true;
  }

  void apply(TokenSequence& s) {
    switch (uniform(7)) {
      case 0: replace(s, objects, true); break;
      case 1: replace(s, attributes, true); break;
      case 2: replace(s, objects, false) || replace(s, attributes, false); break;
      case 3:
        if (s.size() > 1) s.erase(s.begin() + static_cast<std::ptrdiff_t>(uniform(s.size())));
        break;
      case 4:
        if (s.size() > 1) s.resize(1 + uniform(s.size() - 1));
        break;
      case 5: {
        const std::size_t i = uniform(s.size());
        s.insert(s.begin() + static_cast<std::ptrdiff_t>(i), s[i]);
        break;
      }
      default: {
        const std::size_t n = vocab.size() - core::kNumReserved;
        s[uniform(s.size())] = static_cast<TokenId>(core::kNumReserved + uniform(n));
        break;
      }
    }
  }
};

}  // namespace

std::vector<ScorerPair> make_similarity_pairs(const core::Corpus& corpus, const core::Lexicon& lexicon, std::size_t count,
                                              std::uint64_t seed) {
  if (corpus.scenes.empty()) throw Error("make_similarity_pairs: empty corpus");
  if (corpus.vocabulary.size() <= core::kNumReserved) throw Error("make_similarity_pairs: empty vocabulary");
  std::mt19937_64 rng(seed);
  Perturber perturb{corpus.vocabulary, form_ids(lexicon.objects, corpus.vocabulary),
                    form_ids(lexicon.attributes, corpus.vocabulary), rng};
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  std::vector<ScorerPair> pairs;
  pairs.reserve(count);
  while (pairs.size() < count) {
    const auto& scene = corpus.scenes[pick(corpus.scenes.size())];
    const auto& refs = scene.references;
    ScorerPair p;
    p.a = refs[pick(refs.size())];
    const std::size_t kind = pick(4);
    if (kind == 0) {
      p.b = refs[pick(refs.size())];
    } else if (kind == 1) {
      const auto& other = corpus.scenes[pick(corpus.scenes.size())];
      p.b = other.references[pick(other.references.size())];
    } else {
      p.b = kind == 2 ? p.a : refs[pick(refs.size())];
      const std::size_t ops = 1 + pick(2);
      for (std::size_t k = 0; k < ops; ++k) perturb.apply(p.b);
    }
    if (p.a.empty() || p.b.empty()) continue;
    if (pick(2) == 1) std::swap(p.a, p.b);
    p.label = concept_similarity(p.a, p.b, corpus.vocabulary, lexicon);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

double mean_squared_error(const RewardModel& model, const std::vector<ScorerPair>& pairs, const core::EmbeddingTable& emb) {
  if (pairs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& p : pairs) {
    const double d = model.pair_score(model.encode(p.a, emb), model.encode(p.b, emb)) - p.label;
    s += d * d;
  }
  return s / static_cast<double>(pairs.size());
}

ScorerTrainResult train_scorer(const std::vector<ScorerPair>& pairs, const core::EmbeddingTable& emb,
                               const ScorerTrainConfig& cfg) {
  if (pairs.size() < 100) throw Error("train_scorer: need at least 100 pairs, got " + std::to_string(pairs.size()));
  if (cfg.batch < 1) throw Error("train_scorer: batch must be >= 1");
  for (const auto& p : pairs)
    if (!(p.label >= 0.0 && p.label <= 1.0)) throw Error("train_scorer: labels must lie in [0, 1]");

  RewardModelConfig mcfg = cfg.model;
  mcfg.encoder.d_emb = emb.dim();
  ScorerTrainResult res{RewardModel(mcfg, cfg.seed), {}, 0.0, 0.0, false};
  RewardModel& model = res.model;
  if (cfg.zero_head_init) {
    model.store().get("head.W").value.fill(0.0);
    model.store().get("head.b").value.fill(0.0);
  }

  const bool degenerate = std::all_of(pairs.begin(), pairs.end(), [&](const ScorerPair& p) { return p.label == pairs[0].label; });
  res.degenerate_labels = degenerate;
  if (degenerate) spdlog::warn("train_scorer: all {} labels equal {}; nothing to learn", pairs.size(), pairs[0].label);

  res.initial_mse = mean_squared_error(model, pairs, emb);
  spdlog::info("train_scorer: {} pairs, initial mse {:.6f}", pairs.size(), res.initial_mse);

  std::mt19937_64 rng(cfg.seed ^ 0x5C0E5C0E5C0E5C0EULL);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  const nn::AdamConfig adam{cfg.lr};
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      nn::Tape tape;
      std::vector<nn::Var> terms;
      for (std::size_t k = start; k < end; ++k) {
        const auto& p = pairs[order[k]];
        nn::Var s = model.scorer().score(tape, model.encoder().encode(tape, p.a, emb), model.encoder().encode(tape, p.b, emb));
        nn::Var d = nn::add_const(s, -p.label);
        terms.push_back(nn::mul(d, d));
      }
      nn::Var loss = nn::scale(nn::sum(nn::concat(std::span<const nn::Var>(terms))), 1.0 / static_cast<double>(end - start));
      epoch_loss += loss.scalar() * static_cast<double>(end - start);
      tape.backward(loss);
      nn::adam_step(model.store(), adam);
    }
    res.curve.push_back(epoch_loss / static_cast<double>(pairs.size()));
    spdlog::debug("train_scorer: epoch {} loss {:.6f}", epoch + 1, res.curve.back());
  }
  res.final_mse = mean_squared_error(model, pairs, emb);
  spdlog::info("train_scorer: final mse {:.6f}", res.final_mse);
  model.freeze();
  return res;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("spearman: need two aligned samples of size >= 2");
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace trl::simscore
