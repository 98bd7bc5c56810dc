#include "trl/simscore/encoder.hpp"

#include <cmath>

#include "trl/core/numeric.hpp"
#include "trl/error.hpp"

namespace trl::simscore {

std::string to_string(EncoderKind kind) { return kind == EncoderKind::bigru_maxpool ? "bigru_maxpool" : "self_attentive"; }

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "bigru_maxpool") return EncoderKind::bigru_maxpool;
  if (s == "self_attentive") return EncoderKind::self_attentive;
  throw Error("unknown encoder kind '" + s + "' (expected bigru_maxpool or self_attentive)");
}

SentenceEncoder::SentenceEncoder(nn::ParameterStore& store, const std::string& prefix, const EncoderConfig& cfg)
    : cfg_(cfg),
      fwd_(store, prefix + ".fwd", cfg.d_emb, cfg.d_h),
      bwd_(store, prefix + ".bwd", cfg.d_emb, cfg.d_h) {
  if (cfg.d_emb == 0 || cfg.d_h == 0) throw Error("encoder dimensions must be positive");
  if (cfg.kind == EncoderKind::self_attentive) attention_ = nn::Linear(store, prefix + ".att", 2 * cfg.d_h, 1);
}

std::vector<nn::Var> SentenceEncoder::states(nn::Tape& tape, std::span<const TokenId> tokens,
                                             const core::EmbeddingTable& emb) const {
  if (tokens.empty()) throw Error("encode: empty sequence");
  if (emb.dim() != cfg_.d_emb)
    throw Error("encode: embedding dim " + std::to_string(emb.dim()) + " but encoder expects " + std::to_string(cfg_.d_emb));
  const std::size_t T = tokens.size();
  std::vector<nn::Var> x(T);
  for (std::size_t t = 0; t < T; ++t) {
    if (tokens[t] >= emb.rows()) throw Error("encode: token " + std::to_string(tokens[t]) + " outside embedding table");
    x[t] = tape.constant(emb.row(tokens[t]));
  }
  std::vector<nn::Var> hf(T), hb(T);
  nn::Var h = fwd_.zero_state(tape);
  for (std::size_t t = 0; t < T; ++t) hf[t] = h = fwd_.step(tape, x[t], h);
  h = bwd_.zero_state(tape);
  for (std::size_t t = T; t-- > 0;) hb[t] = h = bwd_.step(tape, x[t], h);
  std::vector<nn::Var> out(T);
  for (std::size_t t = 0; t < T; ++t) out[t] = nn::concat({hf[t], hb[t]});
  return out;
}

nn::Var SentenceEncoder::encode(nn::Tape& tape, std::span<const TokenId> tokens, const core::EmbeddingTable& emb) const {
  const auto s = states(tape, tokens, emb);
  if (cfg_.kind == EncoderKind::bigru_maxpool) {
    nn::Var m = s.front();
    for (std::size_t t = 1; t < s.size(); ++t) m = nn::maximum(m, s[t]);
    return m;
  }
  std::vector<nn::Var> logits(s.size());
  for (std::size_t t = 0; t < s.size(); ++t) logits[t] = nn::tanh(attention_(tape, s[t]));
  nn::Var alpha = nn::softmax(nn::concat(std::span<const nn::Var>(logits)));
  nn::Var out = nn::scale_by(nn::pick(alpha, 0), s[0]);
  for (std::size_t t = 1; t < s.size(); ++t) out = nn::add(out, nn::scale_by(nn::pick(alpha, t), s[t]));
  return out;
}

std::vector<double> SentenceEncoder::encode_values(std::span<const TokenId> tokens, const core::EmbeddingTable& emb) const {
  nn::Tape tape;
  nn::Var v = encode(tape, tokens, emb);
  return {v.value().begin(), v.value().end()};
}

PairScorer::PairScorer(nn::ParameterStore& store, const std::string& prefix, std::size_t sentence_dim)
    : head_(store, prefix, 4 * sentence_dim, 1), dim_(sentence_dim) {}

nn::Var PairScorer::features(nn::Var h1, nn::Var h2) const {
  if (h1.size() != dim_ || h2.size() != dim_)
    throw Error("pair_score: sentence vectors of size " + std::to_string(h1.size()) + " and " + std::to_string(h2.size()) +
                ", expected " + std::to_string(dim_));
  return nn::concat({h1, h2, nn::abs(nn::sub(h1, h2)), nn::mul(h1, h2)});
}

nn::Var PairScorer::score(nn::Tape& tape, nn::Var h1, nn::Var h2) const {
  return nn::pick(nn::sigmoid(head_(tape, features(h1, h2))), 0);
}

double PairScorer::score_values(std::span<const double> h1, std::span<const double> h2) const {
  nn::Tape tape;
  return score(tape, tape.constant(h1), tape.constant(h2)).scalar();
}

std::vector<double> pair_features(std::span<const double> h1, std::span<const double> h2) {
  if (h1.size() != h2.size()) throw Error("pair_features: dimension mismatch");
  const std::size_t d = h1.size();
  std::vector<double> f(4 * d);
  for (std::size_t i = 0; i < d; ++i) {
    f[i] = h1[i];
    f[d + i] = h2[i];
    f[2 * d + i] = std::abs(h1[i] - h2[i]);
    f[3 * d + i] = h1[i] * h2[i];
  }
  return f;
}

}  // namespace trl::simscore
