#pragma once

#include <span>
#include <string>
#include <vector>

#include "trl/core/embeddings.hpp"
#include "trl/core/vocabulary.hpp"
#include "trl/nn/layers.hpp"

namespace trl::simscore {

using core::TokenId;
using core::TokenSequence;

enum class EncoderKind {
  bigru_maxpool,   // elementwise max over time of [forward; backward] GRU states
  self_attentive,  // softmax(tanh(w·s_t + b))-weighted average of the same states
};

std::string to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(const std::string& s);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::bigru_maxpool;
  std::size_t d_emb = 0;
  std::size_t d_h = 32;
};

/// Bidirectional GRU sentence encoder over fixed word embeddings. Output
/// dimension is 2·d_h regardless of sentence length.
class SentenceEncoder {
 public:
  SentenceEncoder() = default;
  SentenceEncoder(nn::ParameterStore& store, const std::string& prefix, const EncoderConfig& cfg);

  /// Concatenated [h_fwd_t; h_bwd_t] for every position t.
  std::vector<nn::Var> states(nn::Tape& tape, std::span<const TokenId> tokens, const core::EmbeddingTable& emb) const;
  nn::Var encode(nn::Tape& tape, std::span<const TokenId> tokens, const core::EmbeddingTable& emb) const;
  std::vector<double> encode_values(std::span<const TokenId> tokens, const core::EmbeddingTable& emb) const;

  const EncoderConfig& config() const { return cfg_; }
  std::size_t output_dim() const { return 2 * cfg_.d_h; }

 private:
  EncoderConfig cfg_;
  nn::GruCell fwd_, bwd_;
  nn::Linear attention_;  // 1 x 2·d_h, self_attentive only
};

/// sigmoid(W·[h1, h2, |h1 − h2|, h1 ⊙ h2] + b) with W of shape 1 x 8·d_h.
class PairScorer {
 public:
  PairScorer() = default;
  PairScorer(nn::ParameterStore& store, const std::string& prefix, std::size_t sentence_dim);

  nn::Var features(nn::Var h1, nn::Var h2) const;
  nn::Var score(nn::Tape& tape, nn::Var h1, nn::Var h2) const;
  double score_values(std::span<const double> h1, std::span<const double> h2) const;

  std::size_t sentence_dim() const { return dim_; }

 private:
  nn::Linear head_;
  std::size_t dim_ = 0;
};

/// [h1, h2, |h1 − h2|, h1 ⊙ h2] on plain values.
std::vector<double> pair_features(std::span<const double> h1, std::span<const double> h2);

}  // namespace trl::simscore
