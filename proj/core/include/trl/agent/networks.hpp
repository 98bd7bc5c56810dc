#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trl/core/vocabulary.hpp"
#include "trl/nn/layers.hpp"

namespace trl::agent {

using core::TokenId;
using core::TokenSequence;

struct NetworkConfig {
  std::size_t vocab_size = 0;
  std::size_t d_img = 0;
  std::size_t d_emb = 64;
  std::size_t d_h = 64;
};

/// Context-conditioned LSTM decoder. Context h_s = W_s · features + b_s;
/// each step feeds s_t = x_t ⊕ h_s (x_t the embedding of the previous
/// token) through a two-layer LSTM and maps the top state through W_t to
/// log-probabilities over the vocabulary.
class PolicyNetwork {
 public:
  struct State {
    std::vector<nn::LstmCell::State> layers;
  };

  PolicyNetwork(const NetworkConfig& cfg, std::uint64_t seed);
  PolicyNetwork(PolicyNetwork&&) noexcept = default;
  PolicyNetwork& operator=(PolicyNetwork&&) noexcept = default;
  PolicyNetwork(const PolicyNetwork&) = delete;
  PolicyNetwork& operator=(const PolicyNetwork&) = delete;

  const NetworkConfig& config() const { return cfg_; }
  nn::ParameterStore& store() { return store_; }
  const nn::ParameterStore& store() const { return store_; }

  nn::Var encode_context(nn::Tape& tape, std::span<const double> features) const;
  State initial_state(nn::Tape& tape) const;
  /// Log-probabilities of the next token; writes the new recurrent state.
  nn::Var step(nn::Tape& tape, TokenId prev, const State& state, nn::Var context, State& next) const;

  /// Next-token distribution after feeding `prefix` (start marker implied).
  std::vector<double> distribution(std::span<const double> features, std::span<const TokenId> prefix) const;

 private:
  NetworkConfig cfg_;
  nn::ParameterStore store_;
  nn::Linear context_;
  nn::Parameter* embedding_ = nullptr;
  std::vector<nn::LstmCell> lstm_;
  nn::Linear output_;
};

/// Value network with the policy's state construction, its own embedding
/// and a single LSTM layer. The head emits σ(w · h_t + b): a value on the
/// [0, 1] normalized scale.
class CriticNetwork {
 public:
  CriticNetwork(const NetworkConfig& cfg, std::uint64_t seed);
  CriticNetwork(CriticNetwork&&) noexcept = default;
  CriticNetwork& operator=(CriticNetwork&&) noexcept = default;
  CriticNetwork(const CriticNetwork&) = delete;
  CriticNetwork& operator=(const CriticNetwork&) = delete;

  const NetworkConfig& config() const { return cfg_; }
  nn::ParameterStore& store() { return store_; }
  const nn::ParameterStore& store() const { return store_; }

  /// One normalized value per action: entry t scores the state in which
  /// actions[t] is chosen (start marker plus actions[0..t)).
  std::vector<nn::Var> values(nn::Tape& tape, std::span<const double> features, std::span<const TokenId> actions) const;
  std::vector<double> value_estimates(std::span<const double> features, std::span<const TokenId> actions) const;

 private:
  NetworkConfig cfg_;
  nn::ParameterStore store_;
  nn::Linear context_;
  nn::Parameter* embedding_ = nullptr;
  nn::LstmCell lstm_;
  nn::Linear head_;
};

}  // namespace trl::agent
