#include "trl/agent/networks.hpp"

#include <cmath>

#include "trl/error.hpp"

namespace trl::agent {

namespace {

void check_config(const NetworkConfig& cfg) {
  if (cfg.vocab_size == 0 || cfg.d_img == 0 || cfg.d_emb == 0 || cfg.d_h == 0)
    throw Error("network dimensions must be positive");
}

nn::Var embed(nn::Tape& tape, nn::Parameter& table, TokenId token) {
  if (token >= table.value.shape()[0])
    throw Error("token " + std::to_string(token) + " outside vocabulary of size " + std::to_string(table.value.shape()[0]));
  return nn::row(tape.param(table), token);
}

nn::Var context_of(nn::Tape& tape, const nn::Linear& proj, std::span<const double> features) {
  if (features.size() != proj.in())
    throw Error("context features have dimension " + std::to_string(features.size()) + ", expected " + std::to_string(proj.in()));
  return proj(tape, tape.constant(features));
}

}  // namespace

PolicyNetwork::PolicyNetwork(const NetworkConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  check_config(cfg);
  context_ = nn::Linear(store_, "policy.context", cfg.d_img, cfg.d_h);
  embedding_ = &store_.add("policy.embedding", {cfg.vocab_size, cfg.d_emb}, 1);
  lstm_.emplace_back(store_, "policy.lstm0", cfg.d_emb + cfg.d_h, cfg.d_h);
  lstm_.emplace_back(store_, "policy.lstm1", cfg.d_h, cfg.d_h);
  output_ = nn::Linear(store_, "policy.output", cfg.d_h, cfg.vocab_size);
  store_.init_uniform(seed);
}

nn::Var PolicyNetwork::encode_context(nn::Tape& tape, std::span<const double> features) const {
  return context_of(tape, context_, features);
}

PolicyNetwork::State PolicyNetwork::initial_state(nn::Tape& tape) const {
  State s;
  for (const auto& cell : lstm_) s.layers.push_back(cell.zero_state(tape));
  return s;
}

nn::Var PolicyNetwork::step(nn::Tape& tape, TokenId prev, const State& state, nn::Var context, State& next) const {
  nn::Var input = nn::concat({embed(tape, *embedding_, prev), context});
  next.layers.resize(lstm_.size());
  for (std::size_t l = 0; l < lstm_.size(); ++l) {
    next.layers[l] = lstm_[l].step(tape, input, state.layers[l]);
    input = next.layers[l].h;
  }
  return nn::log_softmax(output_(tape, input));
}

std::vector<double> PolicyNetwork::distribution(std::span<const double> features, std::span<const TokenId> prefix) const {
  nn::Tape tape;
  nn::Var ctx = encode_context(tape, features);
  State s = initial_state(tape), next;
  TokenId prev = core::kStart;
  nn::Var logp;
  for (std::size_t t = 0; t <= prefix.size(); ++t) {
    logp = step(tape, prev, s, ctx, next);
    s = next;
    if (t < prefix.size()) prev = prefix[t];
  }
  std::vector<double> p(logp.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(logp[i]);
  return p;
}

CriticNetwork::CriticNetwork(const NetworkConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  check_config(cfg);
  context_ = nn::Linear(store_, "critic.context", cfg.d_img, cfg.d_h);
  embedding_ = &store_.add("critic.embedding", {cfg.vocab_size, cfg.d_emb}, 1);
  lstm_ = nn::LstmCell(store_, "critic.lstm", cfg.d_emb + cfg.d_h, cfg.d_h);
  head_ = nn::Linear(store_, "critic.head", cfg.d_h, 1);
  store_.init_uniform(seed);
}

std::vector<nn::Var> CriticNetwork::values(nn::Tape& tape, std::span<const double> features,
                                           std::span<const TokenId> actions) const {
  nn::Var ctx = context_of(tape, context_, features);
  nn::LstmCell::State s = lstm_.zero_state(tape);
  std::vector<nn::Var> out;
  out.reserve(actions.size());
  TokenId prev = core::kStart;
  for (TokenId a : actions) {
    s = lstm_.step(tape, nn::concat({embed(tape, *embedding_, prev), ctx}), s);
    out.push_back(nn::pick(nn::sigmoid(head_(tape, s.h)), 0));
    prev = a;
  }
  return out;
}

std::vector<double> CriticNetwork::value_estimates(std::span<const double> features, std::span<const TokenId> actions) const {
  nn::Tape tape;
  std::vector<double> v;
  for (nn::Var x : values(tape, features, actions)) v.push_back(x.scalar());
  return v;
}

}  // namespace trl::agent
