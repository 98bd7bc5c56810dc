#pragma once

#include <string>

#include "trl/nn/parameters.hpp"
#include "trl/nn/tape.hpp"

namespace trl::nn {

class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out);

  Var operator()(Tape& tape, Var x) const;
  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }

 private:
  Parameter* W_ = nullptr;
  Parameter* b_ = nullptr;
  std::size_t in_ = 0, out_ = 0;
};

/// LSTM cell with gate order (input, forget, candidate, output):
///   i = σ(.), f = σ(.), g = tanh(.), o = σ(.)
///   c' = f ⊙ c + i ⊙ g,  h' = o ⊙ tanh(c')
class LstmCell {
 public:
  struct State {
    Var h;
    Var c;
  };

  LstmCell() = default;
  LstmCell(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t hidden);

  State zero_state(Tape& tape) const;
  State step(Tape& tape, Var x, const State& state) const;

  std::size_t in() const { return in_; }
  std::size_t hidden() const { return hidden_; }

 private:
  Parameter* W_ = nullptr;  // [4h x in]
  Parameter* U_ = nullptr;  // [4h x h]
  Parameter* b_ = nullptr;  // [4h]
  std::size_t in_ = 0, hidden_ = 0;
};

/// GRU cell:
///   z = σ(W_z x + U_z h + b_z), r = σ(W_r x + U_r h + b_r)
///   n = tanh(W_n x + U_n (r ⊙ h) + b_n),  h' = (1 − z) ⊙ n + z ⊙ h
class GruCell {
 public:
  GruCell() = default;
  GruCell(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t hidden);

  Var zero_state(Tape& tape) const;
  Var step(Tape& tape, Var x, Var h) const;

  std::size_t in() const { return in_; }
  std::size_t hidden() const { return hidden_; }

 private:
  Parameter* W_ = nullptr;   // [3h x in], rows (z, r, n)
  Parameter* Uzr_ = nullptr; // [2h x h]
  Parameter* Un_ = nullptr;  // [h x h]
  Parameter* b_ = nullptr;   // [3h]
  std::size_t in_ = 0, hidden_ = 0;
};

}  // namespace trl::nn
