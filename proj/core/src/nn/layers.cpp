#include "trl/nn/layers.hpp"

namespace trl::nn {

Linear::Linear(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out)
    : W_(&store.add(prefix + ".W", {out, in}, in)), b_(&store.add(prefix + ".b", {out}, in)), in_(in), out_(out) {}

Var Linear::operator()(Tape& tape, Var x) const { return affine(tape.param(*W_), tape.param(*b_), x); }

LstmCell::LstmCell(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t hidden)
    : W_(&store.add(prefix + ".W", {4 * hidden, in}, in + hidden)),
      U_(&store.add(prefix + ".U", {4 * hidden, hidden}, in + hidden)),
      b_(&store.add(prefix + ".b", {4 * hidden}, in + hidden)),
      in_(in),
      hidden_(hidden) {}

LstmCell::State LstmCell::zero_state(Tape& tape) const {
  const std::vector<double> zeros(hidden_, 0.0);
  return {tape.constant(zeros), tape.constant(zeros)};
}

LstmCell::State LstmCell::step(Tape& tape, Var x, const State& state) const {
  const std::size_t h = hidden_;
  Var gates = add(affine(tape.param(*W_), tape.param(*b_), x), matvec(tape.param(*U_), state.h));
  Var i = sigmoid(slice(gates, 0, h));
  Var f = sigmoid(slice(gates, h, h));
  Var g = tanh(slice(gates, 2 * h, h));
  Var o = sigmoid(slice(gates, 3 * h, h));
  Var c = add(mul(f, state.c), mul(i, g));
  return {mul(o, tanh(c)), c};
}

GruCell::GruCell(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t hidden)
    : W_(&store.add(prefix + ".W", {3 * hidden, in}, in + hidden)),
      Uzr_(&store.add(prefix + ".Uzr", {2 * hidden, hidden}, in + hidden)),
      Un_(&store.add(prefix + ".Un", {hidden, hidden}, in + hidden)),
      b_(&store.add(prefix + ".b", {3 * hidden}, in + hidden)),
      in_(in),
      hidden_(hidden) {}

Var GruCell::zero_state(Tape& tape) const { return tape.constant(std::vector<double>(hidden_, 0.0)); }

Var GruCell::step(Tape& tape, Var x, Var h) const {
  const std::size_t n = hidden_;
  Var wx = affine(tape.param(*W_), tape.param(*b_), x);
  Var uh = matvec(tape.param(*Uzr_), h);
  Var z = sigmoid(add(slice(wx, 0, n), slice(uh, 0, n)));
  Var r = sigmoid(add(slice(wx, n, n), slice(uh, n, n)));
  Var cand = tanh(add(slice(wx, 2 * n, n), matvec(tape.param(*Un_), mul(r, h))));
  return add(cand, mul(z, sub(h, cand)));
}

}  // namespace trl::nn
