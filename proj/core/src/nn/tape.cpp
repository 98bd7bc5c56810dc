#include "trl/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trl/error.hpp"

namespace trl::nn {

namespace {

using Node = Tape::Node;

const Node& node_of(Var v) {
  if (!v.valid()) throw Error("use of an unbound Var");
  return v.tape()->node(v.id());
}

Tape& same_tape(Var x, Var y) {
  if (!x.valid() || !y.valid() || x.tape() != y.tape()) throw Error("operands recorded on different tapes");
  return *x.tape();
}

std::string vec_shape(const Node& n) {
  return n.cols == 1 ? "[" + std::to_string(n.rows) + "]"
                     : "[" + std::to_string(n.rows) + "x" + std::to_string(n.cols) + "]";
}

Node make_vector(std::vector<double> value) {
  Node n;
  n.rows = value.size();
  n.cols = 1;
  n.value = std::move(value);
  return n;
}

void require_same_size(const char* op, const Node& x, const Node& y) {
  if (x.size() != y.size()) throw Error(std::string(op) + ": shape mismatch " + vec_shape(x) + " vs " + vec_shape(y));
}

template <class F>
Var unary(Var x, Op op, F&& f, double k0 = 0.0, double k1 = 0.0) {
  const Node& nx = node_of(x);
  std::vector<double> out(nx.size());
  const double* xv = nx.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  Node n = make_vector(std::move(out));
  n.op = op;
  n.a = x.id();
  n.k0 = k0;
  n.k1 = k1;
  n.needs_grad = nx.needs_grad;
  return x.tape()->push(std::move(n));
}

template <class F>
Var binary(Var x, Var y, Op op, const char* name, F&& f) {
  Tape& tape = same_tape(x, y);
  const Node& nx = node_of(x);
  const Node& ny = node_of(y);
  require_same_size(name, nx, ny);
  std::vector<double> out(nx.size());
  const double* xv = nx.data();
  const double* yv = ny.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i], yv[i]);
  Node n = make_vector(std::move(out));
  n.op = op;
  n.a = x.id();
  n.b = y.id();
  n.needs_grad = nx.needs_grad || ny.needs_grad;
  return tape.push(std::move(n));
}

void check_finite(const char* op, const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) throw Error(std::string(op) + ": non-finite value");
}

}  // namespace

std::size_t Var::size() const { return node_of(*this).size(); }

std::span<const double> Var::value() const {
  const Node& n = node_of(*this);
  return {n.data(), n.size()};
}

double Var::scalar() const {
  const Node& n = node_of(*this);
  if (n.size() != 1) throw Error("scalar() on a value of shape " + vec_shape(n));
  return n.data()[0];
}

void Tape::check_live() const {
  if (consumed_) throw Error("tape already consumed by backward");
}

Var Tape::push(Node n) {
  check_live();
  if (nodes_.empty()) nodes_.reserve(1024);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(const Tensor& t) {
  Node n;
  if (t.rank() == 2) {
    n.rows = t.shape()[0];
    n.cols = t.shape()[1];
  } else {
    n.rows = t.size();
    n.cols = 1;
  }
  n.value.assign(t.data().begin(), t.data().end());
  check_finite("constant", n.value);
  return push(std::move(n));
}

Var Tape::constant(std::span<const double> values) {
  Node n = make_vector({values.begin(), values.end()});
  check_finite("constant", n.value);
  return push(std::move(n));
}

Var Tape::scalar(double v) { return constant(std::span<const double>(&v, 1)); }

Var Tape::param(Parameter& p) {
  check_live();
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return Var(this, it->second);
  Node n;
  const auto& shape = p.value.shape();
  n.rows = shape.front();
  n.cols = p.value.size() / n.rows;
  n.external = p.value.data().data();
  if (!p.frozen) {
    n.needs_grad = true;
    n.external_grad = p.grad.data().data();
  }
  Var v = push(std::move(n));
  param_ids_[&p] = v.id();
  return v;
}

double* Tape::grad_of(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.external_grad) return n.external_grad;
  if (n.grad.empty()) n.grad.assign(n.size(), 0.0);
  return n.grad.data();
}

void Tape::backward(Var loss) {
  if (consumed_) throw Error("backward on a consumed tape");
  if (!loss.valid() || loss.tape() != this) throw Error("loss was not recorded on this tape");
  if (nodes_[loss.id()].size() != 1) throw Error("backward requires a scalar loss");
  consumed_ = true;

  grad_of(loss.id())[0] += 1.0;
  for (std::int64_t id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad || n.op == Op::Leaf || n.grad.empty()) continue;
    const double* g = n.grad.data();
    const double* y = n.value.data();
    const std::size_t size = n.size();

    auto input = [&](std::uint32_t in) -> double* { return nodes_[in].needs_grad ? grad_of(in) : nullptr; };
    auto val = [&](std::uint32_t in) { return nodes_[in].data(); };

    switch (n.op) {
      case Op::Leaf: break;
      case Op::Affine:
      case Op::MatVec: {
        const Node& W = nodes_[n.a];
        const std::uint32_t xid = n.op == Op::Affine ? n.c : n.b;
        const std::size_t rows = W.rows, cols = W.cols;
        const double* Wv = W.data();
        const double* xv = val(xid);
        if (double* gW = input(n.a)) {
          for (std::size_t i = 0; i < rows; ++i) {
            const double gi = g[i];
            if (gi == 0.0) continue;
            double* gr = gW + i * cols;
            for (std::size_t j = 0; j < cols; ++j) gr[j] += gi * xv[j];
          }
        }
        if (n.op == Op::Affine)
          if (double* gb = input(n.b))
            for (std::size_t i = 0; i < rows; ++i) gb[i] += g[i];
        if (double* gx = input(xid)) {
          for (std::size_t i = 0; i < rows; ++i) {
            const double gi = g[i];
            if (gi == 0.0) continue;
            const double* wr = Wv + i * cols;
            for (std::size_t j = 0; j < cols; ++j) gx[j] += gi * wr[j];
          }
        }
        break;
      }
      case Op::Add:
        if (double* ga = input(n.a)) for (std::size_t i = 0; i < size; ++i) ga[i] += g[i];
        if (double* gb = input(n.b)) for (std::size_t i = 0; i < size; ++i) gb[i] += g[i];
        break;
      case Op::Sub:
        if (double* ga = input(n.a)) for (std::size_t i = 0; i < size; ++i) ga[i] += g[i];
        if (double* gb = input(n.b)) for (std::size_t i = 0; i < size; ++i) gb[i] -= g[i];
        break;
      case Op::Mul: {
        const double* xv = val(n.a);
        const double* yv = val(n.b);
        if (double* ga = input(n.a)) for (std::size_t i = 0; i < size; ++i) ga[i] += g[i] * yv[i];
        if (double* gb = input(n.b)) for (std::size_t i = 0; i < size; ++i) gb[i] += g[i] * xv[i];
        break;
      }
      case Op::Scale:
        if (double* ga = input(n.a)) for (std::size_t i = 0; i < size; ++i) ga[i] += n.k0 * g[i];
        break;
      case Op::AddConst:
        if (double* ga = input(n.a)) for (std::size_t i = 0; i < size; ++i) ga[i] += g[i];
        break;
      case Op::Sigmoid:
        if (double* ga = input(n.a)) for (std::size_t i = 0; i < size; ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      case Op::Tanh:
        if (double* ga = input(n.a)) for (std::size_t i = 0; i < size; ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
      case Op::Exp:
        if (double* ga = input(n.a)) for (std::size_t i = 0; i < size; ++i) ga[i] += g[i] * y[i];
        break;
      case Op::Log: {
        const double* xv = val(n.a);
        if (double* ga = input(n.a)) for (std::size_t i = 0; i < size; ++i) ga[i] += g[i] / xv[i];
        break;
      }
      case Op::Sin: {
        const double* xv = val(n.a);
        if (double* ga = input(n.a)) for (std::size_t i = 0; i < size; ++i) ga[i] += g[i] * std::cos(xv[i]);
        break;
      }
      case Op::Abs: {
        const double* xv = val(n.a);
        if (double* ga = input(n.a))
          for (std::size_t i = 0; i < size; ++i) ga[i] += g[i] * (xv[i] > 0.0 ? 1.0 : (xv[i] < 0.0 ? -1.0 : 0.0));
        break;
      }
      case Op::Clamp: {
        const double* xv = val(n.a);
        if (double* ga = input(n.a))
          for (std::size_t i = 0; i < size; ++i)
            if (xv[i] >= n.k0 && xv[i] <= n.k1) ga[i] += g[i];
        break;
      }
      case Op::Concat: {
        std::size_t offset = 0;
        for (std::uint32_t in : n.inputs) {
          const std::size_t len = nodes_[in].size();
          if (double* gi = input(in)) for (std::size_t i = 0; i < len; ++i) gi[i] += g[offset + i];
          offset += len;
        }
        break;
      }
      case Op::Slice:
        if (double* ga = input(n.a)) for (std::size_t i = 0; i < size; ++i) ga[n.index + i] += g[i];
        break;
      case Op::Sum:
        if (double* ga = input(n.a)) {
          const std::size_t len = nodes_[n.a].size();
          for (std::size_t i = 0; i < len; ++i) ga[i] += g[0];
        }
        break;
      case Op::Dot: {
        const std::size_t len = nodes_[n.a].size();
        const double* xv = val(n.a);
        const double* yv = val(n.b);
        if (double* ga = input(n.a)) for (std::size_t i = 0; i < len; ++i) ga[i] += g[0] * yv[i];
        if (double* gb = input(n.b)) for (std::size_t i = 0; i < len; ++i) gb[i] += g[0] * xv[i];
        break;
      }
      case Op::LogSoftmax:
        if (double* ga = input(n.a)) {
          double gsum = 0.0;
          for (std::size_t i = 0; i < size; ++i) gsum += g[i];
          for (std::size_t i = 0; i < size; ++i) ga[i] += g[i] - std::exp(y[i]) * gsum;
        }
        break;
      case Op::Softmax:
        if (double* ga = input(n.a)) {
          double gy = 0.0;
          for (std::size_t i = 0; i < size; ++i) gy += g[i] * y[i];
          for (std::size_t i = 0; i < size; ++i) ga[i] += y[i] * (g[i] - gy);
        }
        break;
      case Op::Pick:
        if (double* ga = input(n.a)) ga[n.index] += g[0];
        break;
      case Op::Maximum: {
        const double* xv = val(n.a);
        const double* yv = val(n.b);
        double* ga = input(n.a);
        double* gb = input(n.b);
        for (std::size_t i = 0; i < size; ++i) {
          if (xv[i] >= yv[i]) {
            if (ga) ga[i] += g[i];
          } else if (gb) {
            gb[i] += g[i];
          }
        }
        break;
      }
      case Op::ScaleBy: {
        const double s = val(n.a)[0];
        const double* xv = val(n.b);
        if (double* ga = input(n.a)) {
          double acc = 0.0;
          for (std::size_t i = 0; i < size; ++i) acc += g[i] * xv[i];
          ga[0] += acc;
        }
        if (double* gb = input(n.b)) for (std::size_t i = 0; i < size; ++i) gb[i] += s * g[i];
        break;
      }
      case Op::Row:
        if (double* ga = input(n.a)) {
          double* gr = ga + n.index * size;
          for (std::size_t i = 0; i < size; ++i) gr[i] += g[i];
        }
        break;
    }
  }
  nodes_.clear();
  nodes_.shrink_to_fit();
  param_ids_.clear();
}

Var affine(Var W, Var b, Var x) {
  Tape& tape = same_tape(W, x);
  same_tape(W, b);
  const Node& nW = node_of(W);
  const Node& nb = node_of(b);
  const Node& nx = node_of(x);
  if (nW.cols != nx.size() || nW.rows != nb.size())
    throw Error("affine: shape mismatch W" + vec_shape(nW) + " b" + vec_shape(nb) + " x" + vec_shape(nx));
  std::vector<double> out(nW.rows);
  const double* Wv = nW.data();
  const double* bv = nb.data();
  const double* xv = nx.data();
  for (std::size_t i = 0; i < nW.rows; ++i) {
    const double* wr = Wv + i * nW.cols;
    double acc = bv[i];
    for (std::size_t j = 0; j < nW.cols; ++j) acc += wr[j] * xv[j];
    out[i] = acc;
  }
  check_finite("affine", out);
  Node n = make_vector(std::move(out));
  n.op = Op::Affine;
  n.a = W.id();
  n.b = b.id();
  n.c = x.id();
  n.needs_grad = nW.needs_grad || nb.needs_grad || nx.needs_grad;
  return tape.push(std::move(n));
}

Var matvec(Var W, Var x) {
  Tape& tape = same_tape(W, x);
  const Node& nW = node_of(W);
  const Node& nx = node_of(x);
  if (nW.cols != nx.size()) throw Error("matvec: shape mismatch W" + vec_shape(nW) + " x" + vec_shape(nx));
  std::vector<double> out(nW.rows);
  const double* Wv = nW.data();
  const double* xv = nx.data();
  for (std::size_t i = 0; i < nW.rows; ++i) {
    const double* wr = Wv + i * nW.cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < nW.cols; ++j) acc += wr[j] * xv[j];
    out[i] = acc;
  }
  Node n = make_vector(std::move(out));
  n.op = Op::MatVec;
  n.a = W.id();
  n.b = x.id();
  n.needs_grad = nW.needs_grad || nx.needs_grad;
  return tape.push(std::move(n));
}

Var add(Var x, Var y) { return binary(x, y, Op::Add, "add", [](double a, double b) { return a + b; }); }
Var sub(Var x, Var y) { return binary(x, y, Op::Sub, "sub", [](double a, double b) { return a - b; }); }
Var mul(Var x, Var y) { return binary(x, y, Op::Mul, "mul", [](double a, double b) { return a * b; }); }
Var maximum(Var x, Var y) {
  return binary(x, y, Op::Maximum, "maximum", [](double a, double b) { return a >= b ? a : b; });
}

Var scale(Var x, double k) {
  return unary(x, Op::Scale, [k](double v) { return k * v; }, k);
}

Var add_const(Var x, double k) { return unary(x, Op::AddConst, [k](double v) { return v + k; }); }

Var sigmoid(Var x) {
  return unary(x, Op::Sigmoid, [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

Var tanh(Var x) { return unary(x, Op::Tanh, [](double v) { return std::tanh(v); }); }
Var exp(Var x) { return unary(x, Op::Exp, [](double v) { return std::exp(v); }); }
Var log(Var x) { return unary(x, Op::Log, [](double v) { return std::log(v); }); }
Var sin(Var x) { return unary(x, Op::Sin, [](double v) { return std::sin(v); }); }
Var abs(Var x) { return unary(x, Op::Abs, [](double v) { return std::abs(v); }); }

Var clamp(Var x, double lo, double hi) {
  return unary(x, Op::Clamp, [lo, hi](double v) { return std::clamp(v, lo, hi); }, lo, hi);
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw Error("concat of nothing");
  Tape& tape = *parts.front().tape();
  std::vector<double> out;
  Node n;
  for (const Var& p : parts) {
    if (p.tape() != &tape) throw Error("operands recorded on different tapes");
    const Node& np = node_of(p);
    out.insert(out.end(), np.data(), np.data() + np.size());
    n.inputs.push_back(p.id());
    n.needs_grad = n.needs_grad || np.needs_grad;
  }
  n.rows = out.size();
  n.cols = 1;
  n.value = std::move(out);
  n.op = Op::Concat;
  return tape.push(std::move(n));
}

Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }

Var slice(Var x, std::size_t offset, std::size_t length) {
  const Node& nx = node_of(x);
  if (offset + length > nx.size())
    throw Error("slice [" + std::to_string(offset) + ", +" + std::to_string(length) + ") out of range for " +
                vec_shape(nx));
  Node n = make_vector({nx.data() + offset, nx.data() + offset + length});
  n.op = Op::Slice;
  n.a = x.id();
  n.index = offset;
  n.needs_grad = nx.needs_grad;
  return x.tape()->push(std::move(n));
}

Var sum(Var x) {
  const Node& nx = node_of(x);
  double s = 0.0;
  for (std::size_t i = 0; i < nx.size(); ++i) s += nx.data()[i];
  Node n = make_vector({s});
  n.op = Op::Sum;
  n.a = x.id();
  n.needs_grad = nx.needs_grad;
  return x.tape()->push(std::move(n));
}

Var dot(Var x, Var y) {
  Tape& tape = same_tape(x, y);
  const Node& nx = node_of(x);
  const Node& ny = node_of(y);
  require_same_size("dot", nx, ny);
  double s = 0.0;
  for (std::size_t i = 0; i < nx.size(); ++i) s += nx.data()[i] * ny.data()[i];
  Node n = make_vector({s});
  n.op = Op::Dot;
  n.a = x.id();
  n.b = y.id();
  n.needs_grad = nx.needs_grad || ny.needs_grad;
  return tape.push(std::move(n));
}

std::vector<double> softmax_values(std::span<const double> logits) {
  if (logits.empty()) throw Error("softmax of an empty vector");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) z += out[i] = std::exp(logits[i] - mx);
  for (double& v : out) v /= z;
  return out;
}

Var log_softmax(Var x) {
  const Node& nx = node_of(x);
  if (nx.size() == 0) throw Error("log_softmax of an empty vector");
  const double* xv = nx.data();
  const double mx = *std::max_element(xv, xv + nx.size());
  double z = 0.0;
  for (std::size_t i = 0; i < nx.size(); ++i) z += std::exp(xv[i] - mx);
  const double lse = mx + std::log(z);
  std::vector<double> out(nx.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] - lse;
  Node n = make_vector(std::move(out));
  n.op = Op::LogSoftmax;
  n.a = x.id();
  n.needs_grad = nx.needs_grad;
  return x.tape()->push(std::move(n));
}

Var softmax(Var x) {
  const Node& nx = node_of(x);
  Node n = make_vector(softmax_values({nx.data(), nx.size()}));
  n.op = Op::Softmax;
  n.a = x.id();
  n.needs_grad = nx.needs_grad;
  return x.tape()->push(std::move(n));
}

Var pick(Var x, std::size_t i) {
  const Node& nx = node_of(x);
  if (i >= nx.size()) throw Error("pick index " + std::to_string(i) + " out of range for " + vec_shape(nx));
  Node n = make_vector({nx.data()[i]});
  n.op = Op::Pick;
  n.a = x.id();
  n.index = i;
  n.needs_grad = nx.needs_grad;
  return x.tape()->push(std::move(n));
}

Var scale_by(Var s, Var x) {
  Tape& tape = same_tape(s, x);
  const Node& ns = node_of(s);
  const Node& nx = node_of(x);
  if (ns.size() != 1) throw Error("scale_by: expected scalar, got " + vec_shape(ns));
  const double k = ns.data()[0];
  std::vector<double> out(nx.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = k * nx.data()[i];
  Node n = make_vector(std::move(out));
  n.op = Op::ScaleBy;
  n.a = s.id();
  n.b = x.id();
  n.needs_grad = ns.needs_grad || nx.needs_grad;
  return tape.push(std::move(n));
}

Var row(Var M, std::size_t i) {
  const Node& nM = node_of(M);
  if (i >= nM.rows) throw Error("row " + std::to_string(i) + " out of range for " + vec_shape(nM));
  const double* r = nM.data() + i * nM.cols;
  Node n = make_vector({r, r + nM.cols});
  n.op = Op::Row;
  n.a = M.id();
  n.index = i;
  n.needs_grad = nM.needs_grad;
  return M.tape()->push(std::move(n));
}

}  // namespace trl::nn
