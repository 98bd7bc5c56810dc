#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "trl/nn/parameters.hpp"
#include "trl/nn/tensor.hpp"

namespace trl::nn {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// tape is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  std::size_t size() const;
  std::span<const double> value() const;
  double scalar() const;
  double operator[](std::size_t i) const { return value()[i]; }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

enum class Op : std::uint8_t {
  Leaf, Affine, MatVec, Add, Sub, Mul, Scale, AddConst, Sigmoid, Tanh, Exp, Log, Sin, Abs, Clamp,
  Concat, Slice, Sum, Dot, LogSoftmax, Softmax, Pick, Maximum, ScaleBy, Row,
};

/// Records primitive operations for one forward pass and replays them in
/// reverse for a single backward pass.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(const Tensor& t);
  Var constant(std::span<const double> values);
  Var scalar(double v);
  /// Leaf referencing the parameter's storage. Parameters of frozen stores
  /// (or individually frozen ones) contribute no gradient.
  Var param(Parameter& p);

  /// Accumulates d(loss)/d(param) into every trainable parameter reached
  /// from `loss`, then consumes the tape.
  void backward(Var loss);

  bool consumed() const { return consumed_; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Used by the free-function primitives below.
  struct Node {
    Op op = Op::Leaf;
    std::uint32_t a = 0, b = 0, c = 0;
    std::vector<std::uint32_t> inputs;  // Concat
    std::size_t rows = 0, cols = 1;
    double k0 = 0.0, k1 = 0.0;
    std::size_t index = 0;
    std::vector<double> value;
    const double* external = nullptr;
    double* external_grad = nullptr;
    std::vector<double> grad;
    bool needs_grad = false;

    std::size_t size() const { return rows * cols; }
    const double* data() const { return external ? external : value.data(); }
  };

  const Node& node(std::uint32_t id) const { return nodes_[id]; }
  Var push(Node n);
  void check_live() const;

 private:
  double* grad_of(std::uint32_t id);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_ids_;
  bool consumed_ = false;
};

// Primitive set. Shapes are checked; violations raise trl::Error naming the
// offending shapes.
Var affine(Var W, Var b, Var x);
Var matvec(Var W, Var x);
Var add(Var x, Var y);
Var sub(Var x, Var y);
Var mul(Var x, Var y);
Var scale(Var x, double k);
Var add_const(Var x, double k);
Var sigmoid(Var x);
Var tanh(Var x);
Var exp(Var x);
Var log(Var x);
Var sin(Var x);
Var abs(Var x);
/// Clamps into [lo, hi]; gradient is zero where clamping is active.
Var clamp(Var x, double lo, double hi);
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
Var slice(Var x, std::size_t offset, std::size_t length);
Var sum(Var x);
Var dot(Var x, Var y);
Var log_softmax(Var x);
Var softmax(Var x);
Var pick(Var x, std::size_t i);
/// Elementwise maximum; ties route the gradient to the first argument.
Var maximum(Var x, Var y);
/// Scalar `s` times vector `x`.
Var scale_by(Var s, Var x);
/// Row `i` of matrix `M` as a vector.
Var row(Var M, std::size_t i);

inline Var operator+(Var x, Var y) { return add(x, y); }
inline Var operator-(Var x, Var y) { return sub(x, y); }
inline Var operator*(Var x, Var y) { return mul(x, y); }

/// Numerically stable softmax of plain values (max-shifted).
std::vector<double> softmax_values(std::span<const double> logits);

}  // namespace trl::nn
