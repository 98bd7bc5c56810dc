#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "trl/nn/tensor.hpp"

namespace trl::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;  // Adam first moment
  Tensor v;  // Adam second moment
  std::size_t fan_in = 1;
  bool frozen = false;
};

/// Named parameters with gradients and Adam moments. Insertion order is the
/// canonical order for serialization, checksums and initialization.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore& other);
  ParameterStore& operator=(const ParameterStore& other);
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;

  Parameter& add(const std::string& name, Shape shape, std::size_t fan_in = 0);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t size() const { return params_.size(); }
  std::size_t num_values() const;
  Parameter& at(std::size_t i) { return *params_[i]; }
  const Parameter& at(std::size_t i) const { return *params_[i]; }

  /// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) over every parameter, seeded.
  void init_uniform(std::uint64_t seed);
  void zero_grad();
  void zero_moments();

  /// Adds `g` into the gradient of `name`. Throws when the store is frozen.
  void accumulate_gradient(const std::string& name, std::span<const double> g);

  void set_frozen(bool frozen);
  bool frozen() const { return frozen_; }

  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t s) { step_ = s; }

  /// FNV-1a over names, shapes and value bits.
  std::uint64_t checksum() const;

  /// Copies values (not gradients or moments) from a store with identical
  /// names and shapes.
  void assign_values(const ParameterStore& from);

  double grad_norm() const;
  void scale_grad(double factor);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> index_;
  bool frozen_ = false;
  std::uint64_t step_ = 0;
};

}  // namespace trl::nn
