#include "trl/nn/parameters.hpp"

#include <cmath>
#include <cstring>
#include <random>

#include "trl/error.hpp"

namespace trl::nn {

ParameterStore::ParameterStore(const ParameterStore& other)
    : index_(other.index_), frozen_(other.frozen_), step_(other.step_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Parameter>(*p));
}

ParameterStore& ParameterStore::operator=(const ParameterStore& other) {
  if (this != &other) {
    ParameterStore copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Parameter& ParameterStore::add(const std::string& name, Shape shape, std::size_t fan_in) {
  if (index_.count(name)) throw Error("duplicate parameter " + name);
  if (shape.empty() || shape_size(shape) == 0) throw Error("parameter " + name + " has empty shape");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->fan_in = fan_in ? fan_in : (shape.size() >= 2 ? shape.back() : shape.front());
  p->value = Tensor(shape);
  p->grad = Tensor(shape);
  p->m = Tensor(shape);
  p->v = Tensor(shape);
  p->frozen = frozen_;
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter " + name);
  return *params_[it->second];
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter " + name);
  return *params_[it->second];
}

std::size_t ParameterStore::num_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterStore::init_uniform(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& p : params_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p->fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : p->value.data()) v = dist(rng);
  }
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

void ParameterStore::zero_moments() {
  for (auto& p : params_) {
    p->m.fill(0.0);
    p->v.fill(0.0);
  }
  step_ = 0;
}

void ParameterStore::accumulate_gradient(const std::string& name, std::span<const double> g) {
  if (frozen_) throw Error("parameter store is frozen; cannot accumulate gradient into " + name);
  auto& p = get(name);
  if (g.size() != p.grad.size()) throw Error("gradient size mismatch for " + name);
  for (std::size_t i = 0; i < g.size(); ++i) p.grad[i] += g[i];
}

void ParameterStore::set_frozen(bool frozen) {
  frozen_ = frozen;
  for (auto& p : params_) p->frozen = frozen;
}

std::uint64_t ParameterStore::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& p : params_) {
    mix(p->name.data(), p->name.size());
    for (std::size_t d : p->value.shape()) {
      const auto d64 = static_cast<std::uint64_t>(d);
      mix(&d64, sizeof d64);
    }
    mix(p->value.data().data(), p->value.size() * sizeof(double));
  }
  return h;
}

void ParameterStore::assign_values(const ParameterStore& from) {
  if (from.size() != size()) throw Error("parameter stores differ in size");
  for (std::size_t i = 0; i < size(); ++i) {
    const auto& src = from.at(i);
    auto& dst = at(i);
    if (src.name != dst.name || src.value.shape() != dst.value.shape())
      throw Error("parameter mismatch: " + src.name + shape_string(src.value.shape()) + " vs " + dst.name +
                  shape_string(dst.value.shape()));
    dst.value = src.value;
  }
}

double ParameterStore::grad_norm() const {
  double s = 0.0;
  for (const auto& p : params_)
    for (double g : p->grad.data()) s += g * g;
  return std::sqrt(s);
}

void ParameterStore::scale_grad(double factor) {
  for (auto& p : params_)
    for (double& g : p->grad.data()) g *= factor;
}

}  // namespace trl::nn
