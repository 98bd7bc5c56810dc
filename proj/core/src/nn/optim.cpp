#include "trl/nn/optim.hpp"

#include <cmath>

#include "trl/error.hpp"

namespace trl::nn {

void adam_step(ParameterStore& store, const AdamConfig& cfg) {
  if (store.frozen()) throw Error("adam_step on a frozen parameter store");
  store.set_step(store.step() + 1);
  const double t = static_cast<double>(store.step());
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store.at(i);
    if (p.frozen) continue;
    auto value = p.value.data();
    auto grad = p.grad.data();
    auto m = p.m.data();
    auto v = p.v.data();
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      value[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
      grad[j] = 0.0;
    }
  }
}

double clip_grad_norm(ParameterStore& store, double max_norm) {
  const double norm = store.grad_norm();
  if (max_norm > 0.0 && norm > max_norm) store.scale_grad(max_norm / norm);
  return norm;
}

}  // namespace trl::nn
