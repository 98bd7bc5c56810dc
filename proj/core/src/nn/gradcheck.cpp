#include "trl/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "trl/error.hpp"

namespace trl::nn {

namespace {

struct Coord {
  Parameter* p;
  std::size_t i;
};

double evaluate(const LossBuilder& loss) {
  Tape tape;
  return loss(tape).scalar();
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); }

}  // namespace

GradCheckResult finite_difference_check(const LossBuilder& loss, ParameterStore& store, const GradCheckOptions& opts) {
  if (opts.epsilon < 1e-7 || opts.epsilon > 1e-3) throw Error("finite_difference_check: epsilon must lie in [1e-7, 1e-3]");

  std::vector<Coord> coords;
  for (std::size_t k = 0; k < store.size(); ++k) {
    auto& p = store.at(k);
    if (p.frozen) continue;
    for (std::size_t i = 0; i < p.value.size(); ++i) coords.push_back({&p, i});
  }

  store.zero_grad();
  {
    Tape tape;
    Var l = loss(tape);
    tape.backward(l);
  }
  std::vector<double> analytic(coords.size());
  for (std::size_t c = 0; c < coords.size(); ++c) analytic[c] = coords[c].p->grad[coords[c].i];
  store.zero_grad();

  GradCheckResult result;
  const double eps = opts.epsilon;
  if (opts.probes == 0) {
    for (std::size_t c = 0; c < coords.size(); ++c) {
      double& x = coords[c].p->value[coords[c].i];
      const double saved = x;
      x = saved + eps;
      const double up = evaluate(loss);
      x = saved - eps;
      const double down = evaluate(loss);
      x = saved;
      const double numeric = (up - down) / (2.0 * eps);
      result.max_relative_error = std::max(result.max_relative_error, relative_error(analytic[c], numeric));
      ++result.checks;
    }
    return result;
  }

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> saved(coords.size());
  for (std::size_t c = 0; c < coords.size(); ++c) saved[c] = coords[c].p->value[coords[c].i];
  std::vector<double> dir(coords.size());
  for (std::size_t probe = 0; probe < opts.probes; ++probe) {
    double norm = 0.0;
    for (double& d : dir) {
      d = gauss(rng);
      norm += d * d;
    }
    norm = std::sqrt(norm);
    double directional = 0.0;
    for (std::size_t c = 0; c < coords.size(); ++c) directional += analytic[c] * (dir[c] /= norm);

    for (std::size_t c = 0; c < coords.size(); ++c) coords[c].p->value[coords[c].i] = saved[c] + eps * dir[c];
    const double up = evaluate(loss);
    for (std::size_t c = 0; c < coords.size(); ++c) coords[c].p->value[coords[c].i] = saved[c] - eps * dir[c];
    const double down = evaluate(loss);
    for (std::size_t c = 0; c < coords.size(); ++c) coords[c].p->value[coords[c].i] = saved[c];

    const double numeric = (up - down) / (2.0 * eps);
    result.max_relative_error = std::max(result.max_relative_error, relative_error(directional, numeric));
    ++result.checks;
  }
  return result;
}

}  // namespace trl::nn
