#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace trl::transport {

inline constexpr std::size_t kMaxSupport = 128;

struct Histogram {
  std::vector<double> weights;
  std::vector<std::size_t> support;  // embedding rows, distinct
};

struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  CostMatrix() = default;
  CostMatrix(std::size_t r, std::size_t c, std::vector<double> values);
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> mass;  // row-major
  double cost = 0.0;

  double at(std::size_t i, std::size_t j) const { return mass[i * cols + j]; }
  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
};

struct EmdResult {
  double distance = 0.0;
  TransportPlan plan;
  std::size_t pivots = 0;
};

/// Exact transportation LP by the network simplex: north-west corner start,
/// Bland's rule (first improving cell enters, lowest-index blocking cell
/// leaves). Marginals must agree within 1e-6.
EmdResult emd(std::span<const double> a, std::span<const double> b, const CostMatrix& cost);
EmdResult emd(const Histogram& a, const Histogram& b, const CostMatrix& cost);

struct SinkhornOptions {
  double epsilon = 1e-2;
  std::size_t max_iters = 200000;
  double tolerance = 1e-9;  // L1 marginal violation
  // Anneal epsilon geometrically from the cost scale down to `epsilon`.
  bool epsilon_scaling = true;
};

struct SinkhornResult {
  double cost = 0.0;  // <plan, C> of the rounded, exactly feasible plan
  TransportPlan plan;
  std::size_t iterations = 0;
  bool converged = false;
  double marginal_error = 0.0;  // before rounding
};

/// Log-domain Sinkhorn iterations followed by a rounding step onto the
/// transport polytope, so the reported cost never undercuts the optimum.
SinkhornResult sinkhorn(std::span<const double> a, std::span<const double> b, const CostMatrix& cost,
                        const SinkhornOptions& opts = {});

}  // namespace trl::transport
