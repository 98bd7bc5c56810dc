#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "trl/error.hpp"
#include "trl/transport/emd.hpp"
#include "trl/transport/wmd.hpp"

using namespace trl;
using namespace trl::transport;

namespace {

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

std::vector<double> random_costs(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> c(n * m);
  for (auto& x : c) x = u(rng);
  return c;
}

void expect_feasible(const TransportPlan& plan, const std::vector<double>& a, const std::vector<double>& b, double tol) {
  const auto rs = plan.row_sums(), cs = plan.col_sums();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(rs[i], a[i], tol);
  for (std::size_t j = 0; j < b.size(); ++j) EXPECT_NEAR(cs[j], b[j], tol);
  for (double x : plan.mass) EXPECT_GE(x, -tol);
}

// Unit-norm embeddings: rows 4.. are the standard basis of R^dim.
core::EmbeddingTable basis_embeddings(std::size_t words, std::size_t dim) {
  core::EmbeddingTable e(core::kNumReserved + words, dim);
  for (std::size_t r = 1; r < e.rows(); ++r) e.row(r)[(r + dim - core::kNumReserved) % dim] = 1.0;
  e.normalize();
  return e;
}

constexpr core::TokenId u = core::kNumReserved, v = core::kNumReserved + 1, w = core::kNumReserved + 2;
using S = core::TokenSequence;

}  // namespace

TEST(Emd, IdenticalHistogramsCostNothing) {
  const std::vector<double> a{0.2, 0.5, 0.3};
  const CostMatrix c(3, 3, {0, 1, 2, 1, 0, 1, 2, 1, 0});
  const auto r = emd(a, a, c);
  EXPECT_NEAR(r.distance, 0.0, 1e-15);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r.plan.at(i, i), a[i], 1e-15);
}

TEST(Emd, ForcedRoute) {
  const auto r = emd(std::vector<double>{1, 0}, std::vector<double>{0, 1}, CostMatrix(2, 2, {0, 1, 1, 0}));
  EXPECT_DOUBLE_EQ(r.distance, 1.0);
  EXPECT_DOUBLE_EQ(r.plan.at(0, 1), 1.0);
}

TEST(Emd, MatchesAssignmentEnumeration) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 6;
    const auto c = random_costs(n, n, rng);
    const auto r = emd(uniform(n), uniform(n), CostMatrix(n, n, c));
    EXPECT_NEAR(r.distance, oracle::assignment_cost(c, n), 1e-9) << "n=" << n;
    expect_feasible(r.plan, uniform(n), uniform(n), 1e-7);
  }
}

TEST(Emd, IntegerMassesMatchExpandedAssignment) {
  // a = (2,1)/3 over 2 rows, b = (1,1,1)/3: duplicating row 0 turns this into
  // a 3x3 assignment problem with the same optimum.
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_costs(2, 3, rng);
    std::vector<double> expanded{c[0], c[1], c[2], c[0], c[1], c[2], c[3], c[4], c[5]};
    const auto r = emd(std::vector<double>{2.0 / 3, 1.0 / 3}, uniform(3), CostMatrix(2, 3, c));
    EXPECT_NEAR(r.distance, oracle::assignment_cost(expanded, 3), 1e-9);
  }
}

TEST(Emd, RectangularPlansAreFeasible) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> m(0.01, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 7, k = 1 + (trial / 7) % 9;
    std::vector<double> a(n), b(k);
    for (auto& x : a) x = m(rng);
    for (auto& x : b) x = m(rng);
    double sa = 0, sb = 0;
    for (double x : a) sa += x;
    for (double x : b) sb += x;
    for (auto& x : a) x /= sa;
    for (auto& x : b) x /= sb;
    const auto c = random_costs(n, k, rng);
    const auto r = emd(a, b, CostMatrix(n, k, c));
    expect_feasible(r.plan, a, b, 1e-7);
    double cost = 0.0;
    for (std::size_t i = 0; i < n * k; ++i) cost += r.plan.mass[i] * c[i];
    EXPECT_NEAR(cost, r.distance, 1e-12);
    // Never worse than the independent coupling a b^T.
    double indep = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) indep += a[i] * b[j] * c[i * k + j];
    EXPECT_LE(r.distance, indep + 1e-12);
  }
}

TEST(Emd, DegenerateTiesTerminate) {
  const std::size_t n = 6;
  const auto r = emd(uniform(n), uniform(n), CostMatrix(n, n, std::vector<double>(n * n, 1.0)));
  EXPECT_NEAR(r.distance, 1.0, 1e-12);
}

TEST(Emd, InvalidInputs) {
  const CostMatrix c(2, 2, {0, 1, 1, 0});
  try {
    emd(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.6}, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unbalanced"), std::string::npos);
  }
  EXPECT_THROW(emd(std::vector<double>{1.5, -0.5}, std::vector<double>{0.5, 0.5}, c), Error);
  EXPECT_THROW(emd(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}, c), Error);
  EXPECT_THROW(emd(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5}, CostMatrix(2, 2, {0, -1, 1, 0})), Error);
}

TEST(Sinkhorn, IdenticalHistograms) {
  const std::vector<double> a{0.25, 0.25, 0.5};
  const auto r = sinkhorn(a, a, CostMatrix(3, 3, {0, 1, 1, 1, 0, 1, 1, 1, 0}), {0.01});
  EXPECT_LT(r.cost, 1e-3);
  EXPECT_TRUE(r.converged);
}

TEST(Sinkhorn, ForcedRoute) {
  const auto r = sinkhorn(std::vector<double>{1, 0}, std::vector<double>{0, 1}, CostMatrix(2, 2, {0, 1, 1, 0}), {0.01});
  EXPECT_NEAR(r.cost, 1.0, 1e-2);
}

TEST(Sinkhorn, ApproachesEmdAsEpsilonShrinks) {
  std::mt19937_64 rng(24);
  const std::size_t n = 5;
  const auto c = random_costs(n, n, rng);
  const double exact = emd(uniform(n), uniform(n), CostMatrix(n, n, c)).distance;
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.1, 0.03, 0.01, 0.003, 0.001}) {
    const auto r = sinkhorn(uniform(n), uniform(n), CostMatrix(n, n, c), {eps});
    EXPECT_GE(r.cost, exact - 1e-9);
    EXPECT_LE(r.cost, prev + 1e-9) << eps;
    prev = r.cost;
    expect_feasible(r.plan, uniform(n), uniform(n), 1e-12);
  }
  EXPECT_LT(prev - exact, 1e-2);
}

TEST(Sinkhorn, NonConvergenceIsFlagged) {
  std::mt19937_64 rng(25);
  const auto c = random_costs(4, 4, rng);
  SinkhornOptions o;
  o.epsilon = 1e-3;
  o.max_iters = 3;
  o.epsilon_scaling = false;
  const auto r = sinkhorn(uniform(4), uniform(4), CostMatrix(4, 4, c), o);
  EXPECT_FALSE(r.converged);
  EXPECT_TRUE(std::isfinite(r.cost));
  EXPECT_THROW(sinkhorn(uniform(4), uniform(4), CostMatrix(4, 4, c), {0.0}), Error);
}

TEST(Wmd, BasicProperties) {
  const auto emb = basis_embeddings(3, 3);
  EXPECT_NEAR(wmd(S{u, v}, S{u, v}, emb), 0.0, 1e-15);
  EXPECT_NEAR(wmd(S{u, v}, S{v, u}, emb), 0.0, 1e-15);
  EXPECT_NEAR(wmd(S{u}, S{v}, emb), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(wmd(S{core::kStart, u, core::kEnd}, S{v}, emb), std::sqrt(2.0), 1e-12);
}

TEST(Wmd, SingleTokenEqualsEmbeddingDistance) {
  core::EmbeddingTable e(core::kNumReserved + 2, 2);
  e.row(u)[0] = 1.0;
  e.row(v)[0] = 0.6;
  e.row(v)[1] = 0.8;
  for (std::size_t r = 1; r < core::kNumReserved; ++r) e.row(r)[1] = 1.0;
  e.normalize();
  EXPECT_NEAR(wmd(S{u}, S{v}, e), core::euclidean_distance(e.row(u), e.row(v)), 1e-15);
  EXPECT_NEAR(wmd(S{u}, S{v}, e), std::sqrt(0.16 + 0.64), 1e-12);
}

TEST(Wmd, Errors) {
  const auto emb = basis_embeddings(3, 3);
  try {
    wmd(S{core::kStart, core::kEnd}, S{u}, emb);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("empty content"), std::string::npos);
  }
  core::EmbeddingTable raw(core::kNumReserved + 3, 3);
  EXPECT_THROW(wmd(S{u}, S{v}, raw), Error);
}

TEST(Nbow, NormalizedCountsSortedById) {
  const auto h = nbow(S{w, u, w, core::kEnd, u, w});
  EXPECT_EQ(h.support, (std::vector<std::size_t>{u, w}));
  EXPECT_NEAR(h.weights[0], 0.4, 1e-15);
  EXPECT_NEAR(h.weights[1], 0.6, 1e-15);
}

TEST(WmdReward, ClosedForms) {
  const auto emb = basis_embeddings(3, 3);
  EXPECT_NEAR(wmd_reward(S{u, v}, S{u, v}, emb), 0.7310585786300049, 1e-12);
  EXPECT_NEAR(wmd_reward(S{u}, S{v}, emb), oracle::sigmoid(std::exp(-std::sqrt(2.0))), 1e-12);
  EXPECT_NEAR(wmd_reward(S{u}, S{v}, emb), 0.5605, 1e-4);
  EXPECT_NEAR(wmd_reward(S{u}, S{v, v}, emb), oracle::sigmoid(std::exp(-1.0) * std::exp(-std::sqrt(2.0))), 1e-12);
  EXPECT_NEAR(wmd_reward(S{u}, S{v, v}, emb), 0.5223, 1e-4);
}

TEST(WmdReward, MultiReferenceAggregation) {
  const auto emb = basis_embeddings(3, 3);
  const std::vector<S> refs{S{u}, S{v}};
  const double same = wmd_reward(S{u}, S{u}, emb), other = wmd_reward(S{u}, S{v}, emb);
  EXPECT_NEAR(wmd_reward(S{u}, refs, emb), 0.5 * (same + other), 1e-15);
  WmdRewardOptions o;
  o.aggregation = core::Aggregation::max;
  EXPECT_NEAR(wmd_reward(S{u}, refs, emb, o), same, 1e-15);
  o.similarity = WmdSimilarity::inverse;
  EXPECT_NEAR(wmd_reward(S{u}, S{v}, emb, o), oracle::sigmoid(1.0 / (1.0 + std::sqrt(2.0))), 1e-12);
}
