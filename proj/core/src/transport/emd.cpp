#include "trl/transport/emd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "trl/error.hpp"

namespace trl::transport {

CostMatrix::CostMatrix(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) throw Error("cost matrix: expected " + std::to_string(r * c) + " entries, got " + std::to_string(data.size()));
}

std::vector<double> TransportPlan::row_sums() const {
  std::vector<double> s(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) s[i] += at(i, j);
  return s;
}

std::vector<double> TransportPlan::col_sums() const {
  std::vector<double> s(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) s[j] += at(i, j);
  return s;
}

namespace {

void validate(std::span<const double> a, std::span<const double> b, const CostMatrix& cost) {
  if (a.empty() || b.empty()) throw Error("transport: empty histogram");
  if (a.size() > kMaxSupport || b.size() > kMaxSupport)
    throw Error("transport: support larger than " + std::to_string(kMaxSupport));
  if (cost.rows != a.size() || cost.cols != b.size())
    throw Error("transport: cost is " + std::to_string(cost.rows) + "x" + std::to_string(cost.cols) + " but histograms are " +
                std::to_string(a.size()) + " and " + std::to_string(b.size()));
  for (double w : a)
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("transport: negative or non-finite weight");
  for (double w : b)
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("transport: negative or non-finite weight");
  for (double c : cost.data)
    if (!(c >= 0.0) || !std::isfinite(c)) throw Error("transport: cost entries must be finite and >= 0");
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  if (std::abs(sa - sb) > 1e-6) throw Error("unbalanced histograms: masses " + std::to_string(sa) + " and " + std::to_string(sb));
  if (sa <= 0.0) throw Error("transport: zero total mass");
}

double plan_cost(const TransportPlan& p, const CostMatrix& c) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.mass.size(); ++k) s += p.mass[k] * c.data[k];
  return s;
}

}  // namespace

EmdResult emd(std::span<const double> a, std::span<const double> b_in, const CostMatrix& cost) {
  validate(a, b_in, cost);
  const std::size_t m = a.size(), n = b_in.size();
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b_in.begin(), b_in.end(), 0.0);
  std::vector<double> b(b_in.begin(), b_in.end());
  for (double& w : b) w *= sa / sb;

  std::vector<double> flow(m * n, 0.0);
  std::vector<char> basic(m * n, 0);
  std::vector<std::size_t> basis;
  basis.reserve(m + n - 1);

  // North-west corner: each step exhausts a row or a column, giving a
  // spanning tree of m + n - 1 cells.
  {
    std::size_t i = 0, j = 0;
    double ra = a[0], rb = b[0];
    while (true) {
      const double x = std::min(ra, rb);
      flow[i * n + j] = x;
      basic[i * n + j] = 1;
      basis.push_back(i * n + j);
      if (i == m - 1 && j == n - 1) break;
      if ((ra <= rb && i < m - 1) || j == n - 1) {
        rb = std::max(0.0, rb - x);
        ra = a[++i];
      } else {
        ra = std::max(0.0, ra - x);
        rb = b[++j];
      }
    }
  }

  double max_cost = 0.0;
  for (double c : cost.data) max_cost = std::max(max_cost, c);
  const double tol = 1e-12 * std::max(1.0, max_cost);

  const std::size_t nodes = m + n;
  std::vector<double> pot(nodes);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(nodes);  // (neighbor, cell)
  std::vector<std::size_t> parent_node(nodes), parent_cell(nodes), queue;
  std::vector<char> seen(nodes);
  const std::size_t max_pivots = 1000 + 50 * m * n;
  std::size_t pivots = 0;

  for (;; ++pivots) {
    if (pivots > max_pivots) throw Error("emd: pivot limit exceeded");
    for (auto& l : adj) l.clear();
    for (std::size_t cell : basis) {
      const std::size_t r = cell / n, c = cell % n;
      adj[r].emplace_back(m + c, cell);
      adj[m + c].emplace_back(r, cell);
    }
    // Potentials u (rows) and v (cols) with u_0 = 0 and u_r + v_c = C_rc on the tree.
    std::fill(seen.begin(), seen.end(), 0);
    queue.assign(1, 0);
    pot[0] = 0.0;
    seen[0] = 1;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const std::size_t u = queue[q];
      for (auto [w, cell] : adj[u]) {
        if (seen[w]) continue;
        seen[w] = 1;
        pot[w] = cost.data[cell] - pot[u];
        queue.push_back(w);
      }
    }
    if (queue.size() != nodes) throw Error("emd: basis is not a spanning tree");

    std::size_t entering = m * n;
    for (std::size_t cell = 0; cell < m * n; ++cell) {
      if (basic[cell]) continue;
      const double rc = cost.data[cell] - pot[cell / n] - pot[m + cell % n];
      if (rc < -tol) {
        entering = cell;
        break;
      }
    }
    if (entering == m * n) break;

    // Tree path from row node i to column node m + j.
    const std::size_t src = entering / n, dst = m + entering % n;
    std::fill(seen.begin(), seen.end(), 0);
    queue.assign(1, src);
    seen[src] = 1;
    for (std::size_t q = 0; q < queue.size() && !seen[dst]; ++q) {
      const std::size_t u = queue[q];
      for (auto [w, cell] : adj[u]) {
        if (seen[w]) continue;
        seen[w] = 1;
        parent_node[w] = u;
        parent_cell[w] = cell;
        queue.push_back(w);
      }
    }
    // Walking back from the column end, cells alternate -theta, +theta.
    std::vector<std::size_t> cycle;
    for (std::size_t w = dst; w != src; w = parent_node[w]) cycle.push_back(parent_cell[w]);
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = m * n;
    for (std::size_t k = 0; k < cycle.size(); k += 2) {
      const double f = flow[cycle[k]];
      if (f < theta || (f == theta && cycle[k] < leaving)) {
        theta = f;
        leaving = cycle[k];
      }
    }
    flow[entering] = theta;
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      double& f = flow[cycle[k]];
      f = k % 2 == 0 ? std::max(0.0, f - theta) : f + theta;
    }
    flow[leaving] = 0.0;
    basic[leaving] = 0;
    basic[entering] = 1;
    *std::find(basis.begin(), basis.end(), leaving) = entering;
  }

  EmdResult res;
  res.pivots = pivots;
  res.plan.rows = m;
  res.plan.cols = n;
  res.plan.mass = std::move(flow);
  res.plan.cost = plan_cost(res.plan, cost);
  res.distance = res.plan.cost;
  return res;
}

EmdResult emd(const Histogram& a, const Histogram& b, const CostMatrix& cost) { return emd(a.weights, b.weights, cost); }

namespace {

double log_sum_exp(const std::vector<double>& x) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : x) s += std::exp(v - mx);
  return mx + std::log(s);
}

}  // namespace

SinkhornResult sinkhorn(std::span<const double> a, std::span<const double> b, const CostMatrix& cost, const SinkhornOptions& opts) {
  if (!(opts.epsilon > 0.0)) throw Error("sinkhorn: epsilon must be positive");
  validate(a, b, cost);
  const std::size_t m = a.size(), n = b.size();
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> log_a(m), log_b(n);
  for (std::size_t i = 0; i < m; ++i) log_a[i] = a[i] > 0.0 ? std::log(a[i]) : ninf;
  for (std::size_t j = 0; j < n; ++j) log_b[j] = b[j] > 0.0 ? std::log(b[j]) : ninf;

  double max_cost = 0.0;
  for (double c : cost.data) max_cost = std::max(max_cost, c);
  std::vector<double> schedule;
  if (opts.epsilon_scaling)
    for (double e = std::max(max_cost, opts.epsilon); e > opts.epsilon; e *= 0.5) schedule.push_back(e);
  schedule.push_back(opts.epsilon);

  std::vector<double> f(m, 0.0), g(n, 0.0), buf;
  auto plan_entry = [&](std::size_t i, std::size_t j, double eps) {
    if (a[i] == 0.0 || b[j] == 0.0) return 0.0;
    return std::exp((f[i] + g[j] - cost.at(i, j)) / eps);
  };
  auto row_error = [&](double eps) {
    double err = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < n; ++j) r += plan_entry(i, j, eps);
      err += std::abs(r - a[i]);
    }
    return err;
  };

  SinkhornResult res;
  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    const double eps = schedule[stage];
    const bool last = stage + 1 == schedule.size();
    const double tol = last ? opts.tolerance : std::max(opts.tolerance, 1e-6);
    bool stage_done = false;
    while (res.iterations < opts.max_iters) {
      ++res.iterations;
      for (std::size_t i = 0; i < m; ++i) {
        if (a[i] == 0.0) continue;
        buf.assign(n, ninf);
        for (std::size_t j = 0; j < n; ++j)
          if (b[j] > 0.0) buf[j] = (g[j] - cost.at(i, j)) / eps;
        f[i] = eps * (log_a[i] - log_sum_exp(buf));
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (b[j] == 0.0) continue;
        buf.assign(m, ninf);
        for (std::size_t i = 0; i < m; ++i)
          if (a[i] > 0.0) buf[i] = (f[i] - cost.at(i, j)) / eps;
        g[j] = eps * (log_b[j] - log_sum_exp(buf));
      }
      if ((res.marginal_error = row_error(eps)) < tol) {
        stage_done = true;
        break;
      }
    }
    if (last) res.converged = stage_done;
    if (!stage_done) {
      res.marginal_error = row_error(schedule.back());
      break;
    }
  }

  const double eps = schedule.back();
  std::vector<double> p(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] = plan_entry(i, j, eps);

  // Rounding onto the polytope: scale rows down to a, columns down to b, then
  // spread the remaining deficit as a rank-one correction.
  for (std::size_t i = 0; i < m; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) r += p[i * n + j];
    if (r > a[i] && r > 0.0)
      for (std::size_t j = 0; j < n; ++j) p[i * n + j] *= a[i] / r;
  }
  for (std::size_t j = 0; j < n; ++j) {
    double c = 0.0;
    for (std::size_t i = 0; i < m; ++i) c += p[i * n + j];
    if (c > b[j] && c > 0.0)
      for (std::size_t i = 0; i < m; ++i) p[i * n + j] *= b[j] / c;
  }
  std::vector<double> da(m), db(n);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) r += p[i * n + j];
    da[i] = std::max(0.0, a[i] - r);
    total += da[i];
  }
  for (std::size_t j = 0; j < n; ++j) {
    double c = 0.0;
    for (std::size_t i = 0; i < m; ++i) c += p[i * n + j];
    db[j] = std::max(0.0, b[j] - c);
  }
  if (total > 0.0)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) p[i * n + j] += da[i] * db[j] / total;

  res.plan.rows = m;
  res.plan.cols = n;
  res.plan.mass = std::move(p);
  res.plan.cost = plan_cost(res.plan, cost);
  res.cost = res.plan.cost;
  return res;
}

}  // namespace trl::transport
