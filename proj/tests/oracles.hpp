#pragma once

// Independent reference computations used only by tests. None of these call
// into the library code they are used to check.

#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <utility>
#include <vector>

#include "edsgd/graph.hpp"
#include "edsgd/rng.hpp"

namespace oracle {

using Adj = std::vector<std::vector<int>>;

inline Adj dense(std::size_t n, const std::vector<std::pair<int, int>> &edges) {
  Adj a(n, std::vector<int>(n, 0));
  for (auto [u, v] : edges)
    a[u][v] = a[v][u] = 1;
  return a;
}

inline Adj dense(const edsgd::Graph &g) {
  Adj a(g.node_count(), std::vector<int>(g.node_count(), 0));
  for (const auto &e : g.edges())
    a[e.first][e.second] = a[e.second][e.first] = 1;
  return a;
}

inline int deg(const Adj &a, std::size_t i) {
  int d = 0;
  for (int v : a[i])
    d += v;
  return d;
}

/// Entropy straight from the definitions: SI, S, S+, P, E.
inline double entropy(const Adj &a, std::size_t i) {
  const std::size_t n = a.size();
  auto S = [&](std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (a[j][k])
        s += std::log2(static_cast<double>(deg(a, j) * deg(a, k)));
    return s;
  };
  std::vector<std::size_t> closed{i};
  for (std::size_t j = 0; j < n; ++j)
    if (a[i][j])
      closed.push_back(j);
  double splus = 0.0;
  for (auto j : closed)
    splus += S(j);
  if (splus == 0.0)
    return 0.0;
  double h = 0.0;
  for (auto j : closed) {
    const double p = S(j) / splus;
    if (p > 0)
      h -= p * std::log2(p);
  }
  return h;
}

/// Betweenness by enumerating every pair and counting shortest paths through
/// each intermediate node (BFS distances + path counts).
inline std::vector<double> betweenness(const Adj &a) {
  const std::size_t n = a.size();
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
  std::vector<std::vector<double>> count(n, std::vector<double>(n, 0.0));
  for (std::size_t s = 0; s < n; ++s) {
    std::queue<std::size_t> q;
    dist[s][s] = 0;
    count[s][s] = 1;
    q.push(s);
    while (!q.empty()) {
      auto v = q.front();
      q.pop();
      for (std::size_t w = 0; w < n; ++w) {
        if (!a[v][w])
          continue;
        if (dist[s][w] < 0) {
          dist[s][w] = dist[s][v] + 1;
          q.push(w);
        }
        if (dist[s][w] == dist[s][v] + 1)
          count[s][w] += count[s][v];
      }
    }
  }
  std::vector<double> bc(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 1; t < n; ++t) {
      if (dist[s][t] < 0)
        continue;
      for (std::size_t v = 0; v < n; ++v) {
        if (v == s || v == t || dist[s][v] < 0 || dist[v][t] < 0)
          continue;
        if (dist[s][v] + dist[v][t] == dist[s][t])
          bc[v] += count[s][v] * count[v][t] / count[s][t];
      }
    }
  return bc;
}

/// Whether the edges admit a proper colouring with `colors` colours
/// (exhaustive backtracking).
inline bool edge_colorable(const std::vector<std::pair<int, int>> &edges, int colors) {
  std::vector<int> c(edges.size(), -1);
  std::function<bool(std::size_t)> go = [&](std::size_t k) {
    if (k == edges.size())
      return true;
    for (int col = 0; col < colors; ++col) {
      bool ok = true;
      for (std::size_t j = 0; j < k && ok; ++j) {
        const bool share = edges[j].first == edges[k].first || edges[j].first == edges[k].second ||
                           edges[j].second == edges[k].first || edges[j].second == edges[k].second;
        if (share && c[j] == col)
          ok = false;
      }
      if (ok) {
        c[k] = col;
        if (go(k + 1))
          return true;
      }
    }
    c[k] = -1;
    return false;
  };
  return go(0);
}

/// p = min(1, kappa b) with sum p = B, kappa by bisection.
inline std::vector<double> waterfill_bisect(const std::vector<double> &b, double budget) {
  auto total = [&](double kappa) {
    double s = 0.0;
    for (double v : b)
      s += std::min(1.0, kappa * v);
    return s;
  };
  double lo = 0.0, hi = 1.0;
  while (total(hi) < budget)
    hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < budget ? lo : hi) = mid;
  }
  std::vector<double> p;
  for (double v : b)
    p.push_back(std::min(1.0, hi * v));
  return p;
}

using Mat = std::vector<std::vector<double>>;

inline Mat zeros(std::size_t n) { return Mat(n, std::vector<double>(n, 0.0)); }

inline Mat matmul(const Mat &x, const Mat &y) {
  const std::size_t n = x.size();
  Mat z = zeros(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        z[i][j] += x[i][k] * y[k][j];
  return z;
}

/// Laplacian of Q A Q for the active node mask.
inline Mat qaq_laplacian(const Adj &a, const std::vector<int> &on) {
  const std::size_t n = a.size();
  Mat q = zeros(n), adj = zeros(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i][i] = on[i];
    for (std::size_t j = 0; j < n; ++j)
      adj[i][j] = a[i][j];
  }
  Mat ahat = matmul(matmul(q, adj), q);
  Mat l = zeros(n);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      row += ahat[i][j];
    for (std::size_t j = 0; j < n; ++j)
      l[i][j] = (i == j ? row : 0.0) - ahat[i][j];
  }
  return l;
}

/// Random connected graph: random spanning tree plus extra edges.
inline edsgd::Graph random_connected(std::size_t n, double extra, edsgd::Rng &rng) {
  std::vector<std::pair<edsgd::NodeId, edsgd::NodeId>> e;
  std::vector<std::vector<bool>> has(n, std::vector<bool>(n, false));
  for (std::size_t v = 1; v < n; ++v) {
    const auto u = static_cast<std::size_t>(rng.uniform() * static_cast<double>(v));
    e.emplace_back(u, v);
    has[u][v] = has[v][u] = true;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!has[i][j] && rng.bernoulli(extra))
        e.emplace_back(i, j);
  return edsgd::Graph::build(n, e);
}

} // namespace oracle
