#include "edsgd/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include <fmt/format.h>

#include "edsgd/error.hpp"

namespace edsgd {

double link_self_information(const Graph &g, NodeId i, NodeId j) {
  if (i >= g.node_count() || j >= g.node_count() || !g.adjacent(i, j))
    throw GraphError(fmt::format("({},{}) is not an edge", i, j));
  return std::log2(static_cast<double>(g.degree(i)) * static_cast<double>(g.degree(j)));
}

double node_link_sum(const Graph &g, NodeId i) {
  double s = 0.0;
  for (NodeId j : g.neighbors(i))
    s += link_self_information(g, i, j);
  return s;
}

double neighborhood_link_sum(const Graph &g, NodeId i) {
  double s = node_link_sum(g, i);
  for (NodeId j : g.neighbors(i))
    s += node_link_sum(g, j);
  return s;
}

namespace {

double entropy_from_sums(const Graph &g, NodeId i, std::span<const double> link_sum) {
  double total = link_sum[i];
  for (NodeId j : g.neighbors(i))
    total += link_sum[j];
  if (total <= 0.0)
    return 0.0;
  auto term = [total](double s) {
    if (s <= 0.0)
      return 0.0;
    const double p = s / total;
    return -p * std::log2(p);
  };
  double h = term(link_sum[i]);
  for (NodeId j : g.neighbors(i))
    h += term(link_sum[j]);
  return h;
}

std::vector<double> all_link_sums(const Graph &g) {
  std::vector<double> s(g.node_count());
  for (NodeId i = 0; i < g.node_count(); ++i)
    s[i] = node_link_sum(g, i);
  return s;
}

} // namespace

double node_entropy(const Graph &g, NodeId i) {
  if (i >= g.node_count())
    throw GraphError(fmt::format("node {} out of range", i));
  return entropy_from_sums(g, i, all_link_sums(g));
}

ImportanceVector node_importance(const Graph &g, double tie_tol) {
  const auto sums = all_link_sums(g);
  ImportanceVector v;
  v.target = ImportanceTarget::Nodes;
  v.scores.resize(g.node_count());
  for (NodeId i = 0; i < g.node_count(); ++i)
    v.scores[i] = entropy_from_sums(g, i, sums);
  v.ranks = rank_with_ties(v.scores, tie_tol);
  return v;
}

ImportanceVector link_importance(const Graph &g, double tie_tol) {
  ImportanceVector v = node_importance(line_graph(g), tie_tol);
  v.target = ImportanceTarget::Edges;
  return v;
}

ImportanceVector betweenness_centrality(const Graph &g, double tie_tol) {
  const std::size_t n = g.node_count();
  std::vector<double> bc(n, 0.0);
  std::vector<NodeId> stack;
  std::vector<std::vector<NodeId>> preds(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<long> dist(n);

  for (NodeId s = 0; s < n; ++s) {
    stack.clear();
    for (auto &p : preds)
      p.clear();
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    sigma[s] = 1.0;
    dist[s] = 0;
    std::queue<NodeId> q;
    q.push(s);
    while (!q.empty()) {
      NodeId v = q.front();
      q.pop();
      stack.push_back(v);
      for (NodeId w : g.neighbors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    while (!stack.empty()) {
      NodeId w = stack.back();
      stack.pop_back();
      for (NodeId v : preds[w])
        delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s)
        bc[w] += delta[w];
    }
  }
  // Every unordered pair was visited from both ends.
  for (double &b : bc)
    b *= 0.5;

  ImportanceVector v;
  v.target = ImportanceTarget::Nodes;
  v.scores = std::move(bc);
  v.ranks = rank_with_ties(v.scores, tie_tol);
  return v;
}

std::vector<std::size_t> rank_with_ties(std::span<const double> scores, double tol) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> ranks(scores.size());
  std::size_t rank = 0;
  double leader = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double s = scores[order[k]];
    if (k == 0 || leader - s > tol) {
      ++rank;
      leader = s;
    }
    ranks[order[k]] = rank;
  }
  return ranks;
}

std::string_view to_string(ImportanceMethod method) {
  switch (method) {
  case ImportanceMethod::Entropy:
    return "entropy";
  case ImportanceMethod::Betweenness:
    return "betweenness";
  case ImportanceMethod::Uniform:
    return "uniform";
  }
  return "?";
}

ImportanceMethod parse_importance_method(std::string_view text) {
  if (text == "entropy")
    return ImportanceMethod::Entropy;
  if (text == "betweenness")
    return ImportanceMethod::Betweenness;
  if (text == "uniform")
    return ImportanceMethod::Uniform;
  throw ConfigError(fmt::format("unknown importance method '{}' (expected entropy|betweenness|uniform)", text));
}

ImportanceVector compute_importance(const Graph &g, ImportanceMethod method,
                                    ImportanceTarget target) {
  if (method == ImportanceMethod::Uniform) {
    const std::size_t count = target == ImportanceTarget::Nodes ? g.node_count() : g.edge_count();
    ImportanceVector v{target, std::vector<double>(count, 1.0), std::vector<std::size_t>(count, 1)};
    return v;
  }
  if (target == ImportanceTarget::Nodes)
    return method == ImportanceMethod::Entropy ? node_importance(g) : betweenness_centrality(g);
  if (method == ImportanceMethod::Entropy)
    return link_importance(g);
  ImportanceVector v = betweenness_centrality(line_graph(g));
  v.target = ImportanceTarget::Edges;
  return v;
}

} // namespace edsgd
