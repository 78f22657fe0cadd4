#include "edsgd/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "edsgd/error.hpp"
#include "edsgd/rng.hpp"

namespace edsgd {

Graph Graph::build(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges) {
  Graph g;
  g.n_ = n;
  g.edges_.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a >= n || b >= n)
      throw GraphError(fmt::format("edge ({},{}) has a node id outside [0,{})", a, b, n));
    if (a == b)
      throw GraphError(fmt::format("self-loop ({},{})", a, b));
    g.edges_.push_back(Edge{std::min(a, b), std::max(a, b)});
  }
  std::sort(g.edges_.begin(), g.edges_.end());
  auto dup = std::adjacent_find(g.edges_.begin(), g.edges_.end());
  if (dup != g.edges_.end())
    throw GraphError(fmt::format("duplicate edge ({},{})", dup->first, dup->second));

  g.adjacency_.assign(n * n, 0);
  g.neighbors_.assign(n, {});
  for (const Edge &e : g.edges_) {
    g.adjacency_[e.first * n + e.second] = 1;
    g.adjacency_[e.second * n + e.first] = 1;
    g.neighbors_[e.first].push_back(e.second);
    g.neighbors_[e.second].push_back(e.first);
  }
  for (auto &nb : g.neighbors_)
    std::sort(nb.begin(), nb.end());
  return g;
}

std::optional<EdgeId> Graph::edge_id(NodeId a, NodeId b) const {
  const Edge key{std::min(a, b), std::max(a, b)};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
  if (it == edges_.end() || *it != key)
    return std::nullopt;
  return static_cast<EdgeId>(it - edges_.begin());
}

std::size_t Graph::max_degree() const {
  std::size_t d = 0;
  for (const auto &nb : neighbors_)
    d = std::max(d, nb.size());
  return d;
}

Matrix Graph::adjacency() const {
  Matrix a(n_);
  for (const Edge &e : edges_)
    a(e.first, e.second) = a(e.second, e.first) = 1.0;
  return a;
}

Matrix laplacian(const Graph &g) {
  Matrix l(g.node_count());
  for (const Edge &e : g.edges()) {
    l(e.first, e.second) -= 1.0;
    l(e.second, e.first) -= 1.0;
    l(e.first, e.first) += 1.0;
    l(e.second, e.second) += 1.0;
  }
  return l;
}

Matrix laplacian_of_edges(const Graph &g, std::span<const EdgeId> edges) {
  Matrix l(g.node_count());
  for (EdgeId id : edges) {
    const Edge &e = g.edge(id);
    l(e.first, e.second) -= 1.0;
    l(e.second, e.first) -= 1.0;
    l(e.first, e.first) += 1.0;
    l(e.second, e.second) += 1.0;
  }
  return l;
}

Graph line_graph(const Graph &g) {
  if (g.edge_count() == 0)
    throw GraphError("line graph of an edgeless graph is undefined");
  // Edges sharing endpoint v form a clique in the line graph.
  std::vector<std::vector<EdgeId>> incident(g.node_count());
  for (EdgeId id = 0; id < g.edge_count(); ++id) {
    incident[g.edge(id).first].push_back(id);
    incident[g.edge(id).second].push_back(id);
  }
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (const auto &ids : incident)
    for (std::size_t a = 0; a < ids.size(); ++a)
      for (std::size_t b = a + 1; b < ids.size(); ++b)
        pairs.emplace_back(ids[a], ids[b]);
  // In a simple graph two distinct edges share at most one endpoint, so no
  // pair is emitted twice.
  return Graph::build(g.edge_count(), pairs);
}

Graph auxiliary_conflict_graph(const Graph &g) {
  const std::size_t n = g.node_count();
  std::vector<std::uint8_t> conflict(n * n, 0);
  for (const Edge &e : g.edges())
    conflict[e.first * n + e.second] = 1;
  for (NodeId hub = 0; hub < n; ++hub) {
    const auto &nb = g.neighbors(hub);
    for (std::size_t a = 0; a < nb.size(); ++a)
      for (std::size_t b = a + 1; b < nb.size(); ++b)
        conflict[nb[a] * n + nb[b]] = 1;
  }
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (conflict[i * n + j])
        pairs.emplace_back(i, j);
  return Graph::build(n, pairs);
}

bool is_connected(const Graph &g) {
  const std::size_t n = g.node_count();
  if (n == 0)
    return true;
  std::vector<bool> seen(n, false);
  std::queue<NodeId> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    NodeId v = frontier.front();
    frontier.pop();
    for (NodeId w : g.neighbors(v)) {
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        frontier.push(w);
      }
    }
  }
  return reached == n;
}

namespace {

std::optional<std::size_t> parse_index(const std::string &tok) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    return std::nullopt;
  return v;
}

} // namespace

ParsedEdgeList parse_edge_list(std::istream &in) {
  std::optional<std::size_t> header_n;
  std::vector<std::pair<std::string, std::string>> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#')
      continue;
    if (line.compare(first, 2, "n=") == 0) {
      std::string value = line.substr(first + 2);
      value.erase(value.find_last_not_of(" \t\r") + 1);
      header_n = parse_index(value);
      if (!header_n)
        throw GraphError(fmt::format("line {}: bad node-count header '{}'", line_no, line));
      continue;
    }
    std::istringstream fields(line);
    std::string a, b, extra;
    if (!(fields >> a >> b) || (fields >> extra))
      throw GraphError(fmt::format("line {}: expected two node labels, got '{}'", line_no, line));
    raw.emplace_back(std::move(a), std::move(b));
  }

  ParsedEdgeList out;
  bool numeric = std::all_of(raw.begin(), raw.end(), [](const auto &p) {
    return parse_index(p.first) && parse_index(p.second);
  });
  std::vector<std::pair<NodeId, NodeId>> pairs;
  std::size_t n = 0;
  if (numeric) {
    for (const auto &[a, b] : raw) {
      NodeId u = *parse_index(a), v = *parse_index(b);
      pairs.emplace_back(u, v);
      n = std::max({n, u + 1, v + 1});
    }
    if (header_n) {
      if (*header_n < n)
        throw GraphError(fmt::format("header n={} but edges reference node {}", *header_n, n - 1));
      n = *header_n;
    }
    for (std::size_t i = 0; i < n; ++i)
      out.labels.push_back(std::to_string(i));
  } else {
    std::unordered_map<std::string, NodeId> ids;
    auto intern = [&](const std::string &tok) {
      auto [it, inserted] = ids.try_emplace(tok, out.labels.size());
      if (inserted)
        out.labels.push_back(tok);
      return it->second;
    };
    for (const auto &[a, b] : raw) {
      NodeId u = intern(a);
      NodeId v = intern(b);
      pairs.emplace_back(u, v);
    }
    n = out.labels.size();
    if (header_n && *header_n != n)
      throw GraphError(fmt::format("header n={} but {} distinct labels found", *header_n, n));
    out.remapped = true;
  }
  out.graph = Graph::build(n, pairs);
  return out;
}

ParsedEdgeList read_edge_list(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw GraphError("cannot open edge list '" + path + "'");
  return parse_edge_list(in);
}

void write_edge_list(std::ostream &out, const Graph &g) {
  out << "n=" << g.node_count() << '\n';
  for (const Edge &e : g.edges())
    out << e.first << ' ' << e.second << '\n';
}

Graph path_graph(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i + 1 < n; ++i)
    e.emplace_back(i, i + 1);
  return Graph::build(n, e);
}

Graph cycle_graph(std::size_t n) {
  if (n < 3)
    throw GraphError("cycle needs at least 3 nodes");
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i < n; ++i)
    e.emplace_back(i, (i + 1) % n);
  return Graph::build(n, e);
}

Graph complete_graph(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      e.emplace_back(i, j);
  return Graph::build(n, e);
}

Graph star_graph(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 1; i < n; ++i)
    e.emplace_back(0, i);
  return Graph::build(n, e);
}

Graph kstar_graph(std::size_t k, std::size_t n) {
  if (k == 0 || n < k)
    throw GraphError(fmt::format("kstar needs 1 <= k <= n (k={}, n={})", k, n));
  std::vector<std::pair<NodeId, NodeId>> e;
  if (k == 2)
    e.emplace_back(0, 1);
  else if (k >= 3)
    for (NodeId h = 0; h < k; ++h)
      e.emplace_back(h, (h + 1) % k);
  for (NodeId leaf = k; leaf < n; ++leaf)
    e.emplace_back((leaf - k) % k, leaf);
  return Graph::build(n, e);
}

Graph random_connected_gnp(std::size_t n, double p, std::uint64_t seed) {
  if (p <= 0.0 || p > 1.0)
    throw GraphError(fmt::format("gnp edge probability {} outside (0,1]", p));
  constexpr std::uint64_t kMaxAttempts = 10000;
  for (std::uint64_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(seed, Stream::Topology, {attempt});
    std::vector<std::pair<NodeId, NodeId>> e;
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j = i + 1; j < n; ++j)
        if (rng.bernoulli(p))
          e.emplace_back(i, j);
    Graph g = Graph::build(n, e);
    if (is_connected(g))
      return g;
  }
  throw GraphError(fmt::format("no connected G({}, {}) sample after {} attempts", n, p, kMaxAttempts));
}

} // namespace edsgd
