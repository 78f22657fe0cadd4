#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edsgd/matrix.hpp"

namespace edsgd {

using NodeId = std::size_t;
using EdgeId = std::size_t;

/// Unordered node pair, always stored with first < second.
struct Edge {
  NodeId first = 0;
  NodeId second = 0;

  friend auto operator<=>(const Edge &, const Edge &) = default;
};

/// Undirected simple graph on nodes 0..n-1. Immutable after construction.
///
/// Edges are kept sorted lexicographically, which makes the edge id of a pair
/// its position in `edges()`; that ordering is the EdgeIndex used by the line
/// graph and the matching decomposition.
class Graph {
public:
  Graph() = default;

  /// Validates and normalises the pair list. Throws GraphError naming the
  /// offending pair on out-of-range ids, self-loops or duplicates.
  static Graph build(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges);
  static Graph build(std::size_t n, std::initializer_list<std::pair<NodeId, NodeId>> edges) {
    return build(n, std::span<const std::pair<NodeId, NodeId>>(edges.begin(), edges.size()));
  }

  std::size_t node_count() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge> &edges() const { return edges_; }
  const Edge &edge(EdgeId id) const { return edges_.at(id); }

  /// Id of the (normalised) pair, or nullopt when it is not an edge.
  std::optional<EdgeId> edge_id(NodeId a, NodeId b) const;

  bool adjacent(NodeId a, NodeId b) const { return adjacency_[a * n_ + b] != 0; }
  std::size_t degree(NodeId v) const { return neighbors_[v].size(); }
  std::size_t max_degree() const;
  /// Sorted ascending.
  const std::vector<NodeId> &neighbors(NodeId v) const { return neighbors_[v]; }

  /// Dense 0/1 adjacency.
  Matrix adjacency() const;

  friend bool operator==(const Graph &a, const Graph &b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::uint8_t> adjacency_;
  std::vector<std::vector<NodeId>> neighbors_;
};

/// L = D - A.
Matrix laplacian(const Graph &g);
/// Laplacian of the subgraph formed by the listed edge ids (same node set).
Matrix laplacian_of_edges(const Graph &g, std::span<const EdgeId> edges);

/// Line graph: node e of the result is edge e of `g`; two nodes are adjacent
/// iff the original edges share an endpoint. Throws GraphError on an empty
/// edge set.
Graph line_graph(const Graph &g);

/// E plus every pair of distinct nodes with at least one common neighbour.
Graph auxiliary_conflict_graph(const Graph &g);

bool is_connected(const Graph &g);

/// Edge-list text: "a b" per line, '#' comments, optional "n=<int>" header.
/// Non-integer labels are remapped to dense ids in order of first appearance.
struct ParsedEdgeList {
  Graph graph;
  /// labels[id] is the token that was mapped to id.
  std::vector<std::string> labels;
  bool remapped = false;
};

ParsedEdgeList parse_edge_list(std::istream &in);
ParsedEdgeList read_edge_list(const std::string &path);
void write_edge_list(std::ostream &out, const Graph &g);

// Topology generators used by experiments.
Graph path_graph(std::size_t n);
Graph cycle_graph(std::size_t n);
Graph complete_graph(std::size_t n);
Graph star_graph(std::size_t n);
/// k hubs joined in a ring (a single edge for k = 2), the remaining n - k
/// nodes attached as leaves round-robin, so hub h gets ceil or floor of
/// (n - k) / k leaves.
Graph kstar_graph(std::size_t k, std::size_t n);
/// Erdos-Renyi G(n, p) conditioned on connectivity by resampling.
Graph random_connected_gnp(std::size_t n, double p, std::uint64_t seed);

} // namespace edsgd
