#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "edsgd/graph.hpp"

namespace edsgd {

enum class ImportanceTarget { Nodes, Edges };

/// Per-element importance in bits plus dense tie-aware ranks (1 = most
/// important).
struct ImportanceVector {
  ImportanceTarget target = ImportanceTarget::Nodes;
  std::vector<double> scores;
  std::vector<std::size_t> ranks;
};

inline constexpr double kDefaultTieTolerance = 1e-9;

/// SI(i,j) = log2(d_i d_j). Throws GraphError when (i,j) is not an edge.
double link_self_information(const Graph &g, NodeId i, NodeId j);

/// S(i): sum of SI over the links incident to i.
double node_link_sum(const Graph &g, NodeId i);

/// S+(i): sum of S(j) over the closed neighbourhood of i.
double neighborhood_link_sum(const Graph &g, NodeId i);

/// Shannon entropy (bits) of P(j) = S(j) / S+(i) over the closed
/// neighbourhood of i. Zero when S+(i) = 0.
double node_entropy(const Graph &g, NodeId i);

ImportanceVector node_importance(const Graph &g, double tie_tol = kDefaultTieTolerance);

/// Node importance of the line graph, indexed by edge id of `g`.
ImportanceVector link_importance(const Graph &g, double tie_tol = kDefaultTieTolerance);

/// Unnormalised shortest-path betweenness (Brandes), each unordered pair
/// counted once, endpoints excluded.
ImportanceVector betweenness_centrality(const Graph &g, double tie_tol = kDefaultTieTolerance);

/// Descending dense ranking. A score within `tol` of its group's leading
/// (largest) score shares that group's rank.
std::vector<std::size_t> rank_with_ties(std::span<const double> scores,
                                        double tol = kDefaultTieTolerance);

enum class ImportanceMethod { Entropy, Betweenness, Uniform };

std::string_view to_string(ImportanceMethod method);
ImportanceMethod parse_importance_method(std::string_view text);

/// Scores for the schedulable elements of `target`: nodes directly, edges
/// through the line graph. Uniform gives every element score 1.
ImportanceVector compute_importance(const Graph &g, ImportanceMethod method,
                                    ImportanceTarget target);

} // namespace edsgd
