#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "edsgd/graph.hpp"

namespace edsgd {

/// Peer-to-peer link scheduling works on matchings; broadcast node
/// scheduling works on collision-free node subsets.
enum class Mode { Links, Nodes };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

/// Disjoint parts covering E (links: each part is a matching, holding edge
/// ids) or V (nodes: each part is a collision-free subset, holding node ids).
struct Partition {
  Mode mode = Mode::Nodes;
  std::vector<std::vector<std::size_t>> parts;

  std::size_t size() const { return parts.size(); }
  friend bool operator==(const Partition &, const Partition &) = default;
};

/// Misra-Gries edge colouring; each colour class is a matching. Uses at most
/// max_degree + 1 colours. Throws GraphError on an edgeless graph.
Partition matchings_by_edge_coloring(const Graph &g);

/// Greedy colouring of the auxiliary conflict graph, visiting nodes by
/// descending conflict degree (ties by id) and taking the smallest free
/// colour.
Partition subsets_by_vertex_coloring(const Graph &g);

struct ValidationReport {
  std::vector<std::string> violations;
  bool valid() const { return violations.empty(); }
  std::string summary() const;
};

/// Checks disjointness, coverage and the per-part constraint of the mode.
ValidationReport validate_partition(const Graph &g, const Partition &p);

void to_json(nlohmann::json &j, const Partition &p);
void from_json(const nlohmann::json &j, Partition &p);

} // namespace edsgd
