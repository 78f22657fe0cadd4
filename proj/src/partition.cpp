#include "edsgd/partition.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "edsgd/error.hpp"

namespace edsgd {

std::string_view to_string(Mode mode) { return mode == Mode::Links ? "links" : "nodes"; }

Mode parse_mode(std::string_view text) {
  if (text == "links")
    return Mode::Links;
  if (text == "nodes")
    return Mode::Nodes;
  throw ConfigError(fmt::format("unknown mode '{}' (expected links|nodes)", text));
}

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// Misra-Gries state: colour of every edge plus, per node, the edge holding
// each colour at that node.
class EdgeColoring {
public:
  explicit EdgeColoring(const Graph &g)
      : g_(g), colors_(g.max_degree() + 1), color_(g.edge_count(), kNone),
        at_(g.node_count() * colors_, kNone) {}

  void run() {
    for (EdgeId id = 0; id < g_.edge_count(); ++id)
      color_edge(id);
  }

  std::size_t color_count() const { return colors_; }
  std::size_t color(EdgeId id) const { return color_[id]; }

private:
  std::size_t &slot(NodeId v, std::size_t c) { return at_[v * colors_ + c]; }
  bool is_free(NodeId v, std::size_t c) const { return at_[v * colors_ + c] == kNone; }

  std::size_t first_free(NodeId v) const {
    for (std::size_t c = 0; c < colors_; ++c)
      if (is_free(v, c))
        return c;
    throw Error("edge colouring: no free colour (degree bound violated)");
  }

  EdgeId edge_between(NodeId a, NodeId b) const { return *g_.edge_id(a, b); }

  void set_color(EdgeId id, std::size_t c) {
    const Edge &e = g_.edge(id);
    color_[id] = c;
    slot(e.first, c) = id;
    slot(e.second, c) = id;
  }

  void clear_color(EdgeId id) {
    const std::size_t c = color_[id];
    if (c == kNone)
      return;
    const Edge &e = g_.edge(id);
    slot(e.first, c) = kNone;
    slot(e.second, c) = kNone;
    color_[id] = kNone;
  }

  // Maximal fan at u starting with v: each subsequent edge (u, f) is coloured
  // with a colour free at the previous fan vertex.
  std::vector<NodeId> maximal_fan(NodeId u, NodeId v) const {
    std::vector<NodeId> fan{v};
    std::vector<bool> in_fan(g_.node_count(), false);
    in_fan[v] = true;
    for (bool grew = true; grew;) {
      grew = false;
      for (NodeId x : g_.neighbors(u)) {
        if (in_fan[x])
          continue;
        const std::size_t c = color_[edge_between(u, x)];
        if (c != kNone && is_free(fan.back(), c)) {
          fan.push_back(x);
          in_fan[x] = true;
          grew = true;
          break;
        }
      }
    }
    return fan;
  }

  // Swap colours c and d along the alternating path that starts at u (where
  // c is free) with the d-coloured edge.
  void invert_path(NodeId u, std::size_t c, std::size_t d) {
    std::vector<EdgeId> path;
    NodeId cur = u;
    std::size_t want = d;
    while (!is_free(cur, want)) {
      EdgeId id = slot(cur, want);
      path.push_back(id);
      const Edge &e = g_.edge(id);
      cur = e.first == cur ? e.second : e.first;
      want = want == d ? c : d;
    }
    std::vector<std::size_t> flipped;
    flipped.reserve(path.size());
    for (EdgeId id : path) {
      flipped.push_back(color_[id] == c ? d : c);
      clear_color(id);
    }
    for (std::size_t k = 0; k < path.size(); ++k)
      set_color(path[k], flipped[k]);
  }

  bool prefix_is_fan(NodeId u, const std::vector<NodeId> &fan, std::size_t last) const {
    for (std::size_t j = 1; j <= last; ++j) {
      const std::size_t c = color_[edge_between(u, fan[j])];
      if (c == kNone || !is_free(fan[j - 1], c))
        return false;
    }
    return true;
  }

  void color_edge(EdgeId id) {
    const NodeId u = g_.edge(id).first;
    const NodeId v = g_.edge(id).second;
    std::vector<NodeId> fan = maximal_fan(u, v);
    const std::size_t c = first_free(u);
    const std::size_t d = first_free(fan.back());
    if (c != d)
      invert_path(u, c, d);

    std::size_t w = fan.size();
    for (std::size_t i = 0; i < fan.size(); ++i) {
      if (is_free(fan[i], d) && prefix_is_fan(u, fan, i)) {
        w = i;
        break;
      }
    }
    if (w == fan.size())
      throw Error("edge colouring: fan rotation target not found");

    // Rotate: each fan edge takes the colour of its successor, then (u, w)
    // takes d.
    std::vector<EdgeId> fan_edges;
    std::vector<std::size_t> shifted;
    for (std::size_t j = 0; j < w; ++j) {
      fan_edges.push_back(edge_between(u, fan[j]));
      shifted.push_back(color_[edge_between(u, fan[j + 1])]);
    }
    for (std::size_t j = 0; j <= w; ++j)
      clear_color(edge_between(u, fan[j]));
    for (std::size_t j = 0; j < w; ++j)
      set_color(fan_edges[j], shifted[j]);
    set_color(edge_between(u, fan[w]), d);
  }

  const Graph &g_;
  std::size_t colors_;
  std::vector<std::size_t> color_;
  std::vector<std::size_t> at_;
};

std::vector<std::vector<std::size_t>> group_by_color(const std::vector<std::size_t> &color,
                                                     std::size_t color_count) {
  std::vector<std::vector<std::size_t>> parts(color_count);
  for (std::size_t i = 0; i < color.size(); ++i)
    parts[color[i]].push_back(i);
  std::erase_if(parts, [](const auto &p) { return p.empty(); });
  return parts;
}

} // namespace

Partition matchings_by_edge_coloring(const Graph &g) {
  if (g.edge_count() == 0)
    throw GraphError("matching decomposition needs at least one edge");
  EdgeColoring coloring(g);
  coloring.run();
  std::vector<std::size_t> color(g.edge_count());
  for (EdgeId id = 0; id < g.edge_count(); ++id)
    color[id] = coloring.color(id);
  return Partition{Mode::Links, group_by_color(color, coloring.color_count())};
}

Partition subsets_by_vertex_coloring(const Graph &g) {
  const Graph aux = auxiliary_conflict_graph(g);
  const std::size_t n = g.node_count();
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId a, NodeId b) { return aux.degree(a) > aux.degree(b); });

  std::vector<std::size_t> color(n, kNone);
  std::vector<bool> taken;
  for (NodeId v : order) {
    taken.assign(aux.degree(v) + 1, false);
    for (NodeId w : aux.neighbors(v))
      if (color[w] != kNone && color[w] < taken.size())
        taken[color[w]] = true;
    color[v] = static_cast<std::size_t>(std::find(taken.begin(), taken.end(), false) - taken.begin());
  }
  const std::size_t colors = n == 0 ? 0 : *std::max_element(color.begin(), color.end()) + 1;
  return Partition{Mode::Nodes, group_by_color(color, colors)};
}

std::string ValidationReport::summary() const {
  if (valid())
    return "valid";
  std::string out;
  for (const auto &v : violations) {
    if (!out.empty())
      out += "; ";
    out += v;
  }
  return out;
}

ValidationReport validate_partition(const Graph &g, const Partition &p) {
  ValidationReport report;
  auto &bad = report.violations;
  const bool links = p.mode == Mode::Links;
  const std::size_t universe = links ? g.edge_count() : g.node_count();
  const char *what = links ? "edge" : "node";

  std::vector<std::size_t> owner(universe, kNone);
  for (std::size_t r = 0; r < p.parts.size(); ++r) {
    if (p.parts[r].empty())
      bad.push_back(fmt::format("part {} is empty", r));
    for (std::size_t id : p.parts[r]) {
      if (id >= universe) {
        bad.push_back(fmt::format("part {}: {} id {} out of range", r, what, id));
        continue;
      }
      if (owner[id] != kNone)
        bad.push_back(fmt::format("{} {} appears in parts {} and {}", what, id, owner[id], r));
      else
        owner[id] = r;
    }
  }
  for (std::size_t id = 0; id < universe; ++id)
    if (owner[id] == kNone)
      bad.push_back(fmt::format("{} {} not covered", what, id));

  for (std::size_t r = 0; r < p.parts.size(); ++r) {
    const auto &part = p.parts[r];
    for (std::size_t a = 0; a < part.size(); ++a) {
      for (std::size_t b = a + 1; b < part.size(); ++b) {
        if (part[a] >= universe || part[b] >= universe || part[a] == part[b])
          continue;
        if (links) {
          const Edge &x = g.edge(part[a]);
          const Edge &y = g.edge(part[b]);
          for (NodeId v : {x.first, x.second})
            if (v == y.first || v == y.second)
              bad.push_back(fmt::format("part {}: shared endpoint {} between edges ({},{}) and ({},{})",
                                        r, v, x.first, x.second, y.first, y.second));
        } else {
          const NodeId i = std::min(part[a], part[b]);
          const NodeId j = std::max(part[a], part[b]);
          if (g.adjacent(i, j))
            bad.push_back(fmt::format("part {}: adjacent pair ({},{})", r, i, j));
          for (NodeId k : g.neighbors(i))
            if (g.adjacent(k, j))
              bad.push_back(fmt::format("part {}: common neighbor {} for pair ({},{})", r, k, i, j));
        }
      }
    }
  }
  return report;
}

void to_json(nlohmann::json &j, const Partition &p) {
  j = nlohmann::json{{"mode", to_string(p.mode)}, {"parts", p.parts}};
}

void from_json(const nlohmann::json &j, Partition &p) {
  p.mode = parse_mode(j.at("mode").get<std::string>());
  p.parts = j.at("parts").get<std::vector<std::vector<std::size_t>>>();
}

} // namespace edsgd
