#include "edsgd/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "edsgd/error.hpp"
#include "edsgd/rng.hpp"

namespace edsgd {

ActivationMass node_activation_mass(std::span<const double> scores) {
  ActivationMass out;
  double total = 0.0;
  for (double s : scores) {
    if (!(s >= 0.0) || !std::isfinite(s))
      throw ScheduleError(fmt::format("importance score {} is negative or not finite", s));
    total += s;
  }
  out.mass.resize(scores.size());
  if (total <= 0.0) {
    out.uniform_fallback = true;
    std::fill(out.mass.begin(), out.mass.end(), 1.0 / static_cast<double>(scores.size()));
    return out;
  }
  for (std::size_t i = 0; i < scores.size(); ++i)
    out.mass[i] = scores[i] / total;
  return out;
}

std::vector<double> subset_mass(std::span<const double> mass, const Partition &parts) {
  std::vector<double> out(parts.size(), 0.0);
  for (std::size_t r = 0; r < parts.size(); ++r)
    for (std::size_t id : parts.parts[r]) {
      if (id >= mass.size())
        throw ScheduleError(fmt::format("part {} references element {} without mass", r, id));
      out[r] += mass[id];
    }
  return out;
}

BudgetedProbabilities budgeted_probabilities(std::span<const double> part_mass, double budget) {
  const std::size_t m = part_mass.size();
  if (!(budget > 0.0))
    throw ScheduleError(fmt::format("budget must be positive (got {})", budget));
  if (budget > static_cast<double>(m) * (1.0 + 1e-12))
    throw ScheduleError(fmt::format("budget {} infeasible: only {} parts", budget, m));
  budget = std::min(budget, static_cast<double>(m));

  std::vector<std::size_t> positive;
  for (std::size_t j = 0; j < m; ++j) {
    if (!(part_mass[j] >= 0.0) || !std::isfinite(part_mass[j]))
      throw ScheduleError(fmt::format("part mass {} is negative or not finite", part_mass[j]));
    if (part_mass[j] > 0.0)
      positive.push_back(j);
  }

  BudgetedProbabilities out;
  out.probs.assign(m, 0.0);

  if (budget >= static_cast<double>(positive.size())) {
    double smallest = 0.0;
    for (std::size_t j : positive) {
      out.probs[j] = 1.0;
      smallest = smallest == 0.0 ? part_mass[j] : std::min(smallest, part_mass[j]);
    }
    const std::size_t zero_parts = m - positive.size();
    if (zero_parts > 0) {
      const double share = (budget - static_cast<double>(positive.size())) / static_cast<double>(zero_parts);
      for (std::size_t j = 0; j < m; ++j)
        if (part_mass[j] == 0.0)
          out.probs[j] = share;
    }
    out.scale = smallest > 0.0 ? 1.0 / smallest : 0.0;
    return out;
  }

  std::vector<std::size_t> order = positive;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return part_mass[a] > part_mass[b]; });

  // Waterfilling: clip the heaviest parts one at a time until kappa * b < 1
  // for every remaining part.
  std::size_t clipped = 0;
  double kappa = 0.0;
  while (true) {
    double rest = 0.0;
    for (std::size_t k = order.size(); k-- > clipped;)
      rest += part_mass[order[k]];
    kappa = (budget - static_cast<double>(clipped)) / rest;
    if (clipped + 1 < order.size() && kappa * part_mass[order[clipped]] >= 1.0)
      ++clipped;
    else
      break;
  }
  for (std::size_t k = 0; k < order.size(); ++k)
    out.probs[order[k]] = k < clipped ? 1.0 : std::min(1.0, kappa * part_mass[order[k]]);
  out.scale = kappa;
  return out;
}

SchedulePolicy build_policy(const Partition &parts, std::span<const double> scores, double budget) {
  const ActivationMass mass = node_activation_mass(scores);
  BudgetedProbabilities bp = budgeted_probabilities(subset_mass(mass.mass, parts), budget);
  return SchedulePolicy{parts, std::move(bp.probs), budget, bp.scale};
}

ActivationPattern sample_active_parts(const SchedulePolicy &policy, std::uint64_t seed,
                                      std::uint64_t round) {
  ActivationPattern pattern;
  pattern.round = round;
  pattern.mode = policy.mode();
  Rng rng(seed, Stream::Schedule, {round});
  for (std::size_t j = 0; j < policy.probs.size(); ++j) {
    // Draw for every part so the stream position does not depend on p.
    if (rng.bernoulli(policy.probs[j])) {
      pattern.active_parts.push_back(j);
      const auto &members = policy.partition.parts[j];
      pattern.active_elements.insert(pattern.active_elements.end(), members.begin(), members.end());
    }
  }
  std::sort(pattern.active_elements.begin(), pattern.active_elements.end());
  return pattern;
}

namespace {

void add_edge_laplacian(Matrix &l, NodeId a, NodeId b, double w = 1.0) {
  l(a, b) -= w;
  l(b, a) -= w;
  l(a, a) += w;
  l(b, b) += w;
}

// Active edges of a pattern given as one flag per part.
std::vector<EdgeId> active_edges(const Graph &g, const Partition &parts,
                                 const std::vector<char> &part_on) {
  std::vector<EdgeId> edges;
  if (parts.mode == Mode::Links) {
    for (std::size_t r = 0; r < parts.size(); ++r)
      if (part_on[r])
        edges.insert(edges.end(), parts.parts[r].begin(), parts.parts[r].end());
  } else {
    std::vector<char> node_on(g.node_count(), 0);
    for (std::size_t r = 0; r < parts.size(); ++r)
      if (part_on[r])
        for (NodeId v : parts.parts[r])
          node_on[v] = 1;
    for (EdgeId id = 0; id < g.edge_count(); ++id)
      if (node_on[g.edge(id).first] && node_on[g.edge(id).second])
        edges.push_back(id);
  }
  return edges;
}

// Writes L and L*L for the subgraph on `edges` into the provided buffers.
// L*L is formed from the sparse row structure: (L^2)_ab = sum_k L_ak L_kb.
void laplacian_and_square(const Graph &g, const std::vector<EdgeId> &edges, Matrix &l,
                          Matrix &l2, std::vector<std::vector<NodeId>> &nbrs) {
  const std::size_t n = g.node_count();
  l = Matrix(n);
  l2 = Matrix(n);
  for (auto &nb : nbrs)
    nb.clear();
  for (EdgeId id : edges) {
    const Edge &e = g.edge(id);
    add_edge_laplacian(l, e.first, e.second);
    nbrs[e.first].push_back(e.second);
    nbrs[e.second].push_back(e.first);
  }
  for (NodeId k = 0; k < n; ++k) {
    if (nbrs[k].empty())
      continue;
    nbrs[k].push_back(k);
    for (NodeId a : nbrs[k])
      for (NodeId b : nbrs[k])
        l2(a, b) += l(a, k) * l(k, b);
  }
}

Matrix pattern_laplacian(const Graph &g, const Partition &parts, const std::vector<char> &on) {
  Matrix l(g.node_count());
  for (EdgeId id : active_edges(g, parts, on))
    add_edge_laplacian(l, g.edge(id).first, g.edge(id).second);
  return l;
}

std::vector<char> flags_of(const ActivationPattern &pattern, std::size_t part_count) {
  std::vector<char> on(part_count, 0);
  for (std::size_t r : pattern.active_parts) {
    if (r >= part_count)
      throw ScheduleError(fmt::format("active part {} outside partition", r));
    on[r] = 1;
  }
  return on;
}

} // namespace

Matrix sampled_laplacian_nodes(const Graph &g, const ActivationPattern &pattern) {
  if (pattern.mode != Mode::Nodes)
    throw ScheduleError("sampled_laplacian_nodes called with a links-mode pattern");
  std::vector<char> node_on(g.node_count(), 0);
  for (NodeId v : pattern.active_elements) {
    if (v >= g.node_count())
      throw ScheduleError(fmt::format("active node {} out of range", v));
    node_on[v] = 1;
  }
  Matrix l(g.node_count());
  for (const Edge &e : g.edges())
    if (node_on[e.first] && node_on[e.second])
      add_edge_laplacian(l, e.first, e.second);
  return l;
}

Matrix sampled_laplacian_links(const Graph &g, const ActivationPattern &pattern) {
  if (pattern.mode != Mode::Links)
    throw ScheduleError("sampled_laplacian_links called with a nodes-mode pattern");
  Matrix l(g.node_count());
  for (EdgeId id : pattern.active_elements) {
    if (id >= g.edge_count())
      throw ScheduleError(fmt::format("active edge {} out of range", id));
    add_edge_laplacian(l, g.edge(id).first, g.edge(id).second);
  }
  return l;
}

Matrix sampled_laplacian(const Graph &g, const ActivationPattern &pattern) {
  return pattern.mode == Mode::Nodes ? sampled_laplacian_nodes(g, pattern)
                                     : sampled_laplacian_links(g, pattern);
}

Matrix expected_laplacian(const Graph &g, const Partition &parts, std::span<const double> probs) {
  if (probs.size() != parts.size())
    throw ScheduleError("one probability per part required");
  Matrix l(g.node_count());
  if (parts.mode == Mode::Links) {
    for (std::size_t r = 0; r < parts.size(); ++r)
      for (EdgeId id : parts.parts[r])
        add_edge_laplacian(l, g.edge(id).first, g.edge(id).second, probs[r]);
    return l;
  }
  std::vector<std::size_t> part_of(g.node_count(), 0);
  for (std::size_t r = 0; r < parts.size(); ++r)
    for (NodeId v : parts.parts[r])
      part_of[v] = r;
  for (const Edge &e : g.edges()) {
    const std::size_t a = part_of[e.first], b = part_of[e.second];
    // Members of one subset switch on together.
    const double w = a == b ? probs[a] : probs[a] * probs[b];
    add_edge_laplacian(l, e.first, e.second, w);
  }
  return l;
}

namespace {

LaplacianMoments enumerate_moments(const Graph &g, const Partition &parts,
                                   std::span<const double> probs) {
  const std::size_t n = g.node_count();
  const std::size_t q = parts.size();
  if (q > kEnumerateHardLimit)
    throw ScheduleError(fmt::format("enumeration over {} parts refused (limit {})", q, kEnumerateHardLimit));

  // Only parts with 0 < p < 1 branch; the others are fixed on or off.
  std::vector<std::size_t> free_parts;
  std::vector<char> on(q, 0);
  for (std::size_t r = 0; r < q; ++r) {
    if (probs[r] >= 1.0)
      on[r] = 1;
    else if (probs[r] > 0.0)
      free_parts.push_back(r);
  }

  LaplacianMoments out{Matrix(n), Matrix(n), Matrix(n), Matrix(n), GramMethod::Enumerate, 0};
  Matrix l, l2;
  std::vector<std::vector<NodeId>> nbrs(n);
  const std::uint64_t patterns = std::uint64_t{1} << free_parts.size();
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    double weight = 1.0;
    for (std::size_t k = 0; k < free_parts.size(); ++k) {
      const bool bit = (mask >> k) & 1U;
      on[free_parts[k]] = bit ? 1 : 0;
      weight *= bit ? probs[free_parts[k]] : 1.0 - probs[free_parts[k]];
    }
    laplacian_and_square(g, active_edges(g, parts, on), l, l2, nbrs);
    out.mean += l * weight;
    out.gram += l2 * weight;
  }
  out.draws = static_cast<std::size_t>(patterns);
  return out;
}

LaplacianMoments monte_carlo_moments(const Graph &g, const Partition &parts,
                                     std::span<const double> probs, std::size_t draws,
                                     std::uint64_t seed) {
  if (draws < 2)
    throw ScheduleError("Monte Carlo needs at least two draws");
  const std::size_t n = g.node_count();
  const std::size_t q = parts.size();
  Matrix sum(n), sum_sq(n), gsum(n), gsum_sq(n);
  Matrix l, l2;
  std::vector<std::vector<NodeId>> nbrs(n);
  std::vector<char> on(q, 0);
  Rng rng(seed, Stream::MonteCarlo);
  for (std::size_t d = 0; d < draws; ++d) {
    for (std::size_t r = 0; r < q; ++r)
      on[r] = rng.bernoulli(probs[r]) ? 1 : 0;
    laplacian_and_square(g, active_edges(g, parts, on), l, l2, nbrs);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        sum(i, j) += l(i, j);
        sum_sq(i, j) += l(i, j) * l(i, j);
        gsum(i, j) += l2(i, j);
        gsum_sq(i, j) += l2(i, j) * l2(i, j);
      }
  }
  const double N = static_cast<double>(draws);
  auto finish = [N](const Matrix &s, const Matrix &s2, Matrix &mean, Matrix &se) {
    const std::size_t n = s.order();
    mean = s * (1.0 / N);
    se = Matrix(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double var = std::max(0.0, (s2(i, j) - N * mean(i, j) * mean(i, j)) / (N - 1.0));
        se(i, j) = std::sqrt(var / N);
      }
  };
  LaplacianMoments out;
  finish(sum, sum_sq, out.mean, out.mean_stderr);
  finish(gsum, gsum_sq, out.gram, out.gram_stderr);
  out.method = GramMethod::MonteCarlo;
  out.draws = draws;
  return out;
}

LaplacianMoments closed_form_moments(const Graph &g, const Partition &parts,
                                     std::span<const double> probs) {
  if (parts.mode != Mode::Links)
    throw ScheduleError("closed-form second moment is only available in links mode");
  const std::size_t n = g.node_count();
  std::vector<Matrix> lap;
  lap.reserve(parts.size());
  for (const auto &part : parts.parts)
    lap.push_back(laplacian_of_edges(g, part));

  // E[(sum Z_j L_j)^2] = sum_j p_j L_j^2 + sum_{j != l} p_j p_l L_j L_l.
  LaplacianMoments out{Matrix(n), Matrix(n), Matrix(n), Matrix(n), GramMethod::ClosedForm, 0};
  Matrix weighted_sum(n);
  for (std::size_t j = 0; j < lap.size(); ++j) {
    out.mean += lap[j] * probs[j];
    weighted_sum += lap[j] * probs[j];
  }
  for (std::size_t j = 0; j < lap.size(); ++j) {
    // L_j (sum_l p_l L_l) covers l != j plus a p_j L_j^2 term that is
    // corrected to the exact p_j L_j^2 below.
    const Matrix lj_sq = lap[j] * lap[j];
    out.gram += (lap[j] * weighted_sum) * probs[j];
    out.gram += lj_sq * (probs[j] - probs[j] * probs[j]);
  }
  return out;
}

} // namespace

LaplacianMoments laplacian_moments(const Graph &g, const Partition &parts,
                                   std::span<const double> probs, GramOptions options) {
  if (probs.size() != parts.size())
    throw ScheduleError("one probability per part required");
  for (double p : probs)
    if (!(p >= 0.0 && p <= 1.0))
      throw ScheduleError(fmt::format("probability {} outside [0,1]", p));

  GramMethod method = options.method;
  if (method == GramMethod::Auto) {
    if (parts.mode == Mode::Links)
      method = GramMethod::ClosedForm;
    else
      method = parts.size() <= kEnumerateAutoLimit ? GramMethod::Enumerate : GramMethod::MonteCarlo;
  }
  switch (method) {
  case GramMethod::Enumerate:
    return enumerate_moments(g, parts, probs);
  case GramMethod::MonteCarlo:
    return monte_carlo_moments(g, parts, probs, options.draws, options.seed);
  case GramMethod::ClosedForm:
    return closed_form_moments(g, parts, probs);
  case GramMethod::Auto:
    break;
  }
  throw ScheduleError("unreachable gram method");
}

Matrix expected_laplacian_gram(const Graph &g, const Partition &parts,
                               std::span<const double> probs, GramOptions options) {
  return laplacian_moments(g, parts, probs, options).gram;
}

std::size_t round_slot_cost(const ActivationPattern &pattern) {
  const std::size_t active = pattern.active_parts.size();
  return pattern.mode == Mode::Links ? 2 * active : active;
}

void to_json(nlohmann::json &j, const SchedulePolicy &p) {
  j = nlohmann::json{{"mode", to_string(p.mode())},
                     {"budget", p.budget},
                     {"scale", p.scale},
                     {"parts", p.partition.parts},
                     {"probs", p.probs}};
}

void from_json(const nlohmann::json &j, SchedulePolicy &p) {
  p.partition.mode = parse_mode(j.at("mode").get<std::string>());
  p.partition.parts = j.at("parts").get<std::vector<std::vector<std::size_t>>>();
  p.budget = j.at("budget").get<double>();
  p.scale = j.at("scale").get<double>();
  p.probs = j.at("probs").get<std::vector<double>>();
}

} // namespace edsgd
