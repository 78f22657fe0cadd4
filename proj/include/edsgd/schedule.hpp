#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "edsgd/graph.hpp"
#include "edsgd/importance.hpp"
#include "edsgd/matrix.hpp"
#include "edsgd/partition.hpp"

namespace edsgd {

/// Activation probability per part under a budget of B expected parts per
/// round. `scale` is the waterfilling factor kappa in p = min(1, kappa * b).
struct SchedulePolicy {
  Partition partition;
  std::vector<double> probs;
  double budget = 0.0;
  double scale = 0.0;

  Mode mode() const { return partition.mode; }
};

/// Parts (and the nodes or edges they hold) that communicate in one round.
struct ActivationPattern {
  std::uint64_t round = 0;
  Mode mode = Mode::Nodes;
  std::vector<std::size_t> active_parts;
  /// Node ids (nodes mode) or edge ids (links mode), ascending.
  std::vector<std::size_t> active_elements;
};

struct ActivationMass {
  std::vector<double> mass;
  /// Set when every score was zero and uniform mass was substituted.
  bool uniform_fallback = false;
};

/// b_i = score_i / sum(score). All-zero scores give b = 1/n.
ActivationMass node_activation_mass(std::span<const double> scores);

/// b_S = sum of b_i over the members of each part.
std::vector<double> subset_mass(std::span<const double> mass, const Partition &parts);

struct BudgetedProbabilities {
  std::vector<double> probs;
  double scale = 0.0;
};

/// p_j = min(1, kappa * b_j) with kappa chosen so that sum p = B. Clipped
/// parts are fixed at 1 and the remaining budget is rescaled over the rest.
/// When B exceeds the number of positive-mass parts those are all set to 1
/// and the leftover budget is split evenly over the zero-mass parts.
/// Throws ScheduleError for B <= 0, B > #parts or negative mass.
BudgetedProbabilities budgeted_probabilities(std::span<const double> part_mass, double budget);

/// Scores -> b -> b_S -> p. Scores are per node (nodes mode) or per edge id
/// (links mode).
SchedulePolicy build_policy(const Partition &parts, std::span<const double> scores, double budget);

/// Independent Bernoulli draw per part from the (seed, round) stream.
ActivationPattern sample_active_parts(const SchedulePolicy &policy, std::uint64_t seed,
                                      std::uint64_t round);

/// L of Q A Q where Q selects the active nodes.
Matrix sampled_laplacian_nodes(const Graph &g, const ActivationPattern &pattern);
/// Sum of the Laplacians of the active matchings.
Matrix sampled_laplacian_links(const Graph &g, const ActivationPattern &pattern);
Matrix sampled_laplacian(const Graph &g, const ActivationPattern &pattern);

/// Closed-form E[L_hat].
Matrix expected_laplacian(const Graph &g, const Partition &parts, std::span<const double> probs);

enum class GramMethod { Auto, Enumerate, MonteCarlo, ClosedForm };

struct GramOptions {
  GramMethod method = GramMethod::Auto;
  std::size_t draws = 100000;
  std::uint64_t seed = 0;
};

/// First and second moments of the sampled Laplacian. The stderr matrices
/// are zero for exact methods.
struct LaplacianMoments {
  Matrix mean;
  Matrix gram;
  Matrix mean_stderr;
  Matrix gram_stderr;
  GramMethod method = GramMethod::Enumerate;
  std::size_t draws = 0;
};

inline constexpr std::size_t kEnumerateAutoLimit = 15;
inline constexpr std::size_t kEnumerateHardLimit = 25;

/// E[L_hat] and E[L_hat^T L_hat]. Enumerate sums over every activation
/// pattern (refused above 25 parts); MonteCarlo averages seeded draws;
/// ClosedForm is links-only. Auto picks ClosedForm for links, Enumerate for
/// up to 15 parts, MonteCarlo otherwise.
LaplacianMoments laplacian_moments(const Graph &g, const Partition &parts,
                                   std::span<const double> probs, GramOptions options = {});

/// Convenience wrapper returning only E[L_hat^T L_hat].
Matrix expected_laplacian_gram(const Graph &g, const Partition &parts,
                               std::span<const double> probs, GramOptions options = {});

/// Nodes: number of active subsets. Links: two slots per active matching.
std::size_t round_slot_cost(const ActivationPattern &pattern);

void to_json(nlohmann::json &j, const SchedulePolicy &p);
void from_json(const nlohmann::json &j, SchedulePolicy &p);

} // namespace edsgd
