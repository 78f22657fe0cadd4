#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edsgd/dataset.hpp"
#include "edsgd/graph.hpp"
#include "edsgd/importance.hpp"
#include "edsgd/mixing.hpp"
#include "edsgd/model.hpp"
#include "edsgd/schedule.hpp"

namespace edsgd {

/// Communication budget: an absolute expected part count per round, or a
/// percentage of the number of parts.
struct Budget {
  double value = 100.0;
  bool percent = true;

  /// "2.5" or "25%".
  static Budget parse(std::string_view text);
  double resolve(std::size_t part_count) const;
  std::string to_string() const;
};

struct TrainingConfig {
  Mode mode = Mode::Nodes;
  ImportanceMethod method = ImportanceMethod::Entropy;
  Budget budget;
  double learning_rate = 0.1;
  std::size_t batch_size = 16;
  std::size_t rounds = 200;
  std::uint64_t seed = 1;
  std::size_t shards_per_node = 2;
  double l2 = 0.0;
  ModelKind model = ModelKind::Logistic;
  std::size_t hidden = 32;
  /// Fixed mixing parameter; optimised from the schedule when unset.
  std::optional<double> alpha;
  GramOptions gram;
};

/// Everything derived from the topology before training starts.
struct SchedulePlan {
  Partition partition;
  ImportanceVector importance;
  SchedulePolicy policy;
  /// Absent when the budget is zero (no communication).
  std::optional<LaplacianMoments> moments;
  std::optional<SpectralReport> report;
  double alpha = 0.0;
};

/// Partition -> importance -> b -> b_S -> p -> expectations -> alpha*.
/// A zero budget yields all-zero probabilities and alpha = 0.
SchedulePlan plan_schedule(const Graph &g, Mode mode, ImportanceMethod method, const Budget &budget,
                           GramOptions gram = {}, std::optional<double> fixed_alpha = std::nullopt);

struct RoundRecord {
  std::size_t round = 0;
  std::size_t cum_slots = 0;
  double train_loss = 0.0;
  double test_acc = 0.0;
  std::size_t active_parts = 0;
  double consensus_dist = 0.0;

  friend bool operator==(const RoundRecord &, const RoundRecord &) = default;
};

struct TrainingTrace {
  std::vector<RoundRecord> records;
  std::vector<Params> final_params;
  double initial_loss = 0.0;
  double alpha = 0.0;
};

/// Mini-batch of up to `batch_size` distinct local indices, drawn from the
/// (seed, round, node) stream.
std::vector<std::size_t> draw_minibatch(std::size_t local_size, std::size_t batch_size,
                                        std::uint64_t seed, std::uint64_t round, std::uint64_t node);

/// x - lr * g on one mini-batch.
Params local_sgd_step(const Model &model, std::span<const double> params, const Dataset &local,
                      double learning_rate, std::size_t batch_size, std::uint64_t seed,
                      std::uint64_t round, std::uint64_t node);

/// Consensus averaging x_i <- sum_j W_ij x_j over node parameter vectors.
void mix_parameters(const Matrix &w, std::vector<Params> &params);

/// sum_i ||x_i - mean||^2.
double consensus_distance(const std::vector<Params> &params);
Params average_params(const std::vector<Params> &params);

inline constexpr double kDivergenceFactor = 1e3;

/// Full D-SGD loop: local step, sampled topology, W = I - alpha L_hat mixing,
/// metrics on the network-average model. Throws DivergenceError when the
/// loss exceeds 1e3 times its initial value.
TrainingTrace run_dsgd(const Graph &g, const DatasetPair &data, const TrainingConfig &config);
TrainingTrace run_dsgd(const Graph &g, const DatasetPair &data, const TrainingConfig &config,
                       const SchedulePlan &plan);

/// Single-worker SGD on the pooled training set: `rounds` steps, each on a
/// batch of nodes * batch_size samples (the same sample-gradient count per
/// round as the network), same learning rate. Slots are always zero.
TrainingTrace centralized_baseline(const DatasetPair &data, const TrainingConfig &config,
                                   std::size_t nodes);

void write_trace_csv(std::ostream &out, const TrainingTrace &trace);
std::vector<RoundRecord> read_trace_csv(std::istream &in);

} // namespace edsgd
