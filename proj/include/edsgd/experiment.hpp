#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edsgd/dataset.hpp"
#include "edsgd/dsgd.hpp"
#include "edsgd/graph.hpp"

namespace edsgd {

inline constexpr int kConfigSchema = 1;

struct TopologySpec {
  enum class Kind { EdgeList, KStar, Gnp, Cycle, Path };
  Kind kind = Kind::Cycle;
  std::string path;
  std::size_t n = 0;
  std::size_t k = 2;
  double prob = 0.0;
  std::uint64_t seed = 0;

  /// Shorthand "cycle:6", "path:3", "kstar:2:15", "gnp:30:0.2:7", "file:<path>".
  static TopologySpec parse(const std::string &text);
};

struct DataSpec {
  enum class Kind { Synthetic, Idx };
  Kind kind = Kind::Synthetic;
  std::size_t classes = 10;
  std::size_t dim = 20;
  std::size_t per_class = 100;
  double spread = 0.5;
  double condition = 1.0;
  /// Defaults to the run seed.
  std::optional<std::uint64_t> seed;
  std::string train_images, train_labels, test_images, test_labels;
};

struct ExperimentConfig {
  TopologySpec topology;
  DataSpec data;
  TrainingConfig training;
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir = "out";
};

/// Strict parse: unknown keys, a missing or wrong "schema" and empty seed
/// lists are rejected with ConfigError.
ExperimentConfig parse_experiment_config(const nlohmann::json &j);
ExperimentConfig load_experiment_config(const std::string &path);
nlohmann::json to_json(const ExperimentConfig &c);

struct LoadedTopology {
  Graph graph;
  std::vector<std::string> labels;
  bool remapped = false;
};

LoadedTopology build_topology(const TopologySpec &spec);
DatasetPair build_datasets(const DataSpec &spec, std::uint64_t run_seed);

struct PartitionSummary {
  Partition matchings;
  Partition subsets;
  ValidationReport matchings_report;
  ValidationReport subsets_report;
};

/// Writes partition.json holding both decompositions with their counts and
/// validation results. Throws GraphError on a disconnected topology.
PartitionSummary cmd_partition(const ExperimentConfig &config);

/// CSV "element_id,score_bits,rank" for nodes (nodes mode) or edge ids
/// (links mode); written to importance.csv and returned.
std::string cmd_importance(const ExperimentConfig &config);

/// Writes policy.json and report.json; throws ScheduleError for a zero or
/// infeasible budget.
SchedulePlan cmd_optimize(const ExperimentConfig &config);

/// One trace_seed<seed>.csv per seed plus config.json, policy.json and
/// report.json. Returns the trace paths.
std::vector<std::filesystem::path> cmd_simulate(const ExperimentConfig &config);

/// Trace of one seed, as cmd_simulate runs it (no files written).
TrainingTrace simulate_seed(const ExperimentConfig &config, std::uint64_t seed);

struct ThresholdStats {
  double threshold = 0.0;
  std::size_t runs = 0;
  std::size_t reached = 0;
  /// Over all runs; a run that never crosses contributes its final slot
  /// count (a lower bound). Meaningless when reached == 0.
  double mean_slots = 0.0;
  double std_slots = 0.0;
};

struct MethodStats {
  std::string name;
  std::vector<ThresholdStats> thresholds;
};

struct ComparisonReport {
  std::vector<double> thresholds;
  std::vector<MethodStats> methods;
};

inline const std::vector<double> kDefaultThresholds{0.6, 0.7, 0.9};

/// First cumulative slot count at which test accuracy reaches `threshold`.
std::optional<std::size_t> slots_to_threshold(const std::vector<RoundRecord> &trace, double threshold);

ComparisonReport compare_traces(const std::vector<std::pair<std::string, std::vector<std::vector<RoundRecord>>>> &sets,
                                const std::vector<double> &thresholds = kDefaultThresholds);

struct TraceSet {
  std::string name;
  std::string pattern;
};

/// Expands each glob, reads every trace and compares. Requires at least two
/// sets; an empty glob or malformed trace throws.
ComparisonReport cmd_compare(const std::vector<TraceSet> &sets,
                             const std::vector<double> &thresholds = kDefaultThresholds,
                             const std::optional<std::filesystem::path> &out_csv = std::nullopt);

std::string comparison_csv(const ComparisonReport &report);

} // namespace edsgd
