#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "edsgd/error.hpp"
#include "edsgd/experiment.hpp"

using namespace edsgd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / ("edsgd_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig config_for(const std::string &topology, const fs::path &out) {
  ExperimentConfig c;
  c.topology = TopologySpec::parse(topology);
  c.out_dir = out.string();
  c.data.classes = 4;
  c.data.dim = 5;
  c.data.per_class = 25;
  c.training.rounds = 20;
  c.training.batch_size = 4;
  return c;
}

RoundRecord rec(std::size_t round, std::size_t slots, double acc) {
  RoundRecord r;
  r.round = round;
  r.cum_slots = slots;
  r.test_acc = acc;
  return r;
}

void write_trace(const fs::path &path, const std::vector<RoundRecord> &records) {
  TrainingTrace t;
  t.records = records;
  std::ofstream out(path);
  write_trace_csv(out, t);
}

} // namespace

TEST_CASE("config parsing is strict") {
  const json good{{"schema", 1}, {"topology", "cycle:6"}, {"budget", "50%"}, {"seeds", {1, 2}}};
  const auto c = parse_experiment_config(good);
  CHECK(c.topology.kind == TopologySpec::Kind::Cycle);
  CHECK(c.topology.n == 6);
  CHECK(c.training.budget.percent);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2});

  json typo = good;
  typo["learnin_rate"] = 0.1;
  CHECK_THROWS_WITH_AS(parse_experiment_config(typo), doctest::Contains("learnin_rate"), ConfigError);
  json no_schema = good;
  no_schema.erase("schema");
  CHECK_THROWS_AS(parse_experiment_config(no_schema), ConfigError);
  json wrong_schema = good;
  wrong_schema["schema"] = 2;
  CHECK_THROWS_AS(parse_experiment_config(wrong_schema), ConfigError);
  json no_seeds = good;
  no_seeds["seeds"] = json::array();
  CHECK_THROWS_AS(parse_experiment_config(no_seeds), ConfigError);
  json bad_topology = good;
  bad_topology["topology"] = json{{"kind", "cycle"}, {"n", 6}, {"size", 3}};
  CHECK_THROWS_AS(parse_experiment_config(bad_topology), ConfigError);
  json bad_mode = good;
  bad_mode["mode"] = "edges";
  CHECK_THROWS_AS(parse_experiment_config(bad_mode), ConfigError);

  // The echoed form parses back to the same thing.
  const json echoed = to_json(c);
  CHECK(to_json(parse_experiment_config(echoed)) == echoed);
}

TEST_CASE("topology shorthands") {
  CHECK(build_topology(TopologySpec::parse("kstar:2:15")).graph.node_count() == 15);
  CHECK(build_topology(TopologySpec::parse("gnp:30:0.2:7")).graph ==
        build_topology(TopologySpec::parse("gnp:30:0.2:7")).graph);
  CHECK(build_topology(TopologySpec::parse("path:3")).graph.edge_count() == 2);
  CHECK_THROWS_AS(TopologySpec::parse("torus:4"), ConfigError);
  CHECK_THROWS_AS(TopologySpec::parse("cycle"), ConfigError);
  CHECK_THROWS_AS(TopologySpec::parse("gnp:30:1.5:7"), ConfigError);

  const fs::path dir = scratch("topology");
  std::ofstream(dir / "g.txt") << "# triangle\na b\nb c\nc a\n";
  const auto loaded = build_topology(TopologySpec::parse("file:" + (dir / "g.txt").string()));
  CHECK(loaded.remapped);
  CHECK(loaded.graph.edge_count() == 3);
  CHECK(loaded.labels == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("cmd_partition") {
  const fs::path dir = scratch("partition");
  const auto p3 = cmd_partition(config_for("path:3", dir));
  CHECK(p3.subsets.size() == 3);
  CHECK(p3.matchings.size() == 2);
  const json j = json::parse(slurp(dir / "partition.json"));
  CHECK(j["nodes"]["q"] == 3);
  CHECK(j["links"]["M"] == 2);
  CHECK(j["links"]["validation"] == "valid");

  CHECK(cmd_partition(config_for("cycle:6", dir)).subsets.size() == 3);

  std::ofstream(dir / "split.txt") << "0 1\n2 3\n";
  CHECK_THROWS_AS(cmd_partition(config_for("file:" + (dir / "split.txt").string(), dir)), GraphError);
}

TEST_CASE("cmd_importance") {
  const fs::path dir = scratch("importance");
  ExperimentConfig c = config_for("path:3", dir);
  const std::string entropy = cmd_importance(c);
  CHECK(entropy.find("0,0.918295834054,2\n1,1.5,1\n2,0.918295834054,2\n") != std::string::npos);
  CHECK(slurp(dir / "importance.csv") == entropy);

  c.training.method = ImportanceMethod::Betweenness;
  CHECK(cmd_importance(c) == "element_id,score_bits,rank\n0,0,2\n1,1,1\n2,0,2\n");

  c.training.mode = Mode::Links;
  CHECK(cmd_importance(c).find("0,0,1\n1,0,1\n") != std::string::npos);

  CHECK_THROWS_AS(parse_importance_method("x"), ConfigError);
}

TEST_CASE("cmd_optimize") {
  const fs::path dir = scratch("optimize");
  ExperimentConfig c = config_for("path:3", dir);
  c.training.mode = Mode::Links;
  c.training.budget = Budget{100, true};
  const SchedulePlan plan = cmd_optimize(c);
  CHECK(plan.policy.probs == std::vector<double>{1.0, 1.0});
  CHECK(plan.report->alpha == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(json::parse(slurp(dir / "policy.json"))["probs"] == json({1.0, 1.0}));
  CHECK(json::parse(slurp(dir / "report.json"))["convergent"] == true);

  c.training.budget = Budget{0, true};
  CHECK_THROWS_AS(cmd_optimize(c), ScheduleError);
  c.training.budget = Budget{150, true};
  CHECK_THROWS_AS(cmd_optimize(c), ScheduleError);
}

TEST_CASE("cmd_simulate") {
  const fs::path dir = scratch("simulate");
  ExperimentConfig c = config_for("cycle:5", dir / "a");
  c.seeds = {1, 2};
  c.training.budget = Budget{60, true};
  const auto first = cmd_simulate(c);
  REQUIRE(first.size() == 2);
  CHECK(first[0].filename() == "trace_seed1.csv");
  CHECK(first[1].filename() == "trace_seed2.csv");
  const std::string t1 = slurp(first[0]);
  CHECK(t1 != slurp(first[1]));
  CHECK(slurp(cmd_simulate(c)[0]) == t1);

  // Re-running from the echoed config reproduces the traces.
  ExperimentConfig again = load_experiment_config((dir / "a" / "config.json").string());
  again.out_dir = (dir / "b").string();
  CHECK(slurp(cmd_simulate(again)[0]) == t1);

  std::ostringstream direct;
  write_trace_csv(direct, simulate_seed(c, 1));
  CHECK(direct.str() == t1);
}

TEST_CASE("comparison statistics") {
  const std::vector<RoundRecord> fast{rec(1, 2, 0.5), rec(2, 4, 0.75), rec(3, 6, 0.95)};
  const std::vector<RoundRecord> slow{rec(1, 2, 0.3), rec(2, 4, 0.65), rec(3, 6, 0.72)};
  CHECK(slots_to_threshold(fast, 0.7) == 4u);
  CHECK(slots_to_threshold(slow, 0.7) == 6u);
  CHECK_FALSE(slots_to_threshold(slow, 0.9).has_value());

  const auto report = compare_traces({{"a", {fast, fast}}, {"b", {slow, slow}}});
  REQUIRE(report.methods.size() == 2);
  for (std::size_t t = 0; t < 3; ++t)
    CHECK(report.methods[0].thresholds[t].mean_slots <= report.methods[1].thresholds[t].mean_slots);
  CHECK(report.methods[0].thresholds[1].std_slots == 0.0);
  CHECK(report.methods[1].thresholds[2].reached == 0);
  CHECK(comparison_csv(report).find("b,0.9,2,0,not reached,not reached") != std::string::npos);
}

TEST_CASE("cmd_compare reads trace globs") {
  const fs::path dir = scratch("compare");
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  write_trace(dir / "a" / "trace_seed1.csv", {rec(1, 2, 0.65), rec(2, 4, 0.8)});
  write_trace(dir / "a" / "trace_seed2.csv", {rec(1, 2, 0.65), rec(2, 4, 0.8)});
  write_trace(dir / "b" / "trace_seed1.csv", {rec(1, 2, 0.65), rec(2, 4, 0.8)});
  write_trace(dir / "b" / "trace_seed2.csv", {rec(1, 2, 0.65), rec(2, 4, 0.8)});
  const auto report = cmd_compare({{"a", (dir / "a" / "*.csv").string()}, {"b", (dir / "b" / "*.csv").string()}},
                                  {0.6, 0.7}, dir / "out" / "comparison.csv");
  CHECK(report.methods[0].thresholds[0].mean_slots == report.methods[1].thresholds[0].mean_slots);
  CHECK(report.methods[0].thresholds[1].mean_slots == 4.0);
  CHECK(report.methods[0].thresholds[1].std_slots == 0.0);
  CHECK(fs::exists(dir / "out" / "comparison.csv"));

  CHECK_THROWS_AS(cmd_compare({{"a", (dir / "a" / "*.csv").string()}, {"c", (dir / "none" / "*.csv").string()}}),
                  ConfigError);
  CHECK_THROWS_AS(cmd_compare({{"a", (dir / "a" / "*.csv").string()}}), ConfigError);
  std::ofstream(dir / "b" / "trace_seed3.csv") << "garbage\n";
  CHECK_THROWS_AS(cmd_compare({{"a", (dir / "a" / "*.csv").string()}, {"b", (dir / "b" / "*.csv").string()}}),
                  DataError);
}

TEST_CASE("command-line driver") {
  const fs::path dir = scratch("cli");
  const std::string cli = EDSGD_CLI_PATH;
  auto run = [&](const std::string &args) {
    const int rc = std::system((cli + " " + args + " > " + (dir / "stdout.txt").string() + " 2>&1").c_str());
    return WEXITSTATUS(rc);
  };
  CHECK(run("partition --topology cycle:6 --out " + (dir / "p").string()) == 0);
  CHECK(fs::exists(dir / "p" / "partition.json"));
  CHECK(run("importance --topology path:3 --method betweenness --out " + (dir / "i").string()) == 0);
  CHECK(slurp(dir / "stdout.txt") == "element_id,score_bits,rank\n0,0,2\n1,1,1\n2,0,2\n");
  CHECK(run("optimize --topology path:3 --mode links --budget 100% --out " + (dir / "o").string()) == 0);
  CHECK(run("optimize --topology path:3 --budget 0 --out " + (dir / "o").string()) == 2);
  CHECK(run("importance --topology path:3 --method x") != 0);
  CHECK(run("partition") == 2);
  CHECK(run("frobnicate") != 0);
}
