// Command-line driver: partition | importance | optimize | simulate | compare.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "edsgd/error.hpp"
#include "edsgd/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::string budget;
  std::string mode;
  std::string method;
  std::string seeds;
  std::string topology;
};

void add_common(CLI::App *cmd, CommonFlags &f) {
  cmd->add_option("--config", f.config, "Experiment config (JSON)");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--budget", f.budget, "Expected parts per round, or a percentage such as 25%");
  cmd->add_option("--mode", f.mode, "links|nodes");
  cmd->add_option("--method", f.method, "entropy|betweenness|uniform");
  cmd->add_option("--seeds", f.seeds, "Comma-separated seed list");
  cmd->add_option("--topology", f.topology, "cycle:N | path:N | kstar:K:N | gnp:N:P:SEED | file:PATH");
}

std::vector<double> parse_doubles(const std::string &text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception &) {
      throw edsgd::ConfigError(fmt::format("bad number '{}'", item));
    }
  }
  return out;
}

edsgd::ExperimentConfig resolve(const CommonFlags &f) {
  using namespace edsgd;
  ExperimentConfig c;
  if (!f.config.empty())
    c = load_experiment_config(f.config);
  else if (f.topology.empty())
    throw ConfigError("either --config or --topology is required");
  if (!f.topology.empty())
    c.topology = TopologySpec::parse(f.topology);
  if (!f.out.empty())
    c.out_dir = f.out;
  if (!f.budget.empty())
    c.training.budget = Budget::parse(f.budget);
  if (!f.mode.empty())
    c.training.mode = parse_mode(f.mode);
  if (!f.method.empty())
    c.training.method = parse_importance_method(f.method);
  if (!f.seeds.empty()) {
    c.seeds.clear();
    for (double s : parse_doubles(f.seeds)) {
      if (s < 0 || s != static_cast<double>(static_cast<std::uint64_t>(s)))
        throw ConfigError(fmt::format("bad seed {}", s));
      c.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    if (c.seeds.empty())
      throw ConfigError("--seeds must not be empty");
  }
  return c;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Entropy-scheduled decentralized SGD simulator"};
  app.require_subcommand(1);

  CommonFlags part_f, imp_f, opt_f, sim_f;
  auto *part = app.add_subcommand("partition", "Matching and collision-free subset decompositions");
  add_common(part, part_f);
  auto *imp = app.add_subcommand("importance", "Per-node or per-link importance scores (CSV)");
  add_common(imp, imp_f);
  auto *opt = app.add_subcommand("optimize", "Schedule probabilities and optimal mixing parameter");
  add_common(opt, opt_f);
  auto *sim = app.add_subcommand("simulate", "Run D-SGD and write one trace per seed");
  add_common(sim, sim_f);

  std::vector<std::string> sets;
  std::string thresholds;
  std::string compare_out;
  auto *cmp = app.add_subcommand("compare", "Slots-to-accuracy comparison of trace sets");
  cmp->add_option("--set", sets, "name=glob (repeat for each method)")->required();
  cmp->add_option("--thresholds", thresholds, "Comma-separated accuracy thresholds");
  cmp->add_option("--out", compare_out, "Output directory for comparison.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (part->parsed()) {
      const auto c = resolve(part_f);
      const auto s = edsgd::cmd_partition(c);
      std::cout << fmt::format("matchings M={} ({})\nsubsets q={} ({})\n", s.matchings.size(),
                               s.matchings_report.summary(), s.subsets.size(), s.subsets_report.summary());
      return s.matchings_report.valid() && s.subsets_report.valid() ? 0 : 1;
    }
    if (imp->parsed()) {
      std::cout << edsgd::cmd_importance(resolve(imp_f));
      return 0;
    }
    if (opt->parsed()) {
      const auto plan = edsgd::cmd_optimize(resolve(opt_f));
      std::cout << fmt::format("parts={} budget={} scale={:.6g}\nalpha*={:.8g} s*={:.8g} rho={:.8g} gap={:.8g} {}\n",
                               plan.partition.size(), plan.policy.budget, plan.policy.scale,
                               plan.report->alpha, plan.report->objective, plan.report->deviation,
                               plan.report->spectral_gap,
                               plan.report->convergent ? "convergent" : "NOT convergent");
      return 0;
    }
    if (sim->parsed()) {
      for (const auto &path : edsgd::cmd_simulate(resolve(sim_f)))
        std::cout << path.string() << '\n';
      return 0;
    }
    if (cmp->parsed()) {
      std::vector<edsgd::TraceSet> parsed;
      for (const auto &s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
          parsed.push_back({s, s});
        else
          parsed.push_back({s.substr(0, eq), s.substr(eq + 1)});
      }
      const auto thr = thresholds.empty() ? edsgd::kDefaultThresholds : parse_doubles(thresholds);
      std::optional<std::filesystem::path> out;
      if (!compare_out.empty())
        out = std::filesystem::path(compare_out) / "comparison.csv";
      std::cout << edsgd::comparison_csv(edsgd::cmd_compare(parsed, thr, out));
      return 0;
    }
  } catch (const edsgd::DivergenceError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
