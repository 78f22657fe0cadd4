#include "edsgd/experiment.hpp"

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "edsgd/error.hpp"

namespace edsgd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json &j, std::initializer_list<const char *> allowed, const char *where) {
  if (!j.is_object())
    throw ConfigError(fmt::format("{}: expected a JSON object", where));
  for (const auto &[key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char *a) { return key == a; }))
      throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
  }
}

template <typename T>
void read_opt(const json &j, const char *key, T &out) {
  if (!j.contains(key))
    return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception &e) {
    throw ConfigError(fmt::format("bad value for '{}': {}", key, e.what()));
  }
}

std::size_t parse_count(const std::string &tok, const std::string &spec) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(tok, &used);
    if (used == tok.size())
      return static_cast<std::size_t>(v);
  } catch (const std::exception &) {
  }
  throw ConfigError(fmt::format("bad integer '{}' in topology '{}'", tok, spec));
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep))
    out.push_back(item);
  return out;
}

TopologySpec::Kind parse_topology_kind(const std::string &s) {
  if (s == "edge_list")
    return TopologySpec::Kind::EdgeList;
  if (s == "kstar")
    return TopologySpec::Kind::KStar;
  if (s == "gnp")
    return TopologySpec::Kind::Gnp;
  if (s == "cycle")
    return TopologySpec::Kind::Cycle;
  if (s == "path")
    return TopologySpec::Kind::Path;
  throw ConfigError(fmt::format("unknown topology kind '{}'", s));
}

const char *topology_kind_name(TopologySpec::Kind k) {
  switch (k) {
  case TopologySpec::Kind::EdgeList:
    return "edge_list";
  case TopologySpec::Kind::KStar:
    return "kstar";
  case TopologySpec::Kind::Gnp:
    return "gnp";
  case TopologySpec::Kind::Cycle:
    return "cycle";
  case TopologySpec::Kind::Path:
    return "path";
  }
  return "?";
}

TopologySpec parse_topology(const json &j) {
  if (j.is_string())
    return TopologySpec::parse(j.get<std::string>());
  reject_unknown(j, {"kind", "path", "n", "k", "prob", "seed"}, "topology");
  TopologySpec t;
  std::string kind;
  read_opt(j, "kind", kind);
  t.kind = parse_topology_kind(kind);
  read_opt(j, "path", t.path);
  read_opt(j, "n", t.n);
  read_opt(j, "k", t.k);
  read_opt(j, "prob", t.prob);
  read_opt(j, "seed", t.seed);
  if (t.kind == TopologySpec::Kind::EdgeList && t.path.empty())
    throw ConfigError("topology edge_list needs a 'path'");
  return t;
}

json topology_json(const TopologySpec &t) {
  json j{{"kind", topology_kind_name(t.kind)}};
  switch (t.kind) {
  case TopologySpec::Kind::EdgeList:
    j["path"] = t.path;
    break;
  case TopologySpec::Kind::KStar:
    j["k"] = t.k;
    j["n"] = t.n;
    break;
  case TopologySpec::Kind::Gnp:
    j["n"] = t.n;
    j["prob"] = t.prob;
    j["seed"] = t.seed;
    break;
  case TopologySpec::Kind::Cycle:
  case TopologySpec::Kind::Path:
    j["n"] = t.n;
    break;
  }
  return j;
}

DataSpec parse_data(const json &j) {
  reject_unknown(j, {"kind", "classes", "dim", "per_class", "spread", "condition", "seed", "train_images",
                     "train_labels", "test_images", "test_labels"},
                 "data");
  DataSpec d;
  std::string kind = "synthetic";
  read_opt(j, "kind", kind);
  if (kind == "synthetic")
    d.kind = DataSpec::Kind::Synthetic;
  else if (kind == "idx")
    d.kind = DataSpec::Kind::Idx;
  else
    throw ConfigError(fmt::format("unknown data kind '{}'", kind));
  read_opt(j, "classes", d.classes);
  read_opt(j, "dim", d.dim);
  read_opt(j, "per_class", d.per_class);
  read_opt(j, "spread", d.spread);
  read_opt(j, "condition", d.condition);
  if (j.contains("seed"))
    d.seed = j.at("seed").get<std::uint64_t>();
  read_opt(j, "train_images", d.train_images);
  read_opt(j, "train_labels", d.train_labels);
  read_opt(j, "test_images", d.test_images);
  read_opt(j, "test_labels", d.test_labels);
  return d;
}

json data_json(const DataSpec &d) {
  json j;
  if (d.kind == DataSpec::Kind::Synthetic) {
    j = json{{"kind", "synthetic"}, {"classes", d.classes}, {"dim", d.dim},
             {"per_class", d.per_class}, {"spread", d.spread}, {"condition", d.condition}};
  } else {
    j = json{{"kind", "idx"}, {"train_images", d.train_images}, {"train_labels", d.train_labels},
             {"test_images", d.test_images}, {"test_labels", d.test_labels}};
    if (d.classes != 0)
      j["classes"] = d.classes;
  }
  if (d.seed)
    j["seed"] = *d.seed;
  return j;
}

const char *gram_method_name(GramMethod m) {
  switch (m) {
  case GramMethod::Auto:
    return "auto";
  case GramMethod::Enumerate:
    return "enumerate";
  case GramMethod::MonteCarlo:
    return "monte_carlo";
  case GramMethod::ClosedForm:
    return "closed_form";
  }
  return "?";
}

GramMethod parse_gram_method(const std::string &s) {
  for (GramMethod m : {GramMethod::Auto, GramMethod::Enumerate, GramMethod::MonteCarlo, GramMethod::ClosedForm})
    if (s == gram_method_name(m))
      return m;
  throw ConfigError(fmt::format("unknown gram method '{}'", s));
}

void write_json(const fs::path &path, const json &j) {
  std::ofstream out(path);
  if (!out)
    throw ConfigError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

Graph connected_topology(const ExperimentConfig &config) {
  Graph g = build_topology(config.topology).graph;
  if (!is_connected(g))
    throw GraphError("topology is not connected");
  return g;
}

} // namespace

TopologySpec TopologySpec::parse(const std::string &text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ConfigError(fmt::format("bad topology '{}' (expected kind:args)", text));
  const std::string kind = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  TopologySpec t;
  if (kind == "file") {
    t.kind = Kind::EdgeList;
    t.path = rest;
    return t;
  }
  const auto args = split(rest, ':');
  t.kind = parse_topology_kind(kind);
  auto need = [&](std::size_t count) {
    if (args.size() != count)
      throw ConfigError(fmt::format("topology '{}' needs {} arguments", text, count));
  };
  switch (t.kind) {
  case Kind::Cycle:
  case Kind::Path:
    need(1);
    t.n = parse_count(args[0], text);
    break;
  case Kind::KStar:
    need(2);
    t.k = parse_count(args[0], text);
    t.n = parse_count(args[1], text);
    break;
  case Kind::Gnp:
    need(3);
    t.n = parse_count(args[0], text);
    try {
      t.prob = std::stod(args[1]);
    } catch (const std::exception &) {
      throw ConfigError(fmt::format("bad probability in topology '{}'", text));
    }
    if (!(t.prob > 0.0 && t.prob <= 1.0))
      throw ConfigError(fmt::format("probability in topology '{}' must lie in (0,1]", text));
    t.seed = parse_count(args[2], text);
    break;
  case Kind::EdgeList:
    break;
  }
  return t;
}

ExperimentConfig parse_experiment_config(const json &j) {
  reject_unknown(j,
                 {"schema", "topology", "data", "mode", "method", "budget", "learning_rate",
                  "batch_size", "rounds", "shards_per_node", "l2", "model", "hidden", "alpha",
                  "gram_method", "gram_draws", "gram_seed", "seeds", "out"},
                 "config");
  if (!j.contains("schema") || !j.at("schema").is_number_integer() ||
      j.at("schema").get<int>() != kConfigSchema)
    throw ConfigError(fmt::format("config: 'schema' must be {}", kConfigSchema));

  ExperimentConfig c;
  if (!j.contains("topology"))
    throw ConfigError("config: 'topology' is required");
  c.topology = parse_topology(j.at("topology"));
  if (j.contains("data"))
    c.data = parse_data(j.at("data"));

  TrainingConfig &t = c.training;
  std::string text;
  if (j.contains("mode"))
    t.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("method"))
    t.method = parse_importance_method(j.at("method").get<std::string>());
  if (j.contains("budget")) {
    const json &b = j.at("budget");
    t.budget = b.is_string() ? Budget::parse(b.get<std::string>()) : Budget{b.get<double>(), false};
  }
  read_opt(j, "learning_rate", t.learning_rate);
  read_opt(j, "batch_size", t.batch_size);
  read_opt(j, "rounds", t.rounds);
  read_opt(j, "shards_per_node", t.shards_per_node);
  read_opt(j, "l2", t.l2);
  if (j.contains("model"))
    t.model = parse_model_kind(j.at("model").get<std::string>());
  read_opt(j, "hidden", t.hidden);
  if (j.contains("alpha") && !j.at("alpha").is_null())
    t.alpha = j.at("alpha").get<double>();
  if (j.contains("gram_method"))
    t.gram.method = parse_gram_method(j.at("gram_method").get<std::string>());
  read_opt(j, "gram_draws", t.gram.draws);
  read_opt(j, "gram_seed", t.gram.seed);
  read_opt(j, "seeds", c.seeds);
  read_opt(j, "out", c.out_dir);
  if (c.seeds.empty())
    throw ConfigError("config: 'seeds' must not be empty");
  return c;
}

ExperimentConfig load_experiment_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path, e.what()));
  }
  return parse_experiment_config(j);
}

json to_json(const ExperimentConfig &c) {
  const TrainingConfig &t = c.training;
  json j{{"schema", kConfigSchema},
         {"topology", topology_json(c.topology)},
         {"data", data_json(c.data)},
         {"mode", to_string(t.mode)},
         {"method", to_string(t.method)},
         {"budget", t.budget.percent ? json(t.budget.to_string()) : json(t.budget.value)},
         {"learning_rate", t.learning_rate},
         {"batch_size", t.batch_size},
         {"rounds", t.rounds},
         {"shards_per_node", t.shards_per_node},
         {"l2", t.l2},
         {"model", to_string(t.model)},
         {"hidden", t.hidden},
         {"gram_method", gram_method_name(t.gram.method)},
         {"gram_draws", t.gram.draws},
         {"gram_seed", t.gram.seed},
         {"seeds", c.seeds},
         {"out", c.out_dir}};
  j["alpha"] = t.alpha ? json(*t.alpha) : json(nullptr);
  return j;
}

LoadedTopology build_topology(const TopologySpec &spec) {
  LoadedTopology out;
  switch (spec.kind) {
  case TopologySpec::Kind::EdgeList: {
    ParsedEdgeList parsed = read_edge_list(spec.path);
    out.graph = std::move(parsed.graph);
    out.labels = std::move(parsed.labels);
    out.remapped = parsed.remapped;
    return out;
  }
  case TopologySpec::Kind::KStar:
    out.graph = kstar_graph(spec.k, spec.n);
    break;
  case TopologySpec::Kind::Gnp:
    out.graph = random_connected_gnp(spec.n, spec.prob, spec.seed);
    break;
  case TopologySpec::Kind::Cycle:
    out.graph = cycle_graph(spec.n);
    break;
  case TopologySpec::Kind::Path:
    out.graph = path_graph(spec.n);
    break;
  }
  for (std::size_t i = 0; i < out.graph.node_count(); ++i)
    out.labels.push_back(std::to_string(i));
  return out;
}

DatasetPair build_datasets(const DataSpec &spec, std::uint64_t run_seed) {
  if (spec.kind == DataSpec::Kind::Synthetic)
    return make_synthetic_dataset(spec.classes, spec.dim, spec.per_class, spec.spread,
                                  spec.seed.value_or(run_seed), spec.condition);
  DatasetPair d;
  d.train = load_idx_dataset(spec.train_images, spec.train_labels, spec.classes);
  d.test = load_idx_dataset(spec.test_images, spec.test_labels, d.train.classes);
  d.test.split = Split::Test;
  if (d.train.dim != d.test.dim)
    throw DataError("train and test IDX images differ in size");
  return d;
}

PartitionSummary cmd_partition(const ExperimentConfig &config) {
  const Graph g = connected_topology(config);
  PartitionSummary s;
  s.matchings = matchings_by_edge_coloring(g);
  s.subsets = subsets_by_vertex_coloring(g);
  s.matchings_report = validate_partition(g, s.matchings);
  s.subsets_report = validate_partition(g, s.subsets);

  json j;
  j["links"] = s.matchings;
  j["links"]["M"] = s.matchings.size();
  j["links"]["max_degree"] = g.max_degree();
  j["links"]["validation"] = s.matchings_report.summary();
  j["nodes"] = s.subsets;
  j["nodes"]["q"] = s.subsets.size();
  j["nodes"]["validation"] = s.subsets_report.summary();
  fs::create_directories(config.out_dir);
  write_json(fs::path(config.out_dir) / "partition.json", j);
  return s;
}

std::string cmd_importance(const ExperimentConfig &config) {
  const Graph g = build_topology(config.topology).graph;
  const auto target = config.training.mode == Mode::Links ? ImportanceTarget::Edges : ImportanceTarget::Nodes;
  const ImportanceVector v = compute_importance(g, config.training.method, target);
  std::string csv = "element_id,score_bits,rank\n";
  for (std::size_t i = 0; i < v.scores.size(); ++i)
    csv += fmt::format("{},{:.12g},{}\n", i, v.scores[i], v.ranks[i]);
  fs::create_directories(config.out_dir);
  write_text(fs::path(config.out_dir) / "importance.csv", csv);
  return csv;
}

SchedulePlan cmd_optimize(const ExperimentConfig &config) {
  const Graph g = connected_topology(config);
  const TrainingConfig &t = config.training;
  if (!(t.budget.value > 0.0))
    throw ScheduleError("budget must be positive");
  SchedulePlan plan = plan_schedule(g, t.mode, t.method, t.budget, t.gram, t.alpha);
  fs::create_directories(config.out_dir);
  write_json(fs::path(config.out_dir) / "policy.json", plan.policy);
  write_json(fs::path(config.out_dir) / "report.json", *plan.report);
  return plan;
}

TrainingTrace simulate_seed(const ExperimentConfig &config, std::uint64_t seed) {
  const Graph g = connected_topology(config);
  TrainingConfig t = config.training;
  t.seed = seed;
  const DatasetPair data = build_datasets(config.data, seed);
  return run_dsgd(g, data, t);
}

std::vector<fs::path> cmd_simulate(const ExperimentConfig &config) {
  const Graph g = connected_topology(config);
  const TrainingConfig &t = config.training;
  const SchedulePlan plan = plan_schedule(g, t.mode, t.method, t.budget, t.gram, t.alpha);

  const fs::path out(config.out_dir);
  fs::create_directories(out);
  write_json(out / "config.json", to_json(config));
  write_json(out / "policy.json", plan.policy);
  write_json(out / "report.json", plan.report ? json(*plan.report) : json(nullptr));

  std::vector<fs::path> written;
  for (std::uint64_t seed : config.seeds) {
    TrainingConfig run = t;
    run.seed = seed;
    const DatasetPair data = build_datasets(config.data, seed);
    const TrainingTrace trace = run_dsgd(g, data, run, plan);
    std::ostringstream csv;
    write_trace_csv(csv, trace);
    const fs::path path = out / fmt::format("trace_seed{}.csv", seed);
    write_text(path, csv.str());
    written.push_back(path);
  }
  return written;
}

std::optional<std::size_t> slots_to_threshold(const std::vector<RoundRecord> &trace, double threshold) {
  for (const RoundRecord &r : trace)
    if (r.test_acc >= threshold)
      return r.cum_slots;
  return std::nullopt;
}

ComparisonReport compare_traces(
    const std::vector<std::pair<std::string, std::vector<std::vector<RoundRecord>>>> &sets,
    const std::vector<double> &thresholds) {
  ComparisonReport report;
  report.thresholds = thresholds;
  for (const auto &[name, traces] : sets) {
    MethodStats m;
    m.name = name;
    for (double thr : thresholds) {
      ThresholdStats s;
      s.threshold = thr;
      s.runs = traces.size();
      std::vector<double> slots;
      for (const auto &trace : traces) {
        const auto hit = slots_to_threshold(trace, thr);
        if (hit)
          ++s.reached;
        const std::size_t censored = trace.empty() ? 0 : trace.back().cum_slots;
        slots.push_back(static_cast<double>(hit.value_or(censored)));
      }
      if (!slots.empty()) {
        double sum = 0.0;
        for (double v : slots)
          sum += v;
        s.mean_slots = sum / static_cast<double>(slots.size());
        double ss = 0.0;
        for (double v : slots)
          ss += (v - s.mean_slots) * (v - s.mean_slots);
        s.std_slots = slots.size() > 1 ? std::sqrt(ss / static_cast<double>(slots.size() - 1)) : 0.0;
      }
      m.thresholds.push_back(s);
    }
    report.methods.push_back(std::move(m));
  }
  return report;
}

std::string comparison_csv(const ComparisonReport &report) {
  std::string csv = "method,threshold,runs,reached,mean_slots,std_slots\n";
  for (const MethodStats &m : report.methods)
    for (const ThresholdStats &s : m.thresholds) {
      if (s.reached == 0)
        csv += fmt::format("{},{},{},0,not reached,not reached\n", m.name, s.threshold, s.runs);
      else
        csv += fmt::format("{},{},{},{},{:.6g},{:.6g}\n", m.name, s.threshold, s.runs, s.reached,
                           s.mean_slots, s.std_slots);
    }
  return csv;
}

ComparisonReport cmd_compare(const std::vector<TraceSet> &sets, const std::vector<double> &thresholds,
                             const std::optional<fs::path> &out_csv) {
  if (sets.size() < 2)
    throw ConfigError("compare needs at least two trace sets");
  std::vector<std::pair<std::string, std::vector<std::vector<RoundRecord>>>> loaded;
  for (const TraceSet &set : sets) {
    glob_t matches{};
    const int rc = ::glob(set.pattern.c_str(), 0, nullptr, &matches);
    std::vector<std::string> files;
    if (rc == 0)
      for (std::size_t i = 0; i < matches.gl_pathc; ++i)
        files.emplace_back(matches.gl_pathv[i]);
    globfree(&matches);
    if (files.empty())
      throw ConfigError(fmt::format("trace set '{}': pattern '{}' matched no files", set.name, set.pattern));
    std::sort(files.begin(), files.end());
    std::vector<std::vector<RoundRecord>> traces;
    for (const auto &file : files) {
      std::ifstream in(file);
      if (!in)
        throw DataError("cannot open trace '" + file + "'");
      try {
        traces.push_back(read_trace_csv(in));
      } catch (const DataError &e) {
        throw DataError(fmt::format("{}: {}", file, e.what()));
      }
    }
    loaded.emplace_back(set.name, std::move(traces));
  }
  ComparisonReport report = compare_traces(loaded, thresholds);
  if (out_csv) {
    if (out_csv->has_parent_path())
      fs::create_directories(out_csv->parent_path());
    write_text(*out_csv, comparison_csv(report));
  }
  return report;
}

} // namespace edsgd
