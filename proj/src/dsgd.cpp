#include "edsgd/dsgd.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "edsgd/error.hpp"
#include "edsgd/rng.hpp"

namespace edsgd {

Budget Budget::parse(std::string_view text) {
  Budget b;
  b.percent = !text.empty() && text.back() == '%';
  if (b.percent)
    text.remove_suffix(1);
  const std::string s(text);
  std::size_t used = 0;
  try {
    b.value = std::stod(s, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(b.value) || b.value < 0.0)
    throw ConfigError(fmt::format("bad budget '{}' (expected a slot count or a percentage)", text));
  return b;
}

double Budget::resolve(std::size_t part_count) const {
  return percent ? value / 100.0 * static_cast<double>(part_count) : value;
}

std::string Budget::to_string() const {
  return percent ? fmt::format("{}%", value) : fmt::format("{}", value);
}

SchedulePlan plan_schedule(const Graph &g, Mode mode, ImportanceMethod method, const Budget &budget,
                           GramOptions gram, std::optional<double> fixed_alpha) {
  SchedulePlan plan;
  plan.partition = mode == Mode::Links ? matchings_by_edge_coloring(g) : subsets_by_vertex_coloring(g);
  plan.importance = compute_importance(
      g, method, mode == Mode::Links ? ImportanceTarget::Edges : ImportanceTarget::Nodes);

  const double b = budget.resolve(plan.partition.size());
  if (b == 0.0) {
    plan.policy = SchedulePolicy{plan.partition, std::vector<double>(plan.partition.size(), 0.0), 0.0, 0.0};
    plan.alpha = 0.0;
    return plan;
  }
  plan.policy = build_policy(plan.partition, plan.importance.scores, b);
  plan.moments = laplacian_moments(g, plan.partition, plan.policy.probs, gram);
  if (fixed_alpha) {
    SpectralReport r;
    r.alpha = *fixed_alpha;
    r.objective = expected_objective(plan.moments->mean, plan.moments->gram, r.alpha);
    r.deviation = deviation_norm(Matrix::identity(g.node_count()) - plan.moments->mean * r.alpha);
    r.spectral_gap = 1.0 - r.deviation;
    r.convergent = r.objective < 1.0;
    plan.report = r;
  } else {
    plan.report = optimize_alpha(plan.moments->mean, plan.moments->gram);
  }
  plan.alpha = plan.report->alpha;
  return plan;
}

std::vector<std::size_t> draw_minibatch(std::size_t local_size, std::size_t batch_size,
                                        std::uint64_t seed, std::uint64_t round, std::uint64_t node) {
  std::vector<std::size_t> ids(local_size);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  const std::size_t take = std::min(batch_size, local_size);
  Rng rng(seed, Stream::MiniBatch, {round, node});
  // Partial Fisher-Yates: the first `take` slots are a uniform sample
  // without replacement.
  for (std::size_t k = 0; k < take; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.uniform() * static_cast<double>(local_size - k));
    std::swap(ids[k], ids[std::min(j, local_size - 1)]);
  }
  ids.resize(take);
  return ids;
}

Params local_sgd_step(const Model &model, std::span<const double> params, const Dataset &local,
                      double learning_rate, std::size_t batch_size, std::uint64_t seed,
                      std::uint64_t round, std::uint64_t node) {
  Params next(params.begin(), params.end());
  if (learning_rate == 0.0 || local.size() == 0)
    return next;
  const auto batch = draw_minibatch(local.size(), batch_size, seed, round, node);
  Params grad;
  model.loss_grad(params, local, batch, grad);
  for (std::size_t k = 0; k < next.size(); ++k)
    next[k] -= learning_rate * grad[k];
  return next;
}

void mix_parameters(const Matrix &w, std::vector<Params> &params) {
  const std::size_t n = params.size();
  if (w.order() != n)
    throw NumericError("mixing matrix order does not match node count");
  std::vector<Params> mixed(n, Params(n == 0 ? 0 : params[0].size(), 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double wij = w(i, j);
      if (wij == 0.0)
        continue;
      for (std::size_t k = 0; k < params[j].size(); ++k)
        mixed[i][k] += wij * params[j][k];
    }
  params = std::move(mixed);
}

Params average_params(const std::vector<Params> &params) {
  Params avg(params.empty() ? 0 : params[0].size(), 0.0);
  for (const Params &p : params)
    for (std::size_t k = 0; k < p.size(); ++k)
      avg[k] += p[k];
  for (double &v : avg)
    v /= static_cast<double>(params.size());
  return avg;
}

double consensus_distance(const std::vector<Params> &params) {
  const Params avg = average_params(params);
  double d = 0.0;
  for (const Params &p : params)
    for (std::size_t k = 0; k < p.size(); ++k)
      d += (p[k] - avg[k]) * (p[k] - avg[k]);
  return d;
}

namespace {

void check_config(const TrainingConfig &c) {
  if (!(c.learning_rate >= 0.0))
    throw ConfigError("learning rate must be non-negative");
  if (c.batch_size == 0)
    throw ConfigError("batch size must be at least 1");
  if (c.rounds == 0)
    throw ConfigError("rounds must be at least 1");
}

void guard_divergence(double loss, double initial, std::size_t round) {
  if (!std::isfinite(loss) || loss > kDivergenceFactor * initial)
    throw DivergenceError(fmt::format(
        "training diverged at round {}: loss {} exceeds {}x the initial loss {}", round, loss,
        kDivergenceFactor, initial));
}

} // namespace

TrainingTrace run_dsgd(const Graph &g, const DatasetPair &data, const TrainingConfig &config) {
  return run_dsgd(g, data, config,
                  plan_schedule(g, config.mode, config.method, config.budget, config.gram, config.alpha));
}

TrainingTrace run_dsgd(const Graph &g, const DatasetPair &data, const TrainingConfig &config,
                       const SchedulePlan &plan) {
  check_config(config);
  if (!is_connected(g))
    throw GraphError("training topology must be connected");
  const std::size_t n = g.node_count();
  const auto locals = partition_noniid(data.train, n, config.shards_per_node, config.seed);
  const auto model = make_model(config.model, data.train.classes, data.train.dim, config.l2, config.hidden);

  std::vector<Params> x(n, model->initial_params(config.seed));
  TrainingTrace trace;
  trace.alpha = plan.alpha;
  trace.initial_loss = model->loss(x[0], data.train);

  std::size_t slots = 0;
  const bool communicates = plan.alpha > 0.0;
  for (std::size_t k = 1; k <= config.rounds; ++k) {
    for (std::size_t i = 0; i < n; ++i)
      x[i] = local_sgd_step(*model, x[i], locals[i].data, config.learning_rate, config.batch_size,
                            config.seed, k, i);

    const ActivationPattern pattern = sample_active_parts(plan.policy, config.seed, k);
    if (communicates && !pattern.active_parts.empty())
      mix_parameters(mixing_matrix(sampled_laplacian(g, pattern), plan.alpha).weights, x);
    slots += round_slot_cost(pattern);

    const Params avg = average_params(x);
    RoundRecord rec;
    rec.round = k;
    rec.cum_slots = slots;
    rec.train_loss = model->loss(avg, data.train);
    rec.test_acc = model->accuracy(avg, data.test);
    rec.active_parts = pattern.active_parts.size();
    rec.consensus_dist = consensus_distance(x);
    guard_divergence(rec.train_loss, trace.initial_loss, k);
    trace.records.push_back(rec);
  }
  trace.final_params = std::move(x);
  return trace;
}

TrainingTrace centralized_baseline(const DatasetPair &data, const TrainingConfig &config,
                                   std::size_t nodes) {
  check_config(config);
  const auto model = make_model(config.model, data.train.classes, data.train.dim, config.l2, config.hidden);
  Params x = model->initial_params(config.seed);
  TrainingTrace trace;
  trace.initial_loss = model->loss(x, data.train);
  const std::size_t batch = std::max<std::size_t>(1, nodes) * config.batch_size;
  for (std::size_t k = 1; k <= config.rounds; ++k) {
    // Node index `nodes` is never used by a network node, so this stream is
    // disjoint from every D-SGD mini-batch stream.
    x = local_sgd_step(*model, x, data.train, config.learning_rate, batch, config.seed, k, nodes);
    RoundRecord rec;
    rec.round = k;
    rec.train_loss = model->loss(x, data.train);
    rec.test_acc = model->accuracy(x, data.test);
    guard_divergence(rec.train_loss, trace.initial_loss, k);
    trace.records.push_back(rec);
  }
  trace.final_params = {std::move(x)};
  return trace;
}

void write_trace_csv(std::ostream &out, const TrainingTrace &trace) {
  out << "round,cum_slots,train_loss,test_acc,active_parts,consensus_dist\n";
  for (const RoundRecord &r : trace.records)
    out << fmt::format("{},{},{:.12g},{:.12g},{},{:.12g}\n", r.round, r.cum_slots, r.train_loss,
                       r.test_acc, r.active_parts, r.consensus_dist);
}

std::vector<RoundRecord> read_trace_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("round,cum_slots,train_loss,test_acc", 0) != 0)
    throw DataError("trace CSV: missing or unexpected header");
  std::vector<RoundRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    std::istringstream fields(line);
    RoundRecord r;
    char c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0;
    if (!(fields >> r.round >> c1 >> r.cum_slots >> c2 >> r.train_loss >> c3 >> r.test_acc >> c4 >>
          r.active_parts >> c5 >> r.consensus_dist) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || c5 != ',')
      throw DataError(fmt::format("trace CSV: malformed line {}: '{}'", line_no, line));
    if (!out.empty() && r.cum_slots < out.back().cum_slots)
      throw DataError(fmt::format("trace CSV: cumulative slots decrease at line {}", line_no));
    out.push_back(r);
  }
  return out;
}

} // namespace edsgd
