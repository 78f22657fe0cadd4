// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "edsgd/dsgd.hpp"
#include "edsgd/experiment.hpp"
#include "edsgd/importance.hpp"
#include "edsgd/mixing.hpp"
#include "edsgd/partition.hpp"
#include "edsgd/schedule.hpp"
#include "oracles.hpp"

using namespace edsgd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  std::string tolerance;
  double time_limit_s; // <= 0: no limit
  std::function<Outcome()> run;
};

// ---------------------------------------------------------------- 1

Outcome entropy_oracle() {
  const Graph p3 = path_graph(3);
  const Graph star = star_graph(4);
  const std::vector<double> p3_expect{0.91830, 1.5, 0.91830};
  const std::vector<double> star_expect{1.79248, 0.81128, 0.81128, 0.81128};
  double worst_oracle = 0.0, worst_literal = 0.0;
  auto check = [&](const Graph &g, const std::vector<double> &literal) {
    const auto a = oracle::dense(g);
    const ImportanceVector v = node_importance(g);
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      worst_oracle = std::max(worst_oracle, std::abs(v.scores[i] - oracle::entropy(a, i)));
      worst_literal = std::max(worst_literal, std::abs(v.scores[i] - literal[i]));
    }
    return v.ranks;
  };
  const auto p3_ranks = check(p3, p3_expect);
  const auto star_ranks = check(star, star_expect);
  const bool ranks_ok = p3_ranks[1] == 1 && p3_ranks[0] == 2 && p3_ranks[2] == 2 && star_ranks[0] == 1 &&
                        star_ranks[1] == 2 && star_ranks[2] == 2 && star_ranks[3] == 2;
  return {worst_oracle <= 1e-5 && worst_literal <= 1e-5 && ranks_ok,
          fmt::format("max |E - direct| = {:.2e}, max |E - listed| = {:.2e}, center/hub ranked first: {}",
                      worst_oracle, worst_literal, ranks_ok ? "yes" : "no")};
}

// ---------------------------------------------------------------- 2

bool matchings_ok(const Graph &g, const Partition &m) {
  std::vector<int> seen(g.edge_count(), 0);
  for (const auto &part : m.parts) {
    std::vector<int> touched(g.node_count(), 0);
    for (std::size_t e : part) {
      if (e >= g.edge_count() || seen[e]++)
        return false;
      const Edge ed = g.edge(e);
      if (touched[ed.first]++ || touched[ed.second]++)
        return false;
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
}

bool subsets_ok(const Graph &g, const Partition &s) {
  const auto a = oracle::dense(g);
  const std::size_t n = g.node_count();
  std::vector<int> seen(n, 0);
  for (const auto &part : s.parts) {
    for (std::size_t v : part)
      if (v >= n || seen[v]++)
        return false;
    for (std::size_t x = 0; x < part.size(); ++x)
      for (std::size_t y = x + 1; y < part.size(); ++y) {
        const std::size_t u = part[x], v = part[y];
        if (a[u][v])
          return false;
        for (std::size_t w = 0; w < n; ++w)
          if (a[u][w] && a[v][w])
            return false;
      }
  }
  return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

Outcome partition_validity() {
  Rng rng(2024);
  int failures = 0;
  std::size_t worst_excess = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 29);
    const Graph g = oracle::random_connected(n, 0.4 * rng.uniform(), rng);
    const Partition m = matchings_by_edge_coloring(g);
    const Partition s = subsets_by_vertex_coloring(g);
    bool ok = validate_partition(g, m).valid() && validate_partition(g, s).valid();
    ok = ok && matchings_ok(g, m) && subsets_ok(g, s);
    ok = ok && m.size() <= g.max_degree() + 1;
    if (m.size() > g.max_degree())
      ++worst_excess;
    failures += ok ? 0 : 1;
  }
  return {failures == 0, fmt::format("{} of 200 graphs failed; {} needed delta+1 matchings", failures, worst_excess)};
}

// ---------------------------------------------------------------- 3

Outcome waterfilling() {
  Rng rng(77);
  double worst_sum = 0.0;
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform() * 30);
    std::vector<double> b(m);
    for (double &v : b)
      v = rng.uniform();
    double total = 0.0;
    for (double v : b)
      total += v;
    for (double &v : b)
      v /= total;
    const double budget = std::max(1e-3, rng.uniform()) * static_cast<double>(m);
    const auto p = budgeted_probabilities(b, budget).probs;
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      s += p[i];
      if (p[i] < 0.0 || p[i] > 1.0)
        ++violations;
      for (std::size_t j = 0; j < m; ++j)
        if (b[i] > b[j] && p[i] < p[j])
          ++violations;
    }
    worst_sum = std::max(worst_sum, std::abs(s - budget));
  }
  const auto ex = budgeted_probabilities(std::vector<double>{0.6, 0.3, 0.1}, 2.0).probs;
  const bool exact = ex == std::vector<double>{1.0, 0.75, 0.25};
  return {worst_sum <= 1e-9 && violations == 0 && exact,
          fmt::format("max |sum p - B| = {:.2e}, range/order violations = {}, [0.6,0.3,0.1] B=2 -> [{},{},{}]",
                      worst_sum, violations, ex[0], ex[1], ex[2])};
}

// ---------------------------------------------------------------- 4

Outcome expectation_oracle() {
  struct Case {
    std::string name;
    Graph g;
    Mode mode;
    double budget_fraction;
  };
  const std::vector<Case> cases{{"P3 nodes", path_graph(3), Mode::Nodes, 0.5},
                                {"P3 links", path_graph(3), Mode::Links, 0.6},
                                {"C6 nodes", cycle_graph(6), Mode::Nodes, 0.5},
                                {"C6 links", cycle_graph(6), Mode::Links, 0.4}};
  std::size_t entries = 0, outside = 0;
  double worst_z = 0.0, worst_closed = 0.0;
  std::string where;
  for (const auto &c : cases) {
    const Partition parts = c.mode == Mode::Links ? matchings_by_edge_coloring(c.g) : subsets_by_vertex_coloring(c.g);
    const auto target = c.mode == Mode::Links ? ImportanceTarget::Edges : ImportanceTarget::Nodes;
    const auto scores = compute_importance(c.g, ImportanceMethod::Entropy, target).scores;
    const SchedulePolicy policy = build_policy(parts, scores, c.budget_fraction * static_cast<double>(parts.size()));
    const auto exact = laplacian_moments(c.g, parts, policy.probs, {GramMethod::Enumerate});
    const auto mc = laplacian_moments(c.g, parts, policy.probs, {GramMethod::MonteCarlo, 100000, 1});
    auto compare = [&](const Matrix &e, const Matrix &m, const Matrix &se, const char *which) {
      for (std::size_t i = 0; i < e.order(); ++i)
        for (std::size_t j = 0; j < e.order(); ++j) {
          ++entries;
          const double diff = std::abs(e(i, j) - m(i, j));
          const double z = se(i, j) > 0 ? diff / se(i, j) : (diff > 1e-12 ? 1e9 : 0.0);
          if (z > worst_z) {
            worst_z = z;
            where = fmt::format("{} {}({},{})", c.name, which, i, j);
          }
          if (z > 3.0)
            ++outside;
        }
    };
    compare(exact.mean, mc.mean, mc.mean_stderr, "E[L]");
    compare(exact.gram, mc.gram, mc.gram_stderr, "E[L'L]");
    if (c.mode == Mode::Links) {
      const Matrix closed = expected_laplacian_gram(c.g, parts, policy.probs, {GramMethod::ClosedForm});
      worst_closed = std::max(worst_closed, closed.max_abs_diff(exact.gram));
    }
  }
  return {outside == 0 && worst_closed <= 1e-12,
          fmt::format("{}/{} entries beyond 3 s.e. (worst {:.2f} s.e. at {}); closed form vs enumeration {:.2e}",
                      outside, entries, worst_z, where, worst_closed)};
}

// ---------------------------------------------------------------- 5

Outcome alpha_optimization() {
  const Matrix l = laplacian(path_graph(3));
  const SpectralReport p3 = optimize_alpha(l, l * l);
  const bool closed = std::abs(p3.alpha - 0.5) <= 1e-4 && std::abs(p3.objective - 0.25) <= 1e-4;

  Rng rng(5);
  int mismatches = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = oracle::random_connected(3 + static_cast<std::size_t>(rng.uniform() * 6), 0.3, rng);
    const bool links = trial % 2 == 0;
    const Partition parts = links ? matchings_by_edge_coloring(g) : subsets_by_vertex_coloring(g);
    std::vector<double> p(parts.size());
    for (double &v : p)
      v = 0.05 + 0.95 * rng.uniform();
    const auto mom = laplacian_moments(g, parts, p);
    const SpectralReport r = optimize_alpha(mom.mean, mom.gram);
    constexpr int kGrid = 10000;
    const double step = r.alpha_max / kGrid;
    double best = 1e300, best_alpha = 0.0;
    for (int k = 1; k <= kGrid; ++k) {
      const double v = expected_objective(mom.mean, mom.gram, step * k);
      if (v < best) {
        best = v;
        best_alpha = step * k;
      }
    }
    const double off = std::abs(r.alpha - best_alpha) / step;
    worst = std::max(worst, off);
    if (off > 1.0 + 1e-9)
      ++mismatches;
  }
  return {closed && mismatches == 0,
          fmt::format("P3: alpha* = {:.6f}, s* = {:.6f}; grid: {} of 50 outside one step (worst {:.3f} steps)",
                      p3.alpha, p3.objective, mismatches, worst)};
}

// ---------------------------------------------------------------- 6

Outcome mixing_invariants() {
  Rng rng(606);
  double worst = 0.0;
  int negative = 0;
  for (int draw = 0; draw < 500; ++draw) {
    const Graph g = oracle::random_connected(2 + static_cast<std::size_t>(rng.uniform() * 14), 0.3, rng);
    const bool links = rng.uniform() < 0.5;
    const Partition parts = links ? matchings_by_edge_coloring(g) : subsets_by_vertex_coloring(g);
    std::vector<double> p(parts.size());
    for (double &v : p)
      v = rng.uniform();
    const SchedulePolicy policy{parts, p, 0.0, 0.0};
    const auto pattern = sample_active_parts(policy, 606, static_cast<std::uint64_t>(draw));
    const double alpha = (1.0 - rng.uniform()) / static_cast<double>(g.max_degree());
    const Matrix w = mixing_matrix(sampled_laplacian(g, pattern), alpha).weights;
    worst = std::max(worst, w.asymmetry());
    for (std::size_t i = 0; i < w.order(); ++i) {
      double row = 0.0, col = 0.0;
      for (std::size_t j = 0; j < w.order(); ++j) {
        row += w(i, j);
        col += w(j, i);
        if (w(i, j) < -1e-12)
          ++negative;
      }
      worst = std::max({worst, std::abs(row - 1.0), std::abs(col - 1.0)});
    }
  }

  const Matrix w = mixing_matrix(laplacian(path_graph(3)), 0.5).weights;
  const double rho = deviation_norm(w);
  std::vector<Params> x{{1.0, -0.25}, {-3.0, 1.5}, {2.0, -1.25}}; // zero network mean
  double prev = std::sqrt(consensus_distance(x)), worst_rate = 0.0;
  for (int step = 0; step < 50; ++step) {
    mix_parameters(w, x);
    const double now = std::sqrt(consensus_distance(x));
    worst_rate = std::max(worst_rate, std::abs(now / prev - rho));
    prev = now;
  }
  return {worst <= 1e-9 && negative == 0 && worst_rate <= 1e-9,
          fmt::format("max symmetry/row/column error {:.2e}, negative weights {}; P3 per-step rate off rho={} by {:.2e}",
                      worst, negative, rho, worst_rate)};
}

// ---------------------------------------------------------------- 7

Outcome gradient_check() {
  const auto data = make_synthetic_dataset(10, 20, 20, 0.5, 3).train;
  const LogisticModel model(10, 20, 1e-3);
  Rng rng(7);
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    Params x(model.parameter_count()), dir(model.parameter_count());
    for (double &v : x)
      v = 0.3 * rng.normal();
    for (double &v : dir)
      v = rng.normal();
    std::vector<std::size_t> batch;
    for (int k = 0; k < 16; ++k)
      batch.push_back(static_cast<std::size_t>(rng.uniform() * static_cast<double>(data.size())));
    Params grad, scratch;
    model.loss_grad(x, data, batch, grad);
    double analytic = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k)
      analytic += grad[k] * dir[k];
    constexpr double h = 1e-6;
    Params plus = x, minus = x;
    for (std::size_t k = 0; k < x.size(); ++k) {
      plus[k] += h * dir[k];
      minus[k] -= h * dir[k];
    }
    const double numeric =
        (model.loss_grad(plus, data, batch, scratch) - model.loss_grad(minus, data, batch, scratch)) / (2 * h);
    worst = std::max(worst, std::abs(numeric - analytic) / std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
  }
  return {worst < 1e-5, fmt::format("max relative error {:.2e} over 100 draws", worst)};
}

// ---------------------------------------------------------------- 8

// Shared synthetic workload for the training criteria. Isotropic blobs are
// solved by the very first averaged gradient step, so the features go through
// an ill-conditioned map to make accuracy build up over many rounds.
DataSpec blobs() {
  DataSpec d;
  d.classes = 10;
  d.dim = 20;
  d.per_class = 100;
  d.spread = 0.25;
  d.condition = 5.0;
  return d;
}

constexpr double kLearningRate = 0.5;

Outcome convex_convergence() {
  const Graph g = random_connected_gnp(15, 0.25, 8);
  TrainingConfig c;
  c.mode = Mode::Links;
  c.budget = Budget{100, true};
  // The D-SGD bias over the centralized run grows roughly with lr^2 on
  // non-IID shards (about 5.7% at 0.5), so this uses a smaller step and more
  // rounds than criterion 9.
  c.learning_rate = 0.2;
  c.batch_size = 16;
  c.rounds = 1500;
  const SchedulePlan plan = plan_schedule(g, c.mode, c.method, c.budget);
  double worst = 0.0, mean_dsgd = 0.0, mean_central = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    c.seed = seed;
    const DatasetPair data = build_datasets(blobs(), seed);
    const double dsgd = run_dsgd(g, data, c, plan).records.back().train_loss;
    const double central = centralized_baseline(data, c, g.node_count()).records.back().train_loss;
    worst = std::max(worst, std::abs(dsgd - central) / central);
    mean_dsgd += dsgd / 10;
    mean_central += central / 10;
  }
  return {worst <= 0.05, fmt::format("mean final loss D-SGD {:.5f} vs centralized {:.5f}; worst per-seed gap {:.2f}%",
                                     mean_dsgd, mean_central, 100 * worst)};
}

// ---------------------------------------------------------------- 9

struct SlotStats {
  double mean = 0.0;
  double std = 0.0;
  std::size_t reached = 0;
};

SlotStats slots_to(const Graph &g, ImportanceMethod method, double budget_pct, double threshold,
                   std::size_t rounds, int seeds) {
  TrainingConfig c;
  c.mode = Mode::Nodes;
  c.method = method;
  c.budget = Budget{budget_pct, true};
  c.learning_rate = kLearningRate;
  c.batch_size = 16;
  c.rounds = rounds;
  const SchedulePlan plan = plan_schedule(g, c.mode, c.method, c.budget);
  std::vector<std::vector<RoundRecord>> traces;
  for (int s = 1; s <= seeds; ++s) {
    c.seed = static_cast<std::uint64_t>(s);
    traces.push_back(run_dsgd(g, build_datasets(blobs(), c.seed), c, plan).records);
  }
  const auto report = compare_traces({{"x", traces}}, {threshold});
  const ThresholdStats &t = report.methods[0].thresholds[0];
  return {t.mean_slots, t.std_slots, t.reached};
}

Outcome directional_claim() {
  constexpr int kSeeds = 10;
  std::string detail;
  bool pass = true;
  struct Setting {
    std::string name;
    Graph g;
    double budget;
    double threshold;
    std::size_t rounds;
  };
  const std::vector<Setting> settings{{"2-star n=15 B=25% @70%", kstar_graph(2, 15), 25, 0.7, 600},
                                      {"gnp n=30 B=35% @90%", random_connected_gnp(30, 0.15, 3), 35, 0.9, 600}};
  for (const auto &s : settings) {
    const SlotStats e = slots_to(s.g, ImportanceMethod::Entropy, s.budget, s.threshold, s.rounds, kSeeds);
    const SlotStats b = slots_to(s.g, ImportanceMethod::Betweenness, s.budget, s.threshold, s.rounds, kSeeds);
    const double slack = std::max(e.std, b.std);
    // If nobody reaches the threshold both means are censored final slot
    // counts and the comparison says nothing.
    const bool vacuous = e.reached == 0 && b.reached == 0;
    const bool ok = !vacuous && e.mean <= b.mean + slack;
    pass = pass && ok;
    detail += fmt::format("{}{}: entropy {:.1f}+-{:.1f} ({}/{} reached) vs betweenness {:.1f}+-{:.1f} ({}/{}) {}",
                          detail.empty() ? "" : "; ", s.name, e.mean, e.std, e.reached, kSeeds, b.mean, b.std,
                          b.reached, kSeeds, vacuous ? "vacuous" : ok ? "ok" : "violated");
  }
  return {pass, detail};
}

// ---------------------------------------------------------------- 10

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "edsgd_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path config = dir / "config.json";
  std::ofstream(config) << R"({"schema": 1, "topology": "kstar:3:12", "mode": "nodes", "budget": "40%",
  "rounds": 40, "seeds": [1, 2, 3], "data": {"classes": 5, "dim": 8, "per_class": 40}})";
  const std::string cli = EDSGD_CLI_PATH;
  int bad_exit = 0;
  for (const char *run : {"a", "b"}) {
    const std::string cmd = cli + " simulate --config " + config.string() + " --out " + (dir / run).string() +
                            " > " + (dir / (std::string(run) + ".log")).string() + " 2>&1";
    if (std::system(cmd.c_str()) != 0)
      ++bad_exit;
  }
  int identical = 0, compared = 0;
  for (int seed = 1; seed <= 3; ++seed) {
    const std::string name = fmt::format("trace_seed{}.csv", seed);
    const std::string a = slurp(dir / "a" / name), b = slurp(dir / "b" / name);
    ++compared;
    if (!a.empty() && a == b)
      ++identical;
  }
  return {bad_exit == 0 && identical == compared,
          fmt::format("{}/{} trace files byte-identical across two CLI runs", identical, compared)};
}

} // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "entropy oracle", "1e-5", 1, entropy_oracle},
      {2, "partition validity", "exact", 30, partition_validity},
      {3, "waterfilling exactness", "1e-9", 0, waterfilling},
      {4, "expectation oracle", "3 s.e. / 1e-12", 0, expectation_oracle},
      {5, "alpha optimization", "1e-4 / grid step", 0, alpha_optimization},
      {6, "mixing invariants", "1e-9", 0, mixing_invariants},
      {7, "gradient check", "1e-5 relative", 0, gradient_check},
      {8, "convex convergence", "5% of centralized", 120, convex_convergence},
      {9, "entropy vs betweenness ordering", "1 seed-stddev", 0, directional_claim},
      {10, "simulate determinism", "byte-identical", 0, determinism},
  };
  int failed = 0;
  for (const Criterion &c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.time_limit_s <= 0 || secs < c.time_limit_s;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    const std::string limit = c.time_limit_s > 0 ? fmt::format(" (limit {}s)", c.time_limit_s) : "";
    std::cout << fmt::format("[{}] {:2d} {} | tol {} | {:.2f}s{} | {}\n", pass ? "PASS" : "FAIL", c.id, c.name,
                             c.tolerance, secs, limit, o.detail)
              << std::flush;
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
