// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "fixtures.hpp"
#include "kraft/agent.hpp"
#include "kraft/engine.hpp"
#include "kraft/kg.hpp"
#include "kraft/learn.hpp"
#include "kraft/transform.hpp"
#include "oracles.hpp"

namespace {

using namespace kraft;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using E = FeatureExpr;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

const KnowledgeGraph& planted_kg() {
  static const KnowledgeGraph kg = testing::default_kg().with_mapping(testing::planted_mapping());
  return kg;
}

constexpr std::uint64_t kSeeds = 10;

// Default-configuration runs on the planted task, shared by criteria 7 to 9.
struct PlantedRuns {
  std::vector<double> baseline, oracle, dqn, random, order1, order2;
  double slowest_run = 0.0;
};

const PlantedRuns& planted_runs() {
  static const PlantedRuns runs = [] {
    PlantedRuns r;
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
      const Dataset d = testing::planted_dataset(seed);
      EngineConfig cfg;
      cfg.seed = seed;

      auto t0 = Clock::now();
      const FEResult dqn = run(cfg, d, planted_kg());
      r.slowest_run = std::max(r.slowest_run, seconds_since(t0));
      r.baseline.push_back(dqn.baseline_score);
      r.dqn.push_back(dqn.best_score);

      FeatureTable planted;
      const CandidateFeature f =
          apply(E::binary(OpId::Div, E::raw("x1"), E::unary(OpId::Square, E::raw("x2"))), d);
      planted.add("planted", f.values, f.missing);
      LearnerSpec linear{LearnerKind::Linear};
      r.oracle.push_back(evaluate_cv(linear, planted, TargetVector::from(d), cfg.k, derive_seed(seed, 1)));

      EngineConfig rnd = cfg;
      rnd.policy = Policy::Random;
      t0 = Clock::now();
      r.random.push_back(run(rnd, d, planted_kg()).best_score);
      r.slowest_run = std::max(r.slowest_run, seconds_since(t0));

      const std::vector<int> orders = {1, 2};
      const auto sweep = max_order_sweep(cfg, d, planted_kg(), orders);
      r.order1.push_back(sweep[0].best_score);
      r.order2.push_back(sweep[1].best_score);
    }
    return r;
  }();
  return runs;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

Outcome search_space_count() {
  const auto t0 = Clock::now();
  const auto ops = catalog();
  Rng rng(31);
  std::size_t checked = 0;
  for (std::uint64_t p = 1; p <= 4; ++p) {
    for (int subset = 0; subset < 200; ++subset) {
      std::map<std::uint64_t, std::uint64_t> by_arity;
      for (const auto& op : ops) {
        if (subset > 0 && rng.uniform() < 0.5) continue;  // subset 0 is the full catalog
        const bool one_operand = op.arity == Arity::Unary || op.arity == Arity::DateOp;
        ++by_arity[one_operand ? 1 : 2];
      }
      const auto fast = search_space_size(p, by_arity);
      const auto slow = testing::enumerate_search_space(p, by_arity);
      if (fast != slow)
        return {false, "p=" + std::to_string(p) + ": " + std::to_string(fast) + " != " + std::to_string(slow)};
      ++checked;
    }
  }
  const double t = seconds_since(t0);
  return {t < 1.0, std::to_string(checked) + " catalog subsets, " + fmt("%.3f s", t)};
}

Outcome rule_fixpoint() {
  const Dataset shop = testing::csv_dataset(
      "weight,height,t_min,t_max,price,stock,store,y\n"
      "70,1.75,3,9,2.5,40,north,1\n"
      "80,1.80,5,12,3.0,55,south,2\n"
      "60,1.60,7,15,4.5,35,north,3\n",
      "y", Task::Regression);
  const KnowledgeGraph kg = testing::default_kg().with_mapping({
      {"weight", {"Weight", "kg"}},
      {"height", {"Height", "m"}},
      {"t_min", {"Temperature", "°C"}},
      {"t_max", {"Temperature", "°C"}},
      {"price", {"Price", "USD"}},
      {"stock", {"Stock", "count"}},
      {"store", {"Store", std::nullopt}},
  });
  struct Case {
    E expr;
    Verdict::Kind kind;
    std::string reason;
  };
  const std::vector<Case> cases = {
      {E::binary(OpId::Add, E::raw("weight"), E::raw("price")), Verdict::Kind::NonInterpretable,
       "rule mixed-unit addition"},
      {E::aggregate(OpId::GroupSum, E::raw("store"), E::raw("stock")), Verdict::Kind::NonInterpretable,
       "rule stock summation"},
      {E::binary(OpId::Add, E::raw("t_min"), E::raw("t_max")), Verdict::Kind::NonInterpretable,
       "rule temperature addition"},
      {E::binary(OpId::Div, E::raw("weight"), E::unary(OpId::Square, E::raw("height"))),
       Verdict::Kind::Interpretable, ""},
  };
  std::string detail;
  bool ok = true;
  for (const auto& c : cases) {
    const Verdict v = judge(kg, c.expr, shop);
    const bool hit = v.kind == c.kind && v.reason == c.reason;
    ok = ok && hit;
    detail += (detail.empty() ? "" : "; ") + render_name(c.expr) + " -> " + std::string(to_string(v.kind));
  }
  const MaybeUnit bmi = infer_unit(kg, cases.back().expr);
  ok = ok && bmi && bmi->name == "kg/m²";
  return {ok, detail};
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  const QNetwork net({4, 8, 3}, 11);
  const QNetwork target({4, 8, 3}, 12);
  std::vector<Transition> batch;
  auto input = [&] {
    std::vector<double> x(4);
    for (double& v : x) v = rng.uniform(0, 1);
    return x;
  };
  for (int i = 0; i < 5; ++i) batch.push_back({input(), rng.index(3), rng.uniform(-1, 1), input(), rng.uniform() < 0.3});
  const auto analytic = td_gradient(net, target, batch, 0.99).second;
  const auto numeric = testing::finite_difference_gradient(net, target, batch, 0.99, 1e-4);
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-4 && t < 5.0,
          "max relative error " + fmt("%.2e", worst) + " over " + std::to_string(analytic.size()) + " parameters, " +
              fmt("%.3f s", t)};
}

Outcome chain_convergence() {
  const auto t0 = Clock::now();
  int optimal = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    optimal += testing::chain_policy_optimal(seed, 2000, AgentConfig{}.learning_rate);
  const double t = seconds_since(t0);
  return {optimal >= 9 && t < 30.0, std::to_string(optimal) + "/10 seeds optimal, " + fmt("%.2f s", t)};
}

Outcome telescoping() {
  double worst = 0.0;
  std::size_t episodes = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset d = testing::planted_dataset(seed);
    EngineConfig cfg;
    cfg.seed = seed;
    cfg.episodes = 3;
    Engine engine(d, planted_kg(), cfg);
    for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
      const EpisodeTrace trace = engine.run_episode(ep);
      double sum = 0.0;
      for (const auto& s : trace.steps) sum += s.reward;
      const double last = trace.steps.empty() ? engine.baseline() : trace.steps.back().score_after;
      worst = std::max(worst, std::abs(sum - (last - engine.baseline())));
      ++episodes;
    }
  }
  return {worst <= 1e-12, std::to_string(episodes) + " episodes, max |sum of rewards - (final - baseline)| = " + fmt("%.1e", worst)};
}

Outcome no_noninterpretable_survivors() {
  const std::vector<std::string> manifests = {"planted/manifest.json", "diabetes-mini/manifest.json",
                                              "retail-mini/manifest.json"};
  std::vector<LoadedInputs> inputs;
  for (const auto& m : manifests) inputs.push_back(load_inputs(cli::load_manifest(testing::data_dir() / m).inputs));
  std::size_t survivors = 0, features = 0, discards = 0, mismatched = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const LoadedInputs& in = inputs[seed % inputs.size()];
    EngineConfig cfg;
    cfg.seed = seed;
    const FEResult r = run(cfg, in.dataset, in.kg);
    for (const auto& f : r.best_features) {
      ++features;
      survivors += f.verdict.kind == Verdict::Kind::NonInterpretable;
      survivors += judge(in.kg, f.expr, in.dataset).kind == Verdict::Kind::NonInterpretable;
    }
    for (const auto& disc : r.discarded) {
      ++discards;
      mismatched += judge(in.kg, disc.expr, in.dataset).kind != Verdict::Kind::NonInterpretable;
    }
  }
  return {survivors == 0 && mismatched == 0,
          "20 runs, " + std::to_string(features) + " kept features, " + std::to_string(survivors) +
              " NonInterpretable, " + std::to_string(discards) + " discards"};
}

Outcome planted_uplift() {
  const PlantedRuns& r = planted_runs();
  int hits = 0, oracle_hits = 0;
  double worst_uplift = 1.0;
  for (std::size_t i = 0; i < kSeeds; ++i) {
    const double uplift = r.dqn[i] - r.baseline[i];
    hits += uplift >= 0.15;
    oracle_hits += r.oracle[i] - r.baseline[i] >= 0.15;
    worst_uplift = std::min(worst_uplift, uplift);
  }
  return {hits >= 8 && oracle_hits >= 8 && r.slowest_run < 180.0,
          std::to_string(hits) + "/10 seeds uplift >= 0.15 (mean baseline " + fmt("%.4f", mean(r.baseline)) +
              ", mean best " + fmt("%.4f", mean(r.dqn)) + ", oracle " + fmt("%.4f", mean(r.oracle)) +
              ", min uplift " + fmt("%.4f", worst_uplift) + ", slowest run " + fmt("%.1f s", r.slowest_run) + ")"};
}

Outcome policy_vs_random() {
  const PlantedRuns& r = planted_runs();
  const double dqn = mean(r.dqn), rnd = mean(r.random);
  return {dqn >= rnd, "mean best DQN " + fmt("%.4f", dqn) + " vs random " + fmt("%.4f", rnd)};
}

Outcome order_sweep() {
  const PlantedRuns& r = planted_runs();
  int wins = 0;
  for (std::size_t i = 0; i < kSeeds; ++i) wins += r.order2[i] > r.order1[i];
  return {wins >= 8, std::to_string(wins) + "/10 seeds order 2 > order 1 (means " + fmt("%.4f", mean(r.order1)) +
                         " -> " + fmt("%.4f", mean(r.order2)) + ")"};
}

Outcome empty_kg_fallback() {
  const auto manifest = cli::load_manifest(testing::data_dir() / "planted" / "manifest_unmapped.json");
  const LoadedInputs in = load_inputs(manifest.inputs);
  EngineConfig cfg = config_from_json(manifest.config);
  const FEResult r = run(cfg, in.dataset, in.kg);
  const bool completed = r.episodes.size() <= cfg.episodes && !r.episodes.empty();
  return {r.discarded.empty() && completed && in.kg.column_concepts().empty(),
          std::to_string(r.discarded.size()) + " discards over " + std::to_string(r.episodes.size()) +
              " episodes, best " + fmt("%.4f", r.best_score)};
}

Outcome metric_examples() {
  const std::vector<double> truth = {1, 1, 1, 0, 0};
  const std::vector<double> pred = {1, 1, 0, 1, 0};
  const std::vector<double> y = {1, 2, 3};
  const std::vector<double> t3 = {0, 0, 1, 1, 2, 2};
  const std::vector<double> p3 = {0, 1, 1, 1, 2, 0};
  const double macro = (0.5 + 2 * (2.0 / 3) / (2.0 / 3 + 1) + 2 * 0.5 / 1.5) / 3;
  const bool ok = f1_score(truth, pred, 2) == 2.0 / 3.0 && f1_score(truth, truth, 2) == 1.0 &&
                  std::abs(f1_score(t3, p3, 3) - macro) <= 1e-15 && one_minus_rae(y, y) == 1.0 &&
                  one_minus_rae(y, std::vector<double>{2, 2, 2}) == 0.0 &&
                  one_minus_rae(y, std::vector<double>{1, 2, 5}) == 0.0 &&
                  !one_minus_rae(std::vector<double>{4, 4}, std::vector<double>{4, 5});
  return {ok, "F1 2/3, macro F1, 1-rae 1 / 0 / 0, constant truth undefined"};
}

Outcome determinism() {
  testing::TempDir dir("acceptance");
  const auto manifest = (testing::data_dir() / "planted" / "manifest.json").string();
  std::string docs[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = dir.path() / ("run" + std::to_string(i));
    std::ostringstream o, e;
    const int code = cli::run_cli({"run", manifest, "--seed", "7", "--out", out.string()}, o, e);
    if (code != 0) return {false, "run exited " + std::to_string(code) + ": " + e.str()};
    docs[i] = testing::read_file(out / "result.json");
  }
  return {docs[0] == docs[1] && !docs[0].empty(),
          "result.json " + std::to_string(docs[0].size()) + " bytes, " + (docs[0] == docs[1] ? "identical" : "differs")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"search-space count", search_space_count},
      {"rule fixpoint verdicts", rule_fixpoint},
      {"gradient check", gradient_check},
      {"chain MDP convergence", chain_convergence},
      {"telescoping reward", telescoping},
      {"no NonInterpretable survivors", no_noninterpretable_survivors},
      {"planted-signal uplift", planted_uplift},
      {"DQN policy vs random", policy_vs_random},
      {"order sweep 2 > 1", order_sweep},
      {"unmapped KG fallback", empty_kg_fallback},
      {"metric examples", metric_examples},
      {"byte-identical result", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %-30s [%7.2f s] %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
