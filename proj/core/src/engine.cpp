#include "kraft/engine.hpp"

#include <algorithm>
#include <numeric>

#include "kraft/error.hpp"
#include "kraft/vectorize.hpp"

namespace kraft {

namespace {

constexpr std::uint64_t kCvStream = 0x6376ULL;
constexpr std::uint64_t kLearnerStream = 0x6c726eULL;
constexpr std::uint64_t kAgentStream = 0x61676e74ULL;
constexpr std::uint64_t kPolicyStream = 0x706f6cULL;
constexpr std::uint64_t kExpandStream = 0x657870ULL;
constexpr std::uint64_t kPruneStream = 0x70726eULL;

FeatureTable make_table(std::span<const CandidateFeature> features) {
  FeatureTable table;
  for (const auto& f : features) table.add(f.display_name, f.values, f.missing);
  return table;
}

}  // namespace

std::string_view to_string(Policy policy) { return policy == Policy::Dqn ? "dqn" : "random"; }

Policy parse_policy(std::string_view text) {
  if (text == "dqn") return Policy::Dqn;
  if (text == "random") return Policy::Random;
  throw InputError("unknown policy '" + std::string(text) + "' (expected dqn or random)");
}

void EngineConfig::validate() const {
  if (episodes < 1) throw InputError("episodes must be at least 1");
  if (steps < 1 || steps > kMaxSteps) throw InputError("steps must lie in [1, " + std::to_string(kMaxSteps) + "]");
  if (cap < 1) throw InputError("cap must be at least 1");
  if (budget < 1) throw InputError("budget must be at least 1");
  if (max_order < 0) throw InputError("max_order must be non-negative");
  if (k < 2) throw InputError("k must be at least 2");
  if (patience < 1) throw InputError("patience must be at least 1");
  agent.validate();
}

LearnerSpec EngineConfig::learner_for(Task task) const {
  LearnerSpec spec = learner ? *learner : LearnerSpec::default_for(task);
  spec.validate(task);
  return spec;
}

double compute_reward(double prev, double next) { return next - prev; }

Engine::Engine(const Dataset& d, const KnowledgeGraph& kg, EngineConfig cfg)
    : d_(d),
      kg_(kg),
      cfg_(std::move(cfg)),
      target_(TargetVector::from(d)),
      cv_seed_(derive_seed(cfg_.seed, kCvStream)),
      policy_rng_(derive_seed(cfg_.seed, kPolicyStream)) {
  cfg_.validate();
  if (cfg_.k > d.n_rows()) throw InputError("k = " + std::to_string(cfg_.k) + " exceeds the row count");
  learner_ = cfg_.learner_for(d.task());
  learner_.seed = derive_seed(cfg_.seed, kLearnerStream);
  if (cfg_.policy == Policy::Dqn) {
    AgentConfig agent_cfg = cfg_.agent;
    agent_cfg.seed = derive_seed(cfg_.seed, kAgentStream);
    agent_.emplace(std::max<std::size_t>(kg.concept_order().size(), 1), catalog().size(), agent_cfg);
  }
  const Pool pool = raw_pool();
  baseline_ = score(pool.features);
  record_best(pool, baseline_);
}

Engine::Pool Engine::raw_pool() const {
  Pool pool;
  for (const auto& name : d_.feature_names()) {
    const auto expr = FeatureExpr::raw(name);
    pool.features.push_back(apply(expr, d_));
    pool.verdicts.push_back(judge(kg_, expr, d_));
    pool.features.back().unit = infer_unit(kg_, expr);
  }
  return pool;
}

double Engine::score(std::span<const CandidateFeature> features) {
  std::vector<std::string> keys;
  for (const auto& f : features) keys.push_back(f.expr.key());
  std::sort(keys.begin(), keys.end());
  std::string cache_key;
  for (const auto& k : keys) cache_key.append(k).push_back('\n');
  if (auto it = cache_.find(cache_key); it != cache_.end()) return it->second;
  const double e = evaluate_cv(learner_, make_table(features), target_, cfg_.k, cv_seed_);
  ++evaluations_;
  cache_.emplace(std::move(cache_key), e);
  return e;
}

std::vector<double> Engine::state_input(const Pool& pool) const {
  std::vector<FeatureExpr> exprs;
  for (const auto& f : pool.features) exprs.push_back(f.expr);
  auto input = scale_state(phi_state(kg_, exprs, d_), pool.features.size());
  if (input.empty()) input.push_back(0.0);
  return input;
}

std::size_t Engine::choose_action(std::span<const double> input) {
  if (agent_) return agent_->act(input);
  return policy_rng_.index(catalog().size());
}

std::size_t Engine::prune(Pool& pool, std::size_t episode, std::size_t step) {
  if (pool.features.size() <= cfg_.budget) return 0;
  std::vector<std::size_t> generated;
  for (std::size_t i = 0; i < pool.features.size(); ++i)
    if (!pool.features[i].expr.is_raw()) generated.push_back(i);
  const std::size_t excess = std::min(pool.features.size() - cfg_.budget, generated.size());
  if (excess == 0) return 0;

  const FeatureTable table = make_table(pool.features);
  std::vector<std::size_t> all(d_.n_rows());
  std::iota(all.begin(), all.end(), 0);
  LearnerSpec forest;
  forest.kind = LearnerKind::RandomForest;
  forest.seed = derive_seed(cfg_.seed, kPruneStream + episode * kMaxSteps + step);
  const auto importance = feature_importance(train(forest, impute_matrix(table, all, all), target_));

  std::stable_sort(generated.begin(), generated.end(),
                   [&](std::size_t a, std::size_t b) { return importance[a] < importance[b]; });
  std::vector<std::uint8_t> drop(pool.features.size(), 0);
  for (std::size_t i = 0; i < excess; ++i) drop[generated[i]] = 1;
  Pool kept;
  for (std::size_t i = 0; i < pool.features.size(); ++i) {
    if (drop[i]) continue;
    kept.features.push_back(std::move(pool.features[i]));
    kept.verdicts.push_back(std::move(pool.verdicts[i]));
  }
  pool = std::move(kept);
  return excess;
}

void Engine::record_best(const Pool& pool, double score) {
  best_score_ = score;
  best_features_.clear();
  for (std::size_t i = 0; i < pool.features.size(); ++i) {
    const auto& f = pool.features[i];
    best_features_.push_back({f.expr, f.display_name, pool.verdicts[i], f.unit, !f.expr.is_raw()});
  }
}

EpisodeTrace Engine::run_episode(std::size_t episode) {
  EpisodeTrace trace;
  trace.episode = episode;
  Pool pool = raw_pool();
  double e_prev = baseline_;
  std::vector<double> input = state_input(pool);

  for (std::size_t i = 0; i < cfg_.steps; ++i) {
    const std::size_t a = choose_action(input);
    const TransformOp& op = catalog()[a];
    StepRecord rec;
    rec.action = std::string(op.name);
    rec.score_before = e_prev;

    ExpandOptions options;
    options.cap = cfg_.cap;
    options.max_order = cfg_.max_order;
    options.seed = derive_seed(cfg_.seed, kExpandStream + global_step_);
    auto candidates = expand_action(op, pool.features, d_, target_.values, options);
    rec.generated = candidates.size();
    for (auto& c : candidates) {
      Verdict v = judge(kg_, c.expr, d_);
      if (v.kind == Verdict::Kind::NonInterpretable) {
        DiscardRecord drec{episode, i, rec.action, c.expr, c.display_name, v.reason};
        rec.discards.push_back(drec);
        discarded_.push_back(std::move(drec));
        continue;
      }
      c.unit = infer_unit(kg_, c.expr);
      rec.kept_names.push_back(c.display_name);
      pool.features.push_back(std::move(c));
      pool.verdicts.push_back(std::move(v));
    }
    rec.kept = rec.kept_names.size();
    rec.discarded = rec.discards.size();
    rec.pruned = prune(pool, episode, i);

    const double e_next = score(pool.features);
    rec.score_after = e_next;
    rec.reward = compute_reward(e_prev, e_next);
    std::vector<double> next_input = state_input(pool);
    if (agent_) {
      agent_->remember({input, a, rec.reward, next_input, i + 1 == cfg_.steps});
      agent_->train_step();
    }
    if (e_next > best_score_) record_best(pool, e_next);
    ++global_step_;
    e_prev = e_next;
    input = std::move(next_input);
    trace.steps.push_back(std::move(rec));
  }
  trace.final_score = e_prev;
  trace.best_so_far = best_score_;
  trace.epsilon_end = agent_ ? agent_->epsilon() : 1.0;
  return trace;
}

FEResult Engine::run() {
  FEResult result;
  result.config = cfg_;
  result.learner = learner_;
  result.task = d_.task();
  result.target = d_.target_name();
  result.baseline_score = baseline_;
  std::size_t stale = 0;
  for (std::size_t ep = 0; ep < cfg_.episodes; ++ep) {
    const double before = best_score_;
    result.episodes.push_back(run_episode(ep));
    stale = best_score_ > before ? 0 : stale + 1;
    if (stale >= cfg_.patience) break;
  }
  result.best_score = best_score_;
  result.best_features = best_features_;
  result.discarded = discarded_;
  result.evaluations = evaluations_;
  return result;
}

FEResult run(const EngineConfig& cfg, const Dataset& d, const KnowledgeGraph& kg) {
  return Engine(d, kg, cfg).run();
}

LoadedInputs load_inputs(const RunInputs& inputs) {
  const SchemaConfig schema = load_schema(inputs.schema);
  Dataset dataset = load_csv(inputs.dataset, schema);
  KnowledgeGraph kg = load_kg(inputs.kg);
  const auto& mapping = inputs.mapping.empty() ? schema.concept_map_path : inputs.mapping;
  if (!mapping.empty()) kg = kg.with_mapping(load_concept_map(mapping));
  return {std::move(dataset), std::move(kg)};
}

FEResult run(const EngineConfig& cfg, const RunInputs& inputs) {
  const LoadedInputs loaded = load_inputs(inputs);
  FEResult result = run(cfg, loaded.dataset, loaded.kg);
  result.inputs = inputs;
  return result;
}

std::vector<OrderPoint> max_order_sweep(const EngineConfig& cfg, const Dataset& d, const KnowledgeGraph& kg,
                                        std::span<const int> orders) {
  if (!std::is_sorted(orders.begin(), orders.end())) throw InputError("sweep orders must be ascending");
  std::vector<OrderPoint> points;
  for (int order : orders) {
    EngineConfig c = cfg;
    c.max_order = order;
    const FEResult r = run(c, d, kg);
    points.push_back({order, r.best_score, r.baseline_score});
  }
  return points;
}

}  // namespace kraft
