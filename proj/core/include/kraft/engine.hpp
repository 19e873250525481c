#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kraft/agent.hpp"
#include "kraft/data.hpp"
#include "kraft/kg.hpp"
#include "kraft/learn.hpp"
#include "kraft/transform.hpp"

namespace kraft {

enum class Policy { Dqn, Random };

std::string_view to_string(Policy policy);
Policy parse_policy(std::string_view text);

inline constexpr std::size_t kMaxSteps = 20;

struct EngineConfig {
  std::size_t episodes = 30;
  std::size_t steps = 5;
  std::size_t cap = 8;
  std::size_t budget = 64;
  int max_order = 5;
  std::size_t k = 5;
  /// Unset selects LearnerSpec::default_for(task).
  std::optional<LearnerSpec> learner;
  std::uint64_t seed = 0;
  std::size_t patience = 10;
  Policy policy = Policy::Dqn;
  AgentConfig agent;

  /// Throws InputError.
  void validate() const;
  LearnerSpec learner_for(Task task) const;
};

struct DiscardRecord {
  std::size_t episode = 0;
  std::size_t step = 0;
  std::string action;
  FeatureExpr expr = FeatureExpr::raw("?");
  std::string display_name;
  std::string reason;
};

struct StepRecord {
  std::string action;
  std::size_t generated = 0;
  std::size_t kept = 0;
  std::size_t discarded = 0;
  std::size_t pruned = 0;
  std::vector<std::string> kept_names;
  std::vector<DiscardRecord> discards;
  double score_before = 0.0;
  double score_after = 0.0;
  double reward = 0.0;
};

struct EpisodeTrace {
  std::size_t episode = 0;
  std::vector<StepRecord> steps;
  double final_score = 0.0;
  double best_so_far = 0.0;
  double epsilon_end = 0.0;
};

struct FeatureRecord {
  FeatureExpr expr = FeatureExpr::raw("?");
  std::string display_name;
  Verdict verdict;
  MaybeUnit unit;
  bool generated = false;
};

struct OrderPoint {
  int order = 0;
  double best_score = 0.0;
  double baseline_score = 0.0;
};

struct RunInputs {
  std::filesystem::path dataset;
  std::filesystem::path schema;
  std::filesystem::path kg;
  /// Overrides the schema's concept map when set.
  std::filesystem::path mapping;
};

struct FEResult {
  RunInputs inputs;
  EngineConfig config;
  LearnerSpec learner;
  Task task = Task::Regression;
  std::string target;
  double baseline_score = 0.0;
  double best_score = 0.0;
  std::vector<FeatureRecord> best_features;
  std::vector<EpisodeTrace> episodes;
  std::vector<DiscardRecord> discarded;
  std::size_t evaluations = 0;
  std::optional<std::vector<OrderPoint>> order_sweep;
};

double compute_reward(double prev, double next);

/// The feature-engineering loop over one dataset and KG. Holds the agent,
/// the score cache and the best set found so far.
class Engine {
 public:
  Engine(const Dataset& d, const KnowledgeGraph& kg, EngineConfig cfg);

  /// Score of the raw feature set.
  double baseline() const { return baseline_; }
  EpisodeTrace run_episode(std::size_t episode);
  /// Episodes until the budget or the patience runs out.
  FEResult run();

  /// Cross-validated score of a feature set, memoized on the set of keys.
  double score(std::span<const CandidateFeature> features);
  std::size_t evaluations() const { return evaluations_; }
  const std::optional<DqnAgent>& agent() const { return agent_; }

 private:
  struct Pool {
    std::vector<CandidateFeature> features;
    std::vector<Verdict> verdicts;
  };

  Pool raw_pool() const;
  std::vector<double> state_input(const Pool& pool) const;
  std::size_t choose_action(std::span<const double> input);
  std::size_t prune(Pool& pool, std::size_t episode, std::size_t step);
  void record_best(const Pool& pool, double score);

  const Dataset& d_;
  const KnowledgeGraph& kg_;
  EngineConfig cfg_;
  LearnerSpec learner_;
  TargetVector target_;
  std::uint64_t cv_seed_;
  std::optional<DqnAgent> agent_;
  Rng policy_rng_;
  std::size_t global_step_ = 0;
  std::map<std::string, double> cache_;
  std::size_t evaluations_ = 0;
  double baseline_ = 0.0;
  double best_score_ = 0.0;
  std::vector<FeatureRecord> best_features_;
  std::vector<DiscardRecord> discarded_;
};

/// Runs on an in-memory dataset and KG.
FEResult run(const EngineConfig& cfg, const Dataset& d, const KnowledgeGraph& kg);

struct LoadedInputs {
  Dataset dataset;
  KnowledgeGraph kg;
};

/// Loads the schema, dataset, KG and concept mapping named by `inputs`.
LoadedInputs load_inputs(const RunInputs& inputs);

/// Loads the inputs and runs; the paths are echoed in the result.
FEResult run(const EngineConfig& cfg, const RunInputs& inputs);

/// Independent runs per max_order with a shared seed.
std::vector<OrderPoint> max_order_sweep(const EngineConfig& cfg, const Dataset& d, const KnowledgeGraph& kg,
                                        std::span<const int> orders);

// Serialization.

nlohmann::json config_to_json(const EngineConfig& cfg);
/// Missing keys keep the defaults of `base`.
EngineConfig config_from_json(const nlohmann::json& j, EngineConfig base = {});

/// Expression tree with the propagated unit at every node and the mapped
/// class on leaves.
nlohmann::json annotate_expr(const KnowledgeGraph& kg, const FeatureExpr& expr);

nlohmann::json result_to_json(const FEResult& result, const KnowledgeGraph& kg);
/// Pretty-printed, newline-terminated.
std::string dump_result(const FEResult& result, const KnowledgeGraph& kg);

/// Best feature set materialized over every row, display names as header.
void write_features_csv(std::ostream& out, const FEResult& result, const Dataset& d);
/// One line per step.
void write_log(std::ostream& out, const FEResult& result);

}  // namespace kraft
