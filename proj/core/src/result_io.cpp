// JSON, CSV and log output for engine results.

#include <charconv>
#include <ostream>

#include "kraft/engine.hpp"
#include "kraft/error.hpp"

namespace kraft {

using nlohmann::json;

namespace {

json unit_json(const MaybeUnit& unit) { return unit ? json(unit->label()) : json(nullptr); }
json dims_json(const MaybeUnit& unit) { return unit ? json(format_dims(unit->dims)) : json(nullptr); }

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json learner_to_json(const LearnerSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"max_depth", s.max_depth},
          {"n_trees", s.n_trees},
          {"feature_subsample", s.feature_subsample},
          {"ridge", s.ridge},
          {"logistic_iterations", s.logistic_iterations},
          {"seed", s.seed}};
}

LearnerSpec learner_from_json(const json& j, LearnerSpec base) {
  if (j.is_string()) {
    base.kind = parse_learner_kind(j.get<std::string>());
    return base;
  }
  if (!j.is_object()) throw InputError("learner must be a name or an object");
  if (j.contains("kind")) base.kind = parse_learner_kind(j.at("kind").get<std::string>());
  base.max_depth = j.value("max_depth", base.max_depth);
  base.n_trees = j.value("n_trees", base.n_trees);
  base.feature_subsample = j.value("feature_subsample", base.feature_subsample);
  base.ridge = j.value("ridge", base.ridge);
  base.logistic_iterations = j.value("logistic_iterations", base.logistic_iterations);
  base.seed = j.value("seed", base.seed);
  return base;
}

json discard_json(const KnowledgeGraph& kg, const DiscardRecord& d) {
  return {{"episode", d.episode},        {"step", d.step},     {"action", d.action},
          {"name", d.display_name},      {"reason", d.reason}, {"expr", expr_to_json(d.expr)},
          {"tree", annotate_expr(kg, d.expr)}};
}

}  // namespace

json config_to_json(const EngineConfig& cfg) {
  const auto& a = cfg.agent;
  return {{"episodes", cfg.episodes},
          {"steps", cfg.steps},
          {"cap", cfg.cap},
          {"budget", cfg.budget},
          {"max_order", cfg.max_order},
          {"k", cfg.k},
          {"learner", cfg.learner ? learner_to_json(*cfg.learner) : json(nullptr)},
          {"seed", cfg.seed},
          {"patience", cfg.patience},
          {"policy", to_string(cfg.policy)},
          {"agent",
           {{"gamma", a.gamma},
            {"epsilon_start", a.epsilon_start},
            {"epsilon_end", a.epsilon_end},
            {"epsilon_decay", a.epsilon_decay},
            {"learning_rate", a.learning_rate},
            {"minibatch", a.minibatch},
            {"sync_period", a.sync_period},
            {"replay_capacity", a.replay_capacity},
            {"hidden", a.hidden}}}};
}

EngineConfig config_from_json(const json& j, EngineConfig c) {
  if (!j.is_object()) throw InputError("engine config must be a JSON object");
  try {
    c.episodes = j.value("episodes", c.episodes);
    c.steps = j.value("steps", c.steps);
    c.cap = j.value("cap", c.cap);
    c.budget = j.value("budget", c.budget);
    c.max_order = j.value("max_order", c.max_order);
    c.k = j.value("k", c.k);
    if (j.contains("learner") && !j.at("learner").is_null())
      c.learner = learner_from_json(j.at("learner"), c.learner.value_or(LearnerSpec{}));
    c.seed = j.value("seed", c.seed);
    c.patience = j.value("patience", c.patience);
    if (j.contains("policy")) c.policy = parse_policy(j.at("policy").get<std::string>());
    if (j.contains("agent")) {
      const auto& a = j.at("agent");
      auto& ac = c.agent;
      ac.gamma = a.value("gamma", ac.gamma);
      ac.epsilon_start = a.value("epsilon_start", ac.epsilon_start);
      ac.epsilon_end = a.value("epsilon_end", ac.epsilon_end);
      ac.epsilon_decay = a.value("epsilon_decay", ac.epsilon_decay);
      ac.learning_rate = a.value("learning_rate", ac.learning_rate);
      ac.minibatch = a.value("minibatch", ac.minibatch);
      ac.sync_period = a.value("sync_period", ac.sync_period);
      ac.replay_capacity = a.value("replay_capacity", ac.replay_capacity);
      ac.hidden = a.value("hidden", ac.hidden);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("engine config: ") + e.what());
  }
  return c;
}

json annotate_expr(const KnowledgeGraph& kg, const FeatureExpr& expr) {
  const MaybeUnit unit = infer_unit(kg, expr);
  json node{{"name", render_name(expr)}, {"unit", unit_json(unit)}, {"dims", dims_json(unit)}};
  if (expr.is_raw()) {
    node["column"] = expr.column();
    const ConceptRef* c = kg.concept_of(expr.column());
    node["class"] = c ? json(c->cls) : json(nullptr);
    return node;
  }
  node["op"] = op_info(expr.op()).name;
  if (expr.op() == OpId::OneHot) node["level"] = expr.level();
  json children = json::array();
  for (const auto& child : expr.children()) children.push_back(annotate_expr(kg, child));
  node["children"] = std::move(children);
  return node;
}

json result_to_json(const FEResult& r, const KnowledgeGraph& kg) {
  json features = json::array();
  for (const auto& f : r.best_features) {
    json entry{{"name", f.display_name},
               {"generated", f.generated},
               {"order", f.expr.order()},
               {"verdict", to_string(f.verdict.kind)},
               {"unit", unit_json(f.unit)},
               {"dims", dims_json(f.unit)},
               {"expr", expr_to_json(f.expr)},
               {"tree", annotate_expr(kg, f.expr)}};
    if (!f.verdict.reason.empty()) entry["reason"] = f.verdict.reason;
    features.push_back(std::move(entry));
  }

  json trajectory = json::array();
  for (const auto& ep : r.episodes) {
    json steps = json::array();
    for (const auto& s : ep.steps) {
      json discards = json::array();
      for (const auto& d : s.discards) discards.push_back({{"name", d.display_name}, {"reason", d.reason}});
      steps.push_back({{"action", s.action},
                       {"generated", s.generated},
                       {"kept", s.kept},
                       {"discarded", s.discarded},
                       {"pruned", s.pruned},
                       {"score_before", s.score_before},
                       {"score_after", s.score_after},
                       {"reward", s.reward},
                       {"kept_names", s.kept_names},
                       {"discards", discards}});
    }
    trajectory.push_back({{"episode", ep.episode},
                          {"final_score", ep.final_score},
                          {"best_so_far", ep.best_so_far},
                          {"epsilon", ep.epsilon_end},
                          {"steps", steps}});
  }

  json discarded = json::array();
  for (const auto& d : r.discarded) discarded.push_back(discard_json(kg, d));

  json out{{"inputs",
            {{"dataset", r.inputs.dataset.generic_string()},
             {"schema", r.inputs.schema.generic_string()},
             {"kg", r.inputs.kg.generic_string()},
             {"mapping", r.inputs.mapping.generic_string()}}},
           {"target", r.target},
           {"task", to_string(r.task)},
           {"metric", r.task == Task::Classification ? "f1" : "1-rae"},
           {"seed", r.config.seed},
           {"config", config_to_json(r.config)},
           {"learner", learner_to_json(r.learner)},
           {"baseline_score", r.baseline_score},
           {"best_score", r.best_score},
           {"evaluations", r.evaluations},
           {"best_features", std::move(features)},
           {"trajectory", std::move(trajectory)},
           {"discarded", std::move(discarded)}};
  if (r.order_sweep) {
    json sweep = json::array();
    for (const auto& p : *r.order_sweep)
      sweep.push_back({{"order", p.order}, {"best_score", p.best_score}, {"baseline_score", p.baseline_score}});
    out["order_sweep"] = std::move(sweep);
  }
  return out;
}

std::string dump_result(const FEResult& result, const KnowledgeGraph& kg) {
  return result_to_json(result, kg).dump(2) + "\n";
}

void write_features_csv(std::ostream& out, const FEResult& result, const Dataset& d) {
  std::vector<CandidateFeature> columns;
  for (const auto& f : result.best_features) columns.push_back(apply(f.expr, d));
  for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << csv_escape(result.best_features[j].display_name);
  out << ',' << csv_escape(d.target_name()) << '\n';
  const Column& target = d.target();
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (j) out << ',';
      const auto& expr = result.best_features[j].expr;
      if (expr.is_raw()) {
        const Column& c = d.column(expr.column());
        if (!c.is_missing(r)) out << csv_escape(c.text[r]);
      } else if (!columns[j].missing[r]) {
        out << format_number(columns[j].values[r]);
      }
    }
    out << ',' << csv_escape(target.text[r]) << '\n';
  }
}

void write_log(std::ostream& out, const FEResult& r) {
  out << "baseline " << format_number(r.baseline_score) << "\n";
  for (const auto& ep : r.episodes) {
    for (std::size_t i = 0; i < ep.steps.size(); ++i) {
      const auto& s = ep.steps[i];
      out << "episode " << ep.episode << " step " << i << " action " << s.action << " generated " << s.generated
          << " kept " << s.kept << " discarded " << s.discarded << " pruned " << s.pruned << " score "
          << format_number(s.score_before) << " -> " << format_number(s.score_after) << " reward "
          << format_number(s.reward) << "\n";
      for (const auto& d : s.discards) out << "  discarded " << d.display_name << ": " << d.reason << "\n";
    }
    out << "episode " << ep.episode << " final " << format_number(ep.final_score) << " best "
        << format_number(ep.best_so_far) << "\n";
  }
  out << "best " << format_number(r.best_score) << " with " << r.best_features.size() << " features\n";
}

}  // namespace kraft
