#include <algorithm>
#include <functional>

#include "kraft/error.hpp"
#include "kraft/kg.hpp"

namespace kraft {

namespace {

using Binding = std::vector<std::pair<std::string_view, std::string_view>>;

std::optional<std::string_view> lookup(const Binding& b, std::string_view var) {
  for (const auto& [k, v] : b)
    if (k == var) return v;
  return std::nullopt;
}

bool is_variable(std::string_view term) { return !term.empty() && term.front() == '?'; }

// Extends `b` so that `pattern` matches `fact`; false on conflict.
bool unify(const Atom& pattern, const Atom& fact, Binding& b) {
  if (pattern.predicate != fact.predicate || pattern.args.size() != fact.args.size()) return false;
  const std::size_t mark = b.size();
  for (std::size_t i = 0; i < pattern.args.size(); ++i) {
    const std::string& t = pattern.args[i];
    if (!is_variable(t)) {
      if (t != fact.args[i]) {
        b.resize(mark);
        return false;
      }
      continue;
    }
    if (const auto v = lookup(b, t)) {
      if (*v != fact.args[i]) {
        b.resize(mark);
        return false;
      }
    } else {
      b.emplace_back(t, fact.args[i]);
    }
  }
  return true;
}

Atom instantiate(const Atom& pattern, const Binding& b) {
  Atom out{pattern.predicate, {}};
  for (const auto& t : pattern.args) out.args.emplace_back(is_variable(t) ? *lookup(b, t) : std::string_view(t));
  return out;
}

class Chainer {
 public:
  Chainer(const KnowledgeGraph& kg, FactBase& base) : kg_(kg), base_(base) {}

  Fixpoint run() {
    Fixpoint fp;
    std::set<Atom> delta;
    for (const auto& a : base_.atoms) add(a, fp.facts, delta);
    while (!delta.empty()) {
      ++fp.rounds;
      std::map<std::string, std::vector<const Atom*>, std::less<>> delta_index;
      for (const auto& a : delta) delta_index[a.predicate].push_back(&a);
      index_.clear();
      for (const auto& a : fp.facts) index_[a.predicate].push_back(&a);

      std::set<Atom> fresh;
      std::map<Atom, std::string> fresh_by;
      for (const auto& rule : kg_.rules()) {
        for (std::size_t pos = 0; pos < rule.body.size(); ++pos) {
          const Atom& seed = rule.body[pos];
          const auto it = delta_index.find(seed.predicate);
          if (it == delta_index.end()) continue;
          for (const Atom* d : it->second) {
            Binding b;
            if (!unify(seed, *d, b)) continue;
            join(rule, pos, 0, b, [&](const Binding& full) {
              Atom head = instantiate(rule.head, full);
              if (fp.facts.count(head) || fresh.count(head)) return;
              fresh_by.emplace(head, rule.name);
              fresh.insert(std::move(head));
            });
          }
        }
      }
      delta.clear();
      for (const auto& a : fresh) {
        fp.derived_by.emplace(a, fresh_by.at(a));
        add(a, fp.facts, delta);
      }
    }
    return fp;
  }

 private:
  // Inserts `a` and, for class atoms, every superclass atom.
  void add(const Atom& a, std::set<Atom>& facts, std::set<Atom>& delta) {
    if (facts.insert(a).second) delta.insert(a);
    if (a.args.size() != 1 || !kg_.has_class(a.predicate)) return;
    for (const auto& up : kg_.ancestors(a.predicate)) {
      Atom sup{up, a.args};
      if (facts.insert(sup).second) delta.insert(std::move(sup));
    }
  }

  const Dims* dims_of(std::string_view unit) const {
    if (const auto it = base_.unit_dims.find(std::string(unit)); it != base_.unit_dims.end()) return &it->second;
    if (const UnitEntry* u = kg_.find_unit(unit)) return &u->dims;
    return nullptr;
  }

  bool builtins_hold(const Rule& rule, const Binding& b) const {
    for (const auto& a : rule.body) {
      if (a.predicate != kDifferent) continue;
      const auto u = is_variable(a.args[0]) ? lookup(b, a.args[0]) : std::optional<std::string_view>(a.args[0]);
      const auto v = is_variable(a.args[1]) ? lookup(b, a.args[1]) : std::optional<std::string_view>(a.args[1]);
      if (!u || !v) return false;
      const Dims* du = dims_of(*u);
      const Dims* dv = dims_of(*v);
      if (!du || !dv || *du == *dv) return false;
    }
    return true;
  }

  template <class Emit>
  void join(const Rule& rule, std::size_t skip, std::size_t i, Binding& b, Emit&& emit) {
    if (i == rule.body.size()) {
      if (builtins_hold(rule, b)) emit(b);
      return;
    }
    const Atom& atom = rule.body[i];
    if (i == skip || atom.predicate == kDifferent) {
      join(rule, skip, i + 1, b, emit);
      return;
    }
    const auto it = index_.find(atom.predicate);
    if (it == index_.end()) return;
    for (const Atom* f : it->second) {
      const std::size_t mark = b.size();
      if (!unify(atom, *f, b)) continue;
      join(rule, skip, i + 1, b, emit);
      b.resize(mark);
    }
  }

  const KnowledgeGraph& kg_;
  FactBase& base_;
  std::map<std::string, std::vector<const Atom*>, std::less<>> index_;
};

}  // namespace

Fixpoint forward_chain(const KnowledgeGraph& kg, FactBase facts) {
  for (const auto& a : facts.atoms)
    for (const auto& t : a.args)
      if (is_variable(t)) throw std::invalid_argument("forward_chain: non-ground fact " + to_string(a));
  return Chainer(kg, facts).run();
}

std::string_view to_string(Verdict::Kind kind) {
  switch (kind) {
    case Verdict::Kind::Interpretable: return "interpretable";
    case Verdict::Kind::NonInterpretable: return "non_interpretable";
    case Verdict::Kind::Uncovered: return "uncovered";
  }
  return "?";
}

Verdict::Kind parse_verdict_kind(std::string_view text) {
  if (text == "interpretable") return Verdict::Kind::Interpretable;
  if (text == "non_interpretable") return Verdict::Kind::NonInterpretable;
  if (text == "uncovered") return Verdict::Kind::Uncovered;
  throw InputError("unknown verdict '" + std::string(text) + "'");
}

std::string_view transform_class(OpId op) {
  switch (op) {
    case OpId::Log: return "Logarithm";
    case OpId::Sqrt: return "SquareRoot";
    case OpId::Square: return "Square";
    case OpId::Reciprocal: return "Reciprocal";
    case OpId::OneHot: return "OneHotEncoding";
    case OpId::Add: return "Addition";
    case OpId::Sub: return "Subtraction";
    case OpId::Mul: return "Multiplication";
    case OpId::Div: return "Division";
    case OpId::And: return "Conjunction";
    case OpId::Or: return "Disjunction";
    case OpId::GroupMin: return "aggregationMin";
    case OpId::GroupMax: return "aggregationMax";
    case OpId::GroupMean: return "aggregationMean";
    case OpId::GroupSum: return "aggregationSum";
    case OpId::Day: return "DayOf";
    case OpId::Month: return "MonthOf";
    case OpId::Year: return "YearOf";
    case OpId::IsWeekend: return "IsWeekend";
  }
  return "Transformation";
}

MaybeUnit infer_unit(const KnowledgeGraph& kg, const FeatureExpr& expr) {
  if (expr.is_raw()) return kg.column_unit(expr.column());
  std::vector<MaybeUnit> inputs;
  for (const auto& c : expr.children()) inputs.push_back(infer_unit(kg, c));
  MaybeUnit out = propagate_unit(expr.op(), inputs);
  if (out) out = kg.name_unit(std::move(*out));
  return out;
}

namespace {

struct Materialized {
  FactBase facts;
  // Sub-expression individuals, root first.
  std::vector<std::pair<std::string, const FeatureExpr*>> nodes;
  MaybeUnit root_unit;
};

class FactBuilder {
 public:
  explicit FactBuilder(const KnowledgeGraph& kg) : kg_(kg) {}

  Materialized build(const FeatureExpr& root) {
    Materialized m;
    auto [id, unit] = visit(root, m);
    m.root_unit = unit;
    std::reverse(m.nodes.begin(), m.nodes.end());
    return m;
  }

 private:
  std::string unit_term(const Unit& u, FactBase& facts) {
    if (u.name) return *u.name;
    std::string term = "[" + format_dims(u.dims) + "]";
    facts.unit_dims[term] = u.dims;
    return term;
  }

  std::pair<std::string, MaybeUnit> visit(const FeatureExpr& e, Materialized& m) {
    auto& atoms = m.facts.atoms;
    if (e.is_raw()) {
      const std::string id = "column:" + e.column();
      atoms.insert({std::string(kFeatureClass), {id}});
      MaybeUnit unit;
      if (const ConceptRef* ref = kg_.concept_of(e.column())) {
        atoms.insert({ref->cls, {id}});
        unit = kg_.column_unit(e.column());
        if (unit) atoms.insert({std::string(kHasUnit), {id, unit_term(*unit, m.facts)}});
      }
      m.nodes.emplace_back(id, &e);
      return {id, unit};
    }
    std::vector<std::string> inputs;
    std::vector<MaybeUnit> units;
    for (const auto& c : e.children()) {
      auto [cid, cu] = visit(c, m);
      inputs.push_back(std::move(cid));
      units.push_back(std::move(cu));
    }
    const std::size_t k = counter_++;
    const std::string id = "feature#" + std::to_string(k);
    const std::string f = "transform#" + std::to_string(k);
    atoms.insert({std::string(kFeatureClass), {id}});
    atoms.insert({std::string(transform_class(e.op())), {f}});
    for (const auto& in : inputs) atoms.insert({std::string(kHasInput), {f, in}});
    atoms.insert({std::string(kHasOutput), {f, id}});
    MaybeUnit unit = propagate_unit(e.op(), units);
    if (unit) {
      unit = kg_.name_unit(std::move(*unit));
      atoms.insert({std::string(kHasUnit), {id, unit_term(*unit, m.facts)}});
    }
    m.nodes.emplace_back(id, &e);
    return {id, unit};
  }

  const KnowledgeGraph& kg_;
  std::size_t counter_ = 0;
};

}  // namespace

Verdict judge(const KnowledgeGraph& kg, const FeatureExpr& expr, const Dataset& d) {
  output_kind(expr, d);

  const auto leaves = expr.leaves();
  const bool covered =
      std::any_of(leaves.begin(), leaves.end(), [&](const std::string& c) { return kg.concept_of(c) != nullptr; });
  if (!covered) return Verdict::uncovered();
  if (expr.is_raw()) return Verdict::interpretable();

  Materialized m = FactBuilder(kg).build(expr);
  const Fixpoint fp = forward_chain(kg, m.facts);
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    const Atom flagged{std::string(kNonInterpretable), {m.nodes[i].first}};
    if (!fp.holds(flagged)) continue;
    const auto by = fp.derived_by.find(flagged);
    std::string reason = "rule " + (by != fp.derived_by.end() ? by->second : std::string("asserted"));
    if (i != 0) reason += " on " + render_name(*m.nodes[i].second);
    return Verdict::non_interpretable(std::move(reason));
  }

  if (!m.root_unit) return Verdict::non_interpretable("unknown unit");
  if (m.root_unit->dims.dimensionless()) return Verdict::interpretable();
  const UnitEntry* known = kg.unit_for_dims(m.root_unit->dims);
  if (!known || (kg.has_class(kUnitsClass) && !kg.is_instance(known->name, kUnitsClass)))
    return Verdict::non_interpretable("unknown unit " + format_dims(m.root_unit->dims));
  return Verdict::interpretable();
}

double coverage(const KnowledgeGraph& kg, const Dataset& d) {
  const auto names = d.feature_names();
  if (names.empty()) return 0.0;
  const auto mapped = std::count_if(names.begin(), names.end(),
                                    [&](const std::string& c) { return kg.concept_of(c) != nullptr; });
  return static_cast<double>(mapped) / static_cast<double>(names.size());
}

std::vector<std::string> unmapped_columns(const KnowledgeGraph& kg, const Dataset& d) {
  std::vector<std::string> out;
  for (const auto& c : d.feature_names())
    if (!kg.concept_of(c)) out.push_back(c);
  return out;
}

}  // namespace kraft
