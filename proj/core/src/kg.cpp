#include "kraft/kg.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kraft/error.hpp"

namespace kraft {

namespace {

bool is_variable(std::string_view term) { return !term.empty() && term.front() == '?'; }

bool is_binary_predicate(std::string_view p) {
  return p == kHasUnit || p == kHasInput || p == kHasOutput || p == kDifferent;
}

std::string read_file(const std::filesystem::path& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + std::string(what) + " '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// "Pred(?a, ?b)" or ["Pred", "?a", "?b"].
Atom parse_atom(const nlohmann::json& j) {
  Atom atom;
  if (j.is_array()) {
    if (j.empty()) throw InputError("kg: empty atom");
    atom.predicate = j[0].get<std::string>();
    for (std::size_t i = 1; i < j.size(); ++i) atom.args.push_back(j[i].get<std::string>());
    return atom;
  }
  const std::string text = j.get<std::string>();
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw InputError("kg: malformed atom '" + text + "'");
  atom.predicate = std::string(trim(std::string_view(text).substr(0, open)));
  std::string_view args = std::string_view(text).substr(open + 1, close - open - 1);
  while (!args.empty()) {
    const auto comma = args.find(',');
    atom.args.emplace_back(trim(args.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    args.remove_prefix(comma + 1);
  }
  if (atom.predicate.empty()) throw InputError("kg: malformed atom '" + text + "'");
  return atom;
}

}  // namespace

std::string to_string(const Atom& atom) {
  std::string out = atom.predicate + "(";
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    if (i) out += ", ";
    out += atom.args[i];
  }
  return out + ")";
}

KnowledgeGraph::KnowledgeGraph(KgDocument doc) {
  for (auto& c : doc.classes) {
    if (!class_index_.emplace(c, classes_.size()).second) throw InputError("kg: duplicate class '" + c + "'");
    classes_.push_back(std::move(c));
  }
  auto require_class = [&](const std::string& c, std::string_view where) {
    if (!class_index_.count(c)) throw InputError("kg: unknown class '" + c + "' referenced in " + std::string(where));
  };

  const std::size_t n = classes_.size();
  std::vector<std::vector<std::size_t>> parents(n), children(n);
  for (const auto& [child, parent] : doc.subclass_of) {
    require_class(child, "subclass_of");
    require_class(parent, "subclass_of");
    const std::size_t c = class_index_.at(child), p = class_index_.at(parent);
    parents[c].push_back(p);
    children[p].push_back(c);
  }
  edges_ = std::move(doc.subclass_of);

  // Kahn's algorithm from the roots; leftover edges mean a cycle.
  std::vector<std::size_t> pending(n);
  std::deque<std::size_t> ready;
  for (std::size_t c = 0; c < n; ++c) {
    pending[c] = parents[c].size();
    if (pending[c] == 0) ready.push_back(c);
  }
  std::vector<std::size_t> topo;
  while (!ready.empty()) {
    const std::size_t c = ready.front();
    ready.pop_front();
    topo.push_back(c);
    for (std::size_t ch : children[c])
      if (--pending[ch] == 0) ready.push_back(ch);
  }
  if (topo.size() != n) {
    std::string where;
    for (std::size_t c = 0; c < n; ++c)
      if (pending[c] != 0) {
        where = classes_[c];
        break;
      }
    throw InputError("kg: subclass_of contains a cycle (through '" + where + "')");
  }

  std::vector<std::vector<std::uint8_t>> above(n, std::vector<std::uint8_t>(n, 0));
  for (std::size_t c : topo) {
    above[c][c] = 1;
    for (std::size_t p : parents[c])
      for (std::size_t a = 0; a < n; ++a)
        if (above[p][a]) above[c][a] = 1;
  }
  ancestors_.resize(n);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t a = 0; a < n; ++a)
      if (above[c][a]) ancestors_[c].push_back(classes_[a]);

  for (auto& u : doc.units) {
    require_class(u.cls, "unit '" + u.name + "'");
    if (class_index_.count(u.name)) throw InputError("kg: unit '" + u.name + "' reuses a class name");
    if (!unit_index_.emplace(u.name, units_.size()).second) throw InputError("kg: duplicate unit '" + u.name + "'");
    units_.push_back(std::move(u));
  }
  for (auto& [unit, quantity] : doc.quantities) {
    if (!unit_index_.count(unit)) throw InputError("kg: quantity for unknown unit '" + unit + "'");
    require_class(quantity, "quantities");
    quantity_of_unit_[unit] = quantity;
  }

  for (auto& rule : doc.rules) {
    const std::string where = "rule '" + rule.name + "'";
    std::set<std::string> bound;
    auto check_atom = [&](const Atom& a, bool head) {
      if (is_binary_predicate(a.predicate)) {
        if (a.args.size() != 2) throw InputError("kg: " + a.predicate + " takes two arguments in " + where);
        if (head) throw InputError("kg: built-in predicate " + a.predicate + " cannot be a rule head in " + where);
      } else {
        if (a.args.size() != 1) throw InputError("kg: class atom " + a.predicate + " takes one argument in " + where);
        if (a.predicate != kFeatureClass && a.predicate != kNonInterpretable) require_class(a.predicate, where);
      }
    };
    if (rule.body.empty()) throw InputError("kg: " + where + " has an empty body");
    for (const auto& a : rule.body) {
      check_atom(a, false);
      if (a.predicate == kDifferent) continue;
      for (const auto& t : a.args)
        if (is_variable(t)) bound.insert(t);
    }
    for (const auto& a : rule.body)
      if (a.predicate == kDifferent)
        for (const auto& t : a.args)
          if (is_variable(t) && !bound.count(t))
            throw InputError("kg: variable " + t + " of Different is unbound in " + where);
    check_atom(rule.head, true);
    for (const auto& t : rule.head.args)
      if (is_variable(t) && !bound.count(t))
        throw InputError("kg: head variable " + t + " does not occur in the body of " + where);
    rules_.push_back(std::move(rule));
  }

  for (const auto& c : classes_) {
    concept_index_.emplace(c, concept_order_.size());
    concept_order_.push_back(c);
  }
  for (const auto& u : units_) {
    concept_index_.emplace(u.name, concept_order_.size());
    concept_order_.push_back(u.name);
  }

  column_concepts_ = std::move(doc.column_concepts);
  validate_mapping();
}

void KnowledgeGraph::validate_mapping() const {
  for (const auto& [column, ref] : column_concepts_) {
    if (!class_index_.count(ref.cls))
      throw InputError("concept map: column '" + column + "' maps to unknown class '" + ref.cls + "'");
    if (ref.unit && !unit_index_.count(*ref.unit))
      throw InputError("concept map: column '" + column + "' uses unknown unit '" + *ref.unit + "'");
  }
}

KnowledgeGraph KnowledgeGraph::with_mapping(std::map<std::string, ConceptRef> mapping) const {
  KnowledgeGraph copy = *this;
  copy.column_concepts_ = std::move(mapping);
  copy.validate_mapping();
  return copy;
}

bool KnowledgeGraph::has_class(std::string_view cls) const { return class_index_.find(cls) != class_index_.end(); }

const std::vector<std::string>& KnowledgeGraph::ancestors(std::string_view cls) const {
  const auto it = class_index_.find(cls);
  if (it == class_index_.end()) throw InputError("kg: unknown class '" + std::string(cls) + "'");
  return ancestors_[it->second];
}

bool KnowledgeGraph::subsumes(std::string_view sub, std::string_view sup) const {
  if (!has_class(sup)) throw InputError("kg: unknown class '" + std::string(sup) + "'");
  const auto& up = ancestors(sub);
  return std::find(up.begin(), up.end(), sup) != up.end();
}

bool KnowledgeGraph::is_instance(std::string_view unit_name, std::string_view cls) const {
  if (!has_class(cls)) throw InputError("kg: unknown class '" + std::string(cls) + "'");
  const UnitEntry* u = find_unit(unit_name);
  return u != nullptr && subsumes(u->cls, cls);
}

const UnitEntry* KnowledgeGraph::find_unit(std::string_view name) const {
  const auto it = unit_index_.find(name);
  return it == unit_index_.end() ? nullptr : &units_[it->second];
}

const UnitEntry* KnowledgeGraph::unit_for_dims(const Dims& dims) const {
  for (const auto& u : units_)
    if (u.dims == dims) return &u;
  return nullptr;
}

Unit KnowledgeGraph::name_unit(Unit unit) const {
  if (unit.name) {
    const UnitEntry* named = find_unit(*unit.name);
    if (named && named->dims == unit.dims) return unit;
  }
  const UnitEntry* match = unit_for_dims(unit.dims);
  unit.name = match ? std::optional<std::string>(match->name) : std::nullopt;
  return unit;
}

std::optional<std::string> KnowledgeGraph::quantity_of_unit(std::string_view unit_name) const {
  const auto it = quantity_of_unit_.find(unit_name);
  if (it == quantity_of_unit_.end()) return std::nullopt;
  return it->second;
}

const ConceptRef* KnowledgeGraph::concept_of(std::string_view column) const {
  const auto it = column_concepts_.find(std::string(column));
  return it == column_concepts_.end() ? nullptr : &it->second;
}

MaybeUnit KnowledgeGraph::column_unit(std::string_view column) const {
  const ConceptRef* ref = concept_of(column);
  if (!ref || !ref->unit) return std::nullopt;
  const UnitEntry* u = find_unit(*ref->unit);
  return Unit{u->dims, u->name};
}

std::optional<std::size_t> KnowledgeGraph::concept_index(std::string_view name) const {
  const auto it = concept_index_.find(name);
  if (it == concept_index_.end()) return std::nullopt;
  return it->second;
}

KnowledgeGraph parse_kg(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("kg: ") + e.what());
  }
  KgDocument doc;
  try {
    for (const auto& c : j.value("classes", nlohmann::json::array())) doc.classes.push_back(c.get<std::string>());
    for (const auto& e : j.value("subclass_of", nlohmann::json::array())) {
      if (!e.is_array() || e.size() != 2) throw InputError("kg: subclass_of entries must be [child, parent] pairs");
      doc.subclass_of.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    for (const auto& u : j.value("units", nlohmann::json::array())) {
      UnitEntry entry;
      entry.name = u.at("name").get<std::string>();
      entry.cls = u.value("class", std::string(kUnitsClass));
      const auto dims = u.value("dims", nlohmann::json::object());
      for (const auto& [dim, exp] : dims.items()) {
        const auto base = parse_base_dim(dim);
        if (!base) throw InputError("kg: unit '" + entry.name + "' has unknown dimension '" + dim + "'");
        entry.dims[*base] = exp.is_string() ? parse_rational(exp.get<std::string>()) : parse_rational(exp.dump());
      }
      doc.units.push_back(std::move(entry));
    }
    const auto quantities = j.value("quantities", nlohmann::json::object());
    if (quantities.is_object()) {
      for (const auto& [unit, q] : quantities.items()) doc.quantities.emplace_back(unit, q.get<std::string>());
    } else {
      for (const auto& q : quantities)
        doc.quantities.emplace_back(q.at("unit").get<std::string>(), q.at("quantity").get<std::string>());
    }
    std::size_t rule_no = 0;
    for (const auto& r : j.value("rules", nlohmann::json::array())) {
      Rule rule;
      rule.name = r.value("name", "rule " + std::to_string(++rule_no));
      for (const auto& a : r.at("body")) rule.body.push_back(parse_atom(a));
      rule.head = parse_atom(r.at("head"));
      doc.rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("kg: ") + e.what());
  }
  return KnowledgeGraph(std::move(doc));
}

KnowledgeGraph load_kg(const std::filesystem::path& path) { return parse_kg(read_file(path, "knowledge graph")); }

std::map<std::string, ConceptRef> parse_concept_map(std::string_view json_text) {
  std::map<std::string, ConceptRef> out;
  try {
    const auto j = nlohmann::json::parse(json_text);
    for (const auto& [column, ref] : j.items()) {
      ConceptRef c;
      c.cls = ref.at("class").get<std::string>();
      if (ref.contains("unit") && !ref["unit"].is_null()) c.unit = ref["unit"].get<std::string>();
      out.emplace(column, std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("concept map: ") + e.what());
  }
  return out;
}

std::map<std::string, ConceptRef> load_concept_map(const std::filesystem::path& path) {
  return parse_concept_map(read_file(path, "concept map"));
}

}  // namespace kraft
