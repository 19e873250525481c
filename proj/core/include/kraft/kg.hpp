#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kraft/data.hpp"
#include "kraft/transform.hpp"
#include "kraft/units.hpp"

namespace kraft {

/// Ground or non-ground atom. Arguments starting with '?' are variables.
struct Atom {
  std::string predicate;
  std::vector<std::string> args;

  friend auto operator<=>(const Atom&, const Atom&) = default;
  friend bool operator==(const Atom&, const Atom&) = default;
};

std::string to_string(const Atom& atom);

/// Range-restricted Horn rule without negation.
struct Rule {
  std::string name;
  std::vector<Atom> body;
  Atom head;
};

struct UnitEntry {
  std::string name;
  Dims dims;
  std::string cls;
};

struct ConceptRef {
  std::string cls;
  std::optional<std::string> unit;
};

/// Plain contents of a knowledge-graph document before validation.
struct KgDocument {
  std::vector<std::string> classes;
  std::vector<std::pair<std::string, std::string>> subclass_of;  // child, parent
  std::vector<UnitEntry> units;
  std::vector<std::pair<std::string, std::string>> quantities;  // unit, quantity class
  std::vector<Rule> rules;
  std::map<std::string, ConceptRef> column_concepts;
};

// Predicates with fixed meaning in rule bodies; every other predicate names a class.
inline constexpr std::string_view kHasUnit = "hasUnit";
inline constexpr std::string_view kHasInput = "hasInput";
inline constexpr std::string_view kHasOutput = "hasOutput";
inline constexpr std::string_view kDifferent = "Different";
inline constexpr std::string_view kFeatureClass = "Feature";
inline constexpr std::string_view kUnitsClass = "Units";
inline constexpr std::string_view kNonInterpretable = "nonInterpretable";

/// Class DAG, unit registry, column mapping and rules. Immutable once built;
/// the constructor validates the document and throws InputError.
class KnowledgeGraph {
 public:
  /// The empty graph: no classes, units, rules or mappings.
  KnowledgeGraph() = default;
  explicit KnowledgeGraph(KgDocument doc);

  /// Copy with the column mapping replaced.
  KnowledgeGraph with_mapping(std::map<std::string, ConceptRef> mapping) const;

  bool has_class(std::string_view cls) const;
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<std::pair<std::string, std::string>>& subclass_edges() const { return edges_; }
  /// `cls` and every class above it, in document order. Throws on unknown class.
  const std::vector<std::string>& ancestors(std::string_view cls) const;

  bool subsumes(std::string_view sub, std::string_view sup) const;
  bool is_instance(std::string_view unit_name, std::string_view cls) const;

  const std::vector<UnitEntry>& units() const { return units_; }
  const UnitEntry* find_unit(std::string_view name) const;
  /// First registered unit (document order) with these dimensions.
  const UnitEntry* unit_for_dims(const Dims& dims) const;
  /// Attaches the registered name matching the dimensions, if any.
  Unit name_unit(Unit unit) const;
  std::optional<std::string> quantity_of_unit(std::string_view unit_name) const;

  const std::map<std::string, ConceptRef>& column_concepts() const { return column_concepts_; }
  const ConceptRef* concept_of(std::string_view column) const;
  /// Unit of a mapped column, or unknown.
  MaybeUnit column_unit(std::string_view column) const;

  const std::vector<Rule>& rules() const { return rules_; }

  /// Classes then unit names, in document order; the vector-space basis.
  const std::vector<std::string>& concept_order() const { return concept_order_; }
  std::optional<std::size_t> concept_index(std::string_view name) const;

  bool empty() const { return classes_.empty() && units_.empty() && rules_.empty(); }

 private:
  void validate_mapping() const;

  std::vector<std::string> classes_;
  std::map<std::string, std::size_t, std::less<>> class_index_;
  std::vector<std::pair<std::string, std::string>> edges_;
  std::vector<std::vector<std::string>> ancestors_;
  std::vector<UnitEntry> units_;
  std::map<std::string, std::size_t, std::less<>> unit_index_;
  std::map<std::string, std::string, std::less<>> quantity_of_unit_;
  std::map<std::string, ConceptRef> column_concepts_;
  std::vector<Rule> rules_;
  std::vector<std::string> concept_order_;
  std::map<std::string, std::size_t, std::less<>> concept_index_;
};

KnowledgeGraph parse_kg(std::string_view json_text);
KnowledgeGraph load_kg(const std::filesystem::path& path);

std::map<std::string, ConceptRef> parse_concept_map(std::string_view json_text);
std::map<std::string, ConceptRef> load_concept_map(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Reasoning

/// Ground facts plus dimensions for unit terms that are not registered names.
struct FactBase {
  std::set<Atom> atoms;
  std::map<std::string, Dims> unit_dims;
};

struct Fixpoint {
  std::set<Atom> facts;
  /// Rule that first derived each inferred head fact.
  std::map<Atom, std::string> derived_by;
  std::size_t rounds = 0;

  bool holds(const Atom& atom) const { return facts.count(atom) != 0; }
};

/// Semi-naive forward chaining to fixpoint. Class facts are closed upward
/// under subsumption; Different(u, v) holds iff the unit dimensions differ.
Fixpoint forward_chain(const KnowledgeGraph& kg, FactBase facts);

struct Verdict {
  enum class Kind { Interpretable, NonInterpretable, Uncovered };
  Kind kind = Kind::Uncovered;
  std::string reason;

  static Verdict interpretable() { return {Kind::Interpretable, {}}; }
  static Verdict non_interpretable(std::string why) { return {Kind::NonInterpretable, std::move(why)}; }
  static Verdict uncovered() { return {Kind::Uncovered, {}}; }

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

std::string_view to_string(Verdict::Kind kind);
Verdict::Kind parse_verdict_kind(std::string_view text);

/// Class that transform nodes are asserted under when reasoning (e.g.
/// add -> Addition, group_sum -> aggregationSum).
std::string_view transform_class(OpId op);

/// Unit of an expression: mapped leaf units pushed through propagate_unit and
/// named against the registry. Unmapped leaves are unknown.
MaybeUnit infer_unit(const KnowledgeGraph& kg, const FeatureExpr& expr);

/// The interpretability discriminator.
Verdict judge(const KnowledgeGraph& kg, const FeatureExpr& expr, const Dataset& d);

/// Fraction of non-target columns that have a concept mapping.
double coverage(const KnowledgeGraph& kg, const Dataset& d);
std::vector<std::string> unmapped_columns(const KnowledgeGraph& kg, const Dataset& d);

}  // namespace kraft
