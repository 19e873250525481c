#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "kraft/data.hpp"
#include "kraft/units.hpp"

namespace kraft {

enum class OpId : std::uint8_t {
  Log,
  Sqrt,
  Square,
  Reciprocal,
  OneHot,
  Add,
  Sub,
  Mul,
  Div,
  And,
  Or,
  GroupMin,
  GroupMax,
  GroupMean,
  GroupSum,
  Day,
  Month,
  Year,
  IsWeekend,
};

enum class Arity { Unary, Binary, Aggregation, DateOp };

struct TransformOp {
  OpId id;
  std::string_view name;
  Arity arity;
  bool commutative;
};

/// The fixed action set, in action-index order.
std::span<const TransformOp> catalog();
const TransformOp& op_info(OpId id);
std::optional<OpId> find_op(std::string_view name);
std::size_t action_index(OpId id);

/// Immutable expression tree over raw columns. Copies share structure.
class FeatureExpr {
 public:
  enum class NodeType { Raw, Unary, Binary, Aggregation, Date };

  static FeatureExpr raw(std::string column);
  static FeatureExpr unary(OpId op, FeatureExpr child);
  /// Indicator of one level of a categorical expression.
  static FeatureExpr one_hot(FeatureExpr child, std::string level);
  static FeatureExpr binary(OpId op, FeatureExpr left, FeatureExpr right);
  static FeatureExpr aggregate(OpId op, FeatureExpr key, FeatureExpr value);
  static FeatureExpr date(OpId op, FeatureExpr child);

  NodeType type() const;
  bool is_raw() const { return type() == NodeType::Raw; }
  /// Precondition: not a raw reference.
  OpId op() const;
  const std::string& column() const;
  const std::string& level() const;
  /// Unary/date: {child}; binary: {left, right}; aggregation: {key, value}.
  std::span<const FeatureExpr> children() const;

  /// Transform nodes on the deepest root-to-leaf path; raw references are 0.
  int order() const;
  /// Distinct leaf columns in first-visit order.
  std::vector<std::string> leaves() const;

  /// Structural identity: equal keys iff structurally equal expressions.
  const std::string& key() const;

  friend bool operator==(const FeatureExpr& a, const FeatureExpr& b) { return a.key() == b.key(); }

 private:
  struct Node;
  explicit FeatureExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Fully parenthesized infix with upper-case names, e.g.
/// `(WEIGHT / SQUARE(HEIGHT))`, `GROUP_MEAN(INCOME BY CITY)`.
std::string render_name(const FeatureExpr& expr);

/// Output kind of `expr` over `d`; throws InputError on unknown columns or
/// inapplicable operand kinds.
ColumnKind output_kind(const FeatureExpr& expr, const Dataset& d);

/// JSON tree: {"type", "op", "column", "level", "children"}.
nlohmann::json expr_to_json(const FeatureExpr& expr);
FeatureExpr expr_from_json(const nlohmann::json& node);

/// A feature materialized over the dataset rows. Non-finite results and
/// domain violations are missing cells.
struct CandidateFeature {
  FeatureExpr expr;
  ColumnKind kind = ColumnKind::Numeric;
  std::vector<double> values;
  std::vector<std::uint8_t> missing;
  MaybeUnit unit;  // filled in by the discriminator
  std::string display_name;
  double relevance = 0.0;  // |Pearson r| with the target, set by expand_action

  double missing_fraction() const;
};

/// Row-wise (group-wise for aggregations) evaluation. Raw categorical columns
/// materialize as level codes with missing cells mapped to their own code.
CandidateFeature apply(const FeatureExpr& expr, const Dataset& d);

inline constexpr std::size_t kOneHotMaxLevels = 20;
inline constexpr std::string_view kOtherLevel = "⟂other";

/// Levels one_hot expands a categorical column into: the 20 most frequent
/// (ties by name), plus the fold-in level when more exist.
std::vector<std::string> one_hot_levels(const Column& column);

struct ExpandOptions {
  std::size_t cap = 8;
  std::uint64_t seed = 0;
  int max_order = 5;
  /// Upper bound on evaluated operand tuples; larger enumerations are
  /// subsampled with `seed`.
  std::size_t max_tuples = 4096;
  double max_missing_fraction = 0.5;
};

/// Applies `op` to every applicable operand tuple drawn from `pool`, drops
/// duplicates of existing features and mostly-missing results, and keeps the
/// `cap` candidates best correlated with `target`.
std::vector<CandidateFeature> expand_action(const TransformOp& op, std::span<const CandidateFeature> pool,
                                            const Dataset& d, std::span<const double> target,
                                            const ExpandOptions& options);

/// |Pearson r| over rows where `x` is present; 0 when either side is constant.
double abs_correlation(std::span<const double> x, std::span<const std::uint8_t> missing,
                       std::span<const double> target);

/// Size of the search space: sum over arity i of i-permutations of p
/// features times the number of i-ary transforms. Throws std::overflow_error.
std::uint64_t search_space_size(std::uint64_t p, const std::map<std::uint64_t, std::uint64_t>& transforms_by_arity);

}  // namespace kraft
