#include "kraft/transform.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "kraft/error.hpp"
#include "kraft/rng.hpp"

namespace kraft {

namespace {

constexpr std::array<TransformOp, 19> kCatalog = {{
    {OpId::Log, "log", Arity::Unary, false},
    {OpId::Sqrt, "sqrt", Arity::Unary, false},
    {OpId::Square, "square", Arity::Unary, false},
    {OpId::Reciprocal, "reciprocal", Arity::Unary, false},
    {OpId::OneHot, "one_hot", Arity::Unary, false},
    {OpId::Add, "add", Arity::Binary, true},
    {OpId::Sub, "sub", Arity::Binary, false},
    {OpId::Mul, "mul", Arity::Binary, true},
    {OpId::Div, "div", Arity::Binary, false},
    {OpId::And, "and", Arity::Binary, true},
    {OpId::Or, "or", Arity::Binary, true},
    {OpId::GroupMin, "group_min", Arity::Aggregation, false},
    {OpId::GroupMax, "group_max", Arity::Aggregation, false},
    {OpId::GroupMean, "group_mean", Arity::Aggregation, false},
    {OpId::GroupSum, "group_sum", Arity::Aggregation, false},
    {OpId::Day, "day", Arity::DateOp, false},
    {OpId::Month, "month", Arity::DateOp, false},
    {OpId::Year, "year", Arity::DateOp, false},
    {OpId::IsWeekend, "is_weekend", Arity::DateOp, false},
}};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string_view infix_symbol(OpId op) {
  switch (op) {
    case OpId::Add: return "+";
    case OpId::Sub: return "-";
    case OpId::Mul: return "*";
    case OpId::Div: return "/";
    case OpId::And: return "AND";
    case OpId::Or: return "OR";
    default: return "?";
  }
}

std::string_view type_name(FeatureExpr::NodeType t) {
  switch (t) {
    case FeatureExpr::NodeType::Raw: return "raw";
    case FeatureExpr::NodeType::Unary: return "unary";
    case FeatureExpr::NodeType::Binary: return "binary";
    case FeatureExpr::NodeType::Aggregation: return "aggregation";
    case FeatureExpr::NodeType::Date: return "date";
  }
  return "?";
}

std::string length_prefixed(std::string_view s) { return std::to_string(s.size()) + ":" + std::string(s); }

}  // namespace

std::span<const TransformOp> catalog() { return kCatalog; }

const TransformOp& op_info(OpId id) { return kCatalog[static_cast<std::size_t>(id)]; }

std::size_t action_index(OpId id) { return static_cast<std::size_t>(id); }

std::optional<OpId> find_op(std::string_view name) {
  for (const auto& op : kCatalog)
    if (op.name == name) return op.id;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// FeatureExpr

struct FeatureExpr::Node {
  NodeType type = NodeType::Raw;
  OpId op = OpId::Log;
  std::string column;
  std::string level;
  std::vector<FeatureExpr> children;
  int order = 0;
  std::string key;
};

namespace {

template <class Node>
void finish_node(Node& n) {
  if (n.type == FeatureExpr::NodeType::Raw) {
    n.order = 0;
    n.key = "c" + length_prefixed(n.column);
    return;
  }
  int deepest = 0;
  n.key = std::string(op_info(n.op).name) + "(";
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    deepest = std::max(deepest, n.children[i].order());
    if (i) n.key += ",";
    n.key += n.children[i].key();
  }
  n.key += ")";
  if (n.op == OpId::OneHot) n.key += "[" + length_prefixed(n.level) + "]";
  n.order = deepest + 1;
}

void require_arity(OpId op, Arity arity) {
  if (op_info(op).arity != arity)
    throw std::invalid_argument("operator '" + std::string(op_info(op).name) + "' used with the wrong arity");
}

}  // namespace

FeatureExpr FeatureExpr::raw(std::string column) {
  auto n = std::make_shared<Node>();
  n->type = NodeType::Raw;
  n->column = std::move(column);
  finish_node(*n);
  return FeatureExpr(std::move(n));
}

FeatureExpr FeatureExpr::unary(OpId op, FeatureExpr child) {
  require_arity(op, Arity::Unary);
  if (op == OpId::OneHot) throw std::invalid_argument("one_hot needs a level; use FeatureExpr::one_hot");
  auto n = std::make_shared<Node>();
  n->type = NodeType::Unary;
  n->op = op;
  n->children.push_back(std::move(child));
  finish_node(*n);
  return FeatureExpr(std::move(n));
}

FeatureExpr FeatureExpr::one_hot(FeatureExpr child, std::string level) {
  auto n = std::make_shared<Node>();
  n->type = NodeType::Unary;
  n->op = OpId::OneHot;
  n->level = std::move(level);
  n->children.push_back(std::move(child));
  finish_node(*n);
  return FeatureExpr(std::move(n));
}

FeatureExpr FeatureExpr::binary(OpId op, FeatureExpr left, FeatureExpr right) {
  require_arity(op, Arity::Binary);
  auto n = std::make_shared<Node>();
  n->type = NodeType::Binary;
  n->op = op;
  n->children = {std::move(left), std::move(right)};
  finish_node(*n);
  return FeatureExpr(std::move(n));
}

FeatureExpr FeatureExpr::aggregate(OpId op, FeatureExpr key, FeatureExpr value) {
  require_arity(op, Arity::Aggregation);
  auto n = std::make_shared<Node>();
  n->type = NodeType::Aggregation;
  n->op = op;
  n->children = {std::move(key), std::move(value)};
  finish_node(*n);
  return FeatureExpr(std::move(n));
}

FeatureExpr FeatureExpr::date(OpId op, FeatureExpr child) {
  require_arity(op, Arity::DateOp);
  auto n = std::make_shared<Node>();
  n->type = NodeType::Date;
  n->op = op;
  n->children.push_back(std::move(child));
  finish_node(*n);
  return FeatureExpr(std::move(n));
}

FeatureExpr::NodeType FeatureExpr::type() const { return node_->type; }

OpId FeatureExpr::op() const {
  if (node_->type == NodeType::Raw) throw std::logic_error("raw reference has no operator");
  return node_->op;
}

const std::string& FeatureExpr::column() const { return node_->column; }
const std::string& FeatureExpr::level() const { return node_->level; }
std::span<const FeatureExpr> FeatureExpr::children() const { return node_->children; }
int FeatureExpr::order() const { return node_->order; }
const std::string& FeatureExpr::key() const { return node_->key; }

std::vector<std::string> FeatureExpr::leaves() const {
  std::vector<std::string> out;
  std::vector<const FeatureExpr*> stack{this};
  while (!stack.empty()) {
    const FeatureExpr* e = stack.back();
    stack.pop_back();
    if (e->is_raw()) {
      if (std::find(out.begin(), out.end(), e->column()) == out.end()) out.push_back(e->column());
      continue;
    }
    const auto kids = e->children();
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(&*it);
  }
  return out;
}

std::string render_name(const FeatureExpr& expr) {
  switch (expr.type()) {
    case FeatureExpr::NodeType::Raw:
      return upper(expr.column());
    case FeatureExpr::NodeType::Unary:
      if (expr.op() == OpId::OneHot)
        return "ONE_HOT(" + render_name(expr.children()[0]) + " = " + expr.level() + ")";
      [[fallthrough]];
    case FeatureExpr::NodeType::Date:
      return upper(op_info(expr.op()).name) + "(" + render_name(expr.children()[0]) + ")";
    case FeatureExpr::NodeType::Binary:
      return "(" + render_name(expr.children()[0]) + " " + std::string(infix_symbol(expr.op())) + " " +
             render_name(expr.children()[1]) + ")";
    case FeatureExpr::NodeType::Aggregation:
      return upper(op_info(expr.op()).name) + "(" + render_name(expr.children()[1]) + " BY " +
             render_name(expr.children()[0]) + ")";
  }
  return {};
}

ColumnKind output_kind(const FeatureExpr& expr, const Dataset& d) {
  if (expr.is_raw()) return d.column(expr.column()).kind;

  const TransformOp& info = op_info(expr.op());
  auto fail = [&](std::string_view why) -> ColumnKind {
    throw InputError("'" + std::string(info.name) + "' is not applicable: " + std::string(why) + " in " +
                     render_name(expr));
  };
  const auto kids = expr.children();
  switch (info.arity) {
    case Arity::Unary: {
      const ColumnKind in = output_kind(kids[0], d);
      if (expr.op() == OpId::OneHot) {
        if (in != ColumnKind::Categorical) return fail("one_hot needs a categorical input");
        return ColumnKind::Boolean;
      }
      if (in != ColumnKind::Numeric) return fail("needs a numeric input");
      return ColumnKind::Numeric;
    }
    case Arity::Binary: {
      const ColumnKind l = output_kind(kids[0], d);
      const ColumnKind r = output_kind(kids[1], d);
      if (expr.op() == OpId::And || expr.op() == OpId::Or) {
        if (l != ColumnKind::Boolean || r != ColumnKind::Boolean) return fail("needs boolean inputs");
        return ColumnKind::Boolean;
      }
      if (l != ColumnKind::Numeric || r != ColumnKind::Numeric) return fail("needs numeric inputs");
      return ColumnKind::Numeric;
    }
    case Arity::Aggregation: {
      const ColumnKind key = output_kind(kids[0], d);
      const ColumnKind value = output_kind(kids[1], d);
      if (key != ColumnKind::Categorical && key != ColumnKind::Boolean)
        return fail("group key must be categorical or boolean");
      if (value != ColumnKind::Numeric) return fail("aggregated value must be numeric");
      return ColumnKind::Numeric;
    }
    case Arity::DateOp: {
      if (output_kind(kids[0], d) != ColumnKind::Date) return fail("needs a date input");
      return expr.op() == OpId::IsWeekend ? ColumnKind::Boolean : ColumnKind::Numeric;
    }
  }
  return fail("unknown arity");
}

nlohmann::json expr_to_json(const FeatureExpr& expr) {
  nlohmann::json node;
  node["type"] = type_name(expr.type());
  if (expr.is_raw()) {
    node["column"] = expr.column();
    return node;
  }
  node["op"] = op_info(expr.op()).name;
  if (expr.op() == OpId::OneHot) node["level"] = expr.level();
  node["children"] = nlohmann::json::array();
  for (const auto& c : expr.children()) node["children"].push_back(expr_to_json(c));
  return node;
}

FeatureExpr expr_from_json(const nlohmann::json& node) {
  try {
    const std::string type = node.at("type").get<std::string>();
    if (type == "raw") return FeatureExpr::raw(node.at("column").get<std::string>());
    const std::string op_name = node.at("op").get<std::string>();
    const auto op = find_op(op_name);
    if (!op) throw InputError("unknown transform '" + op_name + "'");
    std::vector<FeatureExpr> kids;
    for (const auto& c : node.at("children")) kids.push_back(expr_from_json(c));
    auto need = [&](std::size_t n) {
      if (kids.size() != n) throw InputError("transform '" + op_name + "' expects " + std::to_string(n) + " children");
    };
    if (type == "unary") {
      need(1);
      if (*op == OpId::OneHot) return FeatureExpr::one_hot(kids[0], node.at("level").get<std::string>());
      return FeatureExpr::unary(*op, kids[0]);
    }
    if (type == "binary") {
      need(2);
      return FeatureExpr::binary(*op, kids[0], kids[1]);
    }
    if (type == "aggregation") {
      need(2);
      return FeatureExpr::aggregate(*op, kids[0], kids[1]);
    }
    if (type == "date") {
      need(1);
      return FeatureExpr::date(*op, kids[0]);
    }
    throw InputError("unknown expression node type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed expression: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("malformed expression: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Evaluation

double CandidateFeature::missing_fraction() const {
  if (missing.empty()) return 0.0;
  const auto n = std::count(missing.begin(), missing.end(), std::uint8_t{1});
  return static_cast<double>(n) / static_cast<double>(missing.size());
}

std::vector<std::string> one_hot_levels(const Column& column) {
  std::vector<std::size_t> counts(column.levels.size(), 0);
  for (std::size_t i = 0; i < column.size(); ++i)
    if (!column.is_missing(i)) ++counts[static_cast<std::size_t>(column.values[i])];
  std::vector<std::size_t> idx(column.levels.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < idx.size() && i < kOneHotMaxLevels; ++i) out.push_back(column.levels[idx[i]]);
  std::sort(out.begin(), out.end());
  if (column.levels.size() > kOneHotMaxLevels) out.emplace_back(kOtherLevel);
  return out;
}

namespace {

struct Values {
  std::vector<double> v;
  std::vector<std::uint8_t> m;
};

void finalize(Values& out) {
  for (std::size_t i = 0; i < out.v.size(); ++i) {
    if (out.m[i] || !std::isfinite(out.v[i])) {
      out.m[i] = 1;
      out.v[i] = kNaN;
    }
  }
}

Values raw_values(const Column& col) {
  Values out{col.values, col.missing};
  if (col.kind == ColumnKind::Categorical) {
    const auto missing_code = static_cast<double>(col.levels.size());
    for (std::size_t i = 0; i < out.v.size(); ++i) {
      if (out.m[i]) {
        out.v[i] = missing_code;
        out.m[i] = 0;
      }
    }
  }
  return out;
}

Values compute_unary(OpId op, const Values& x) {
  const std::size_t n = x.v.size();
  Values out{std::vector<double>(n, kNaN), x.m};
  for (std::size_t i = 0; i < n; ++i) {
    if (out.m[i]) continue;
    const double a = x.v[i];
    switch (op) {
      case OpId::Log:
        if (a > 0) out.v[i] = std::log(a); else out.m[i] = 1;
        break;
      case OpId::Sqrt:
        if (a > 0) out.v[i] = std::sqrt(a); else out.m[i] = 1;
        break;
      case OpId::Square: out.v[i] = a * a; break;
      case OpId::Reciprocal:
        if (a != 0) out.v[i] = 1.0 / a; else out.m[i] = 1;
        break;
      default: throw std::logic_error("compute_unary: not a unary numeric op");
    }
  }
  finalize(out);
  return out;
}

Values compute_one_hot(const Column& col, const std::string& level, const Values& codes) {
  const std::size_t n = codes.v.size();
  Values out{std::vector<double>(n, 0.0), std::vector<std::uint8_t>(n, 0)};
  std::vector<std::uint8_t> hit(col.levels.size() + 1, 0);
  if (level == kOtherLevel) {
    const auto kept = one_hot_levels(col);
    for (std::size_t l = 0; l < col.levels.size(); ++l)
      hit[l] = std::find(kept.begin(), kept.end(), col.levels[l]) == kept.end();
  } else {
    const auto it = std::lower_bound(col.levels.begin(), col.levels.end(), level);
    if (it == col.levels.end() || *it != level)
      throw InputError("one_hot: column '" + col.name + "' has no level '" + level + "'");
    hit[static_cast<std::size_t>(it - col.levels.begin())] = 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto code = static_cast<std::size_t>(codes.v[i]);
    out.v[i] = code < hit.size() && hit[code] ? 1.0 : 0.0;
  }
  return out;
}

Values compute_binary(OpId op, const Values& x, const Values& y) {
  const std::size_t n = x.v.size();
  Values out{std::vector<double>(n, kNaN), std::vector<std::uint8_t>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (x.m[i] || y.m[i]) {
      out.m[i] = 1;
      continue;
    }
    const double a = x.v[i], b = y.v[i];
    switch (op) {
      case OpId::Add: out.v[i] = a + b; break;
      case OpId::Sub: out.v[i] = a - b; break;
      case OpId::Mul: out.v[i] = a * b; break;
      case OpId::Div:
        if (b != 0) out.v[i] = a / b; else out.m[i] = 1;
        break;
      case OpId::And: out.v[i] = (a != 0 && b != 0) ? 1.0 : 0.0; break;
      case OpId::Or: out.v[i] = (a != 0 || b != 0) ? 1.0 : 0.0; break;
      default: throw std::logic_error("compute_binary: not a binary op");
    }
  }
  finalize(out);
  return out;
}

Values compute_group(OpId op, const Values& key, const Values& value) {
  struct Acc {
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::size_t count = 0;
  };
  std::map<double, Acc> groups;
  const std::size_t n = key.v.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (key.m[i]) continue;
    Acc& acc = groups[key.v[i]];
    if (value.m[i]) continue;
    const double x = value.v[i];
    acc.min = std::min(acc.min, x);
    acc.max = std::max(acc.max, x);
    acc.sum += x;
    ++acc.count;
  }
  Values out{std::vector<double>(n, kNaN), std::vector<std::uint8_t>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (key.m[i]) {
      out.m[i] = 1;
      continue;
    }
    const Acc& acc = groups.at(key.v[i]);
    if (acc.count == 0) {
      out.m[i] = 1;
      continue;
    }
    switch (op) {
      case OpId::GroupMin: out.v[i] = acc.min; break;
      case OpId::GroupMax: out.v[i] = acc.max; break;
      case OpId::GroupMean: out.v[i] = acc.sum / static_cast<double>(acc.count); break;
      case OpId::GroupSum: out.v[i] = acc.sum; break;
      default: throw std::logic_error("compute_group: not an aggregation");
    }
  }
  finalize(out);
  return out;
}

Values compute_date(OpId op, const Values& days) {
  using namespace std::chrono;
  const std::size_t n = days.v.size();
  Values out{std::vector<double>(n, kNaN), days.m};
  for (std::size_t i = 0; i < n; ++i) {
    if (out.m[i]) continue;
    const sys_days sd{std::chrono::days{static_cast<long>(days.v[i])}};
    const year_month_day ymd{sd};
    switch (op) {
      case OpId::Day: out.v[i] = static_cast<double>(static_cast<unsigned>(ymd.day())); break;
      case OpId::Month: out.v[i] = static_cast<double>(static_cast<unsigned>(ymd.month())); break;
      case OpId::Year: out.v[i] = static_cast<double>(static_cast<int>(ymd.year())); break;
      case OpId::IsWeekend: {
        const unsigned wd = weekday{sd}.c_encoding();
        out.v[i] = (wd == 0 || wd == 6) ? 1.0 : 0.0;
        break;
      }
      default: throw std::logic_error("compute_date: not a date op");
    }
  }
  return out;
}

// Evaluates the top node of `expr` from already-materialized children.
Values combine(const FeatureExpr& expr, std::span<const Values* const> kids, const Dataset& d) {
  const OpId op = expr.op();
  switch (op_info(op).arity) {
    case Arity::Unary:
      if (op == OpId::OneHot) return compute_one_hot(d.column(expr.children()[0].column()), expr.level(), *kids[0]);
      return compute_unary(op, *kids[0]);
    case Arity::Binary: return compute_binary(op, *kids[0], *kids[1]);
    case Arity::Aggregation: return compute_group(op, *kids[0], *kids[1]);
    case Arity::DateOp: return compute_date(op, *kids[0]);
  }
  throw std::logic_error("combine: unknown arity");
}

Values evaluate(const FeatureExpr& expr, const Dataset& d) {
  if (expr.is_raw()) return raw_values(d.column(expr.column()));
  std::vector<Values> kid_values;
  for (const auto& c : expr.children()) kid_values.push_back(evaluate(c, d));
  std::vector<const Values*> ptrs;
  for (const auto& v : kid_values) ptrs.push_back(&v);
  return combine(expr, ptrs, d);
}

CandidateFeature make_candidate(FeatureExpr expr, ColumnKind kind, Values values) {
  CandidateFeature c{std::move(expr), kind, std::move(values.v), std::move(values.m), std::nullopt, {}, 0.0};
  c.display_name = render_name(c.expr);
  return c;
}

}  // namespace

CandidateFeature apply(const FeatureExpr& expr, const Dataset& d) {
  const ColumnKind kind = output_kind(expr, d);
  return make_candidate(expr, kind, evaluate(expr, d));
}

double abs_correlation(std::span<const double> x, std::span<const std::uint8_t> missing,
                       std::span<const double> target) {
  double mx = 0, my = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (missing[i]) continue;
    ++n;
    mx += x[i];
    my += target[i];
  }
  if (n < 2) return 0.0;
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (missing[i]) continue;
    const double dx = x[i] - mx, dy = target[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0 || syy <= 0) return 0.0;
  const double r = std::abs(sxy / std::sqrt(sxx * syy));
  return std::isfinite(r) ? std::min(r, 1.0) : 0.0;
}

std::vector<CandidateFeature> expand_action(const TransformOp& op, std::span<const CandidateFeature> pool,
                                            const Dataset& d, std::span<const double> target,
                                            const ExpandOptions& options) {
  if (options.cap < 1) throw std::invalid_argument("expand_action: cap must be >= 1");

  struct Tuple {
    FeatureExpr expr;
    std::array<std::size_t, 2> operands;
  };
  std::vector<Tuple> tuples;
  std::unordered_set<std::string> seen;
  for (const auto& f : pool) seen.insert(f.expr.key());

  auto admit = [&](FeatureExpr e, std::size_t a, std::size_t b) {
    if (e.order() > options.max_order) return;
    if (!seen.insert(e.key()).second) return;
    tuples.push_back({std::move(e), {a, b}});
  };

  const std::size_t p = pool.size();
  switch (op.arity) {
    case Arity::Unary:
      for (std::size_t i = 0; i < p; ++i) {
        if (op.id == OpId::OneHot) {
          if (pool[i].kind != ColumnKind::Categorical || !pool[i].expr.is_raw()) continue;
          for (const auto& level : one_hot_levels(d.column(pool[i].expr.column())))
            admit(FeatureExpr::one_hot(pool[i].expr, level), i, i);
        } else if (pool[i].kind == ColumnKind::Numeric) {
          admit(FeatureExpr::unary(op.id, pool[i].expr), i, i);
        }
      }
      break;
    case Arity::Binary: {
      const ColumnKind need = (op.id == OpId::And || op.id == OpId::Or) ? ColumnKind::Boolean : ColumnKind::Numeric;
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = op.commutative ? i + 1 : 0; j < p; ++j) {
          if (i == j || pool[i].kind != need || pool[j].kind != need) continue;
          std::size_t a = i, b = j;
          // One canonical orientation for commutative operators.
          if (op.commutative && pool[b].expr.key() < pool[a].expr.key()) std::swap(a, b);
          admit(FeatureExpr::binary(op.id, pool[a].expr, pool[b].expr), a, b);
        }
      }
      break;
    }
    case Arity::Aggregation:
      for (std::size_t k = 0; k < p; ++k) {
        if (pool[k].kind != ColumnKind::Categorical && pool[k].kind != ColumnKind::Boolean) continue;
        for (std::size_t v = 0; v < p; ++v) {
          if (v == k || pool[v].kind != ColumnKind::Numeric) continue;
          admit(FeatureExpr::aggregate(op.id, pool[k].expr, pool[v].expr), k, v);
        }
      }
      break;
    case Arity::DateOp:
      for (std::size_t i = 0; i < p; ++i)
        if (pool[i].kind == ColumnKind::Date) admit(FeatureExpr::date(op.id, pool[i].expr), i, i);
      break;
  }

  if (tuples.size() > options.max_tuples) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(op.id)));
    rng.shuffle(tuples.begin(), tuples.end());
    tuples.erase(tuples.begin() + static_cast<std::ptrdiff_t>(options.max_tuples), tuples.end());
  }

  std::vector<CandidateFeature> out;
  out.reserve(tuples.size());
  for (auto& t : tuples) {
    const auto& a = pool[t.operands[0]];
    const auto& b = pool[t.operands[1]];
    const Values va{a.values, a.missing};
    const Values vb{b.values, b.missing};
    const std::array<const Values*, 2> kids{&va, &vb};
    const std::size_t arity = op.arity == Arity::Binary || op.arity == Arity::Aggregation ? 2 : 1;
    Values result = combine(t.expr, std::span<const Values* const>(kids.data(), arity), d);
    const ColumnKind kind = output_kind(t.expr, d);
    CandidateFeature c = make_candidate(std::move(t.expr), kind, std::move(result));
    if (c.missing_fraction() > options.max_missing_fraction) continue;
    c.relevance = abs_correlation(c.values, c.missing, target);
    out.push_back(std::move(c));
  }

  std::sort(out.begin(), out.end(), [](const CandidateFeature& x, const CandidateFeature& y) {
    if (x.relevance != y.relevance) return x.relevance > y.relevance;
    return x.display_name < y.display_name;
  });
  if (out.size() > options.cap) out.erase(out.begin() + static_cast<std::ptrdiff_t>(options.cap), out.end());
  return out;
}

std::uint64_t search_space_size(std::uint64_t p, const std::map<std::uint64_t, std::uint64_t>& transforms_by_arity) {
  if (p < 1) throw std::invalid_argument("search_space_size: p must be >= 1");
  std::uint64_t max_arity = 0;
  for (const auto& [arity, count] : transforms_by_arity)
    if (count > 0 && arity >= 1 && arity <= p) max_arity = std::max(max_arity, arity);

  std::uint64_t total = 0;
  std::uint64_t perms = 1;  // A_i^p, built as p * (p-1) * ... * (p-i+1)
  for (std::uint64_t i = 1; i <= max_arity; ++i) {
    if (__builtin_mul_overflow(perms, p - i + 1, &perms))
      throw std::overflow_error("search_space_size: permutation count overflows 64 bits");
    const auto it = transforms_by_arity.find(i);
    if (it == transforms_by_arity.end() || it->second == 0) continue;
    std::uint64_t term = 0;
    if (__builtin_mul_overflow(perms, it->second, &term) || __builtin_add_overflow(total, term, &total))
      throw std::overflow_error("search_space_size: count overflows 64 bits");
  }
  return total;
}

}  // namespace kraft
