#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kraft/data.hpp"

namespace kraft {

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

/// Regression values, or class codes 0..n_classes-1.
struct TargetVector {
  std::vector<double> values;
  Task task = Task::Regression;
  int n_classes = 0;

  static TargetVector from(const Dataset& d) { return {d.target_values(), d.task(), d.n_classes()}; }
  /// Positive class for binary F1: the last label in code order.
  int positive_class() const { return n_classes - 1; }
};

enum class LearnerKind { DecisionTree, RandomForest, Linear, Logistic };

std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view text);

struct LearnerSpec {
  LearnerKind kind = LearnerKind::RandomForest;
  int max_depth = 6;
  int n_trees = 50;
  /// Fraction of features tried per split; 0 selects sqrt(p)/p.
  double feature_subsample = 0.0;
  double ridge = 1e-6;
  int logistic_iterations = 200;
  std::uint64_t seed = 0;

  /// Throws InputError when a value is out of range or the kind does not fit the task.
  void validate(Task task) const;
  /// Forest for classification, ridge regression for regression.
  static LearnerSpec default_for(Task task);
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  /// Leaf payload: class proportions, or {mean} for regression.
  std::vector<double> value;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTreeModel {
  Task task = Task::Regression;
  int n_classes = 0;
  std::size_t n_features = 0;
  std::vector<TreeNode> nodes;
  /// Summed weighted impurity decrease per feature.
  std::vector<double> impurity_decrease;

  const std::vector<double>& leaf(std::span<const double> row) const;
  double predict_row(std::span<const double> row) const;
};

struct RandomForestModel {
  Task task = Task::Regression;
  int n_classes = 0;
  std::size_t n_features = 0;
  std::vector<DecisionTreeModel> trees;

  double predict_row(std::span<const double> row) const;
};

/// Ridge least squares; coefficients are in the original feature scale.
struct LinearModel {
  std::vector<double> coef;
  double intercept = 0.0;

  double predict_row(std::span<const double> row) const;
};

/// Multinomial logistic regression on standardized inputs.
struct LogisticModel {
  int n_classes = 2;
  std::vector<double> mean;
  std::vector<double> scale;
  /// n_classes rows of (intercept, w_1..w_p).
  std::vector<double> weights;

  std::vector<double> predict_proba(std::span<const double> row) const;
  double predict_row(std::span<const double> row) const;
};

class Model {
 public:
  using Variant = std::variant<DecisionTreeModel, RandomForestModel, LinearModel, LogisticModel>;

  explicit Model(Variant impl) : impl_(std::move(impl)) {}

  LearnerKind kind() const;
  std::size_t n_features() const;
  std::vector<double> predict(const Matrix& x) const;
  double predict_row(std::span<const double> row) const;

  const Variant& impl() const { return impl_; }

 private:
  Variant impl_;
};

/// X must be fully observed; imputation is the caller's job.
Model train(const LearnerSpec& spec, const Matrix& x, const TargetVector& y);

/// Mean decrease in impurity per feature over the forest, normalized to sum
/// to 1 (uniform when no split was made). Throws for non-forest models.
std::vector<double> feature_importance(const Model& model);

/// Binary F1 on `positive` (default n_classes - 1) when n_classes <= 2, macro
/// F1 over the classes present in truth or pred otherwise. Zero when
/// precision + recall is zero. Throws on length mismatch.
double f1_score(std::span<const double> truth, std::span<const double> pred, int n_classes, int positive = -1);

/// 1 - sum|pred - y| / sum|mean(y) - y|; nullopt when y is constant.
/// Throws on length mismatch.
std::optional<double> one_minus_rae(std::span<const double> truth, std::span<const double> pred);

/// Feature columns with per-cell missing flags, as fed to evaluate_cv.
struct FeatureTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::vector<std::vector<std::uint8_t>> missing;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  void add(std::string name, std::vector<double> values, std::vector<std::uint8_t> miss);
};

/// Median-imputes each column from the `fit_rows` and materializes `rows`.
Matrix impute_matrix(const FeatureTable& table, std::span<const std::size_t> fit_rows,
                     std::span<const std::size_t> rows);

/// Task metric per fold (F1 or 1-rae); stratified folds for classification.
std::vector<double> cv_fold_scores(const LearnerSpec& spec, const FeatureTable& table, const TargetVector& y,
                                   std::size_t k, std::uint64_t seed);

/// Mean of cv_fold_scores.
double evaluate_cv(const LearnerSpec& spec, const FeatureTable& table, const TargetVector& y, std::size_t k,
                   std::uint64_t seed);

}  // namespace kraft
