// Model dispatch and cross-validated evaluation.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kraft/error.hpp"
#include "kraft/learn.hpp"

namespace kraft {

DecisionTreeModel fit_tree(const Matrix& x, const TargetVector& y, const LearnerSpec& spec);
RandomForestModel fit_forest(const Matrix& x, const TargetVector& y, const LearnerSpec& spec);
LinearModel fit_linear(const Matrix& x, const TargetVector& y, const LearnerSpec& spec);
LogisticModel fit_logistic(const Matrix& x, const TargetVector& y, const LearnerSpec& spec);

namespace {

template <class... F>
struct Overload : F... {
  using F::operator()...;
};
template <class... F>
Overload(F...) -> Overload<F...>;

bool constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

LearnerKind Model::kind() const {
  return std::visit(Overload{[](const DecisionTreeModel&) { return LearnerKind::DecisionTree; },
                             [](const RandomForestModel&) { return LearnerKind::RandomForest; },
                             [](const LinearModel&) { return LearnerKind::Linear; },
                             [](const LogisticModel&) { return LearnerKind::Logistic; }},
                    impl_);
}

std::size_t Model::n_features() const {
  return std::visit(Overload{[](const DecisionTreeModel& m) { return m.n_features; },
                             [](const RandomForestModel& m) { return m.n_features; },
                             [](const LinearModel& m) { return m.coef.size(); },
                             [](const LogisticModel& m) { return m.mean.size(); }},
                    impl_);
}

double Model::predict_row(std::span<const double> row) const {
  if (row.size() != n_features())
    throw std::invalid_argument("predict: row has " + std::to_string(row.size()) + " features, model expects " +
                                std::to_string(n_features()));
  return std::visit([&](const auto& m) { return m.predict_row(row); }, impl_);
}

std::vector<double> Model::predict(const Matrix& x) const {
  if (x.cols != n_features())
    throw std::invalid_argument("predict: matrix has " + std::to_string(x.cols) + " features, model expects " +
                                std::to_string(n_features()));
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = std::visit([&](const auto& m) { return m.predict_row(x.row(i)); }, impl_);
  return out;
}

Model train(const LearnerSpec& spec, const Matrix& x, const TargetVector& y) {
  if (x.rows == 0) throw std::invalid_argument("train: empty feature matrix");
  if (x.rows != y.values.size()) throw std::invalid_argument("train: row count differs from target length");
  if (!std::all_of(x.data.begin(), x.data.end(), [](double v) { return std::isfinite(v); }))
    throw std::invalid_argument("train: feature matrix has non-finite cells");
  if (y.task == Task::Classification) {
    for (double v : y.values)
      if (v < 0 || v >= y.n_classes || v != std::floor(v)) throw std::invalid_argument("train: bad class code");
  }
  spec.validate(y.task);
  switch (spec.kind) {
    case LearnerKind::DecisionTree: return Model(fit_tree(x, y, spec));
    case LearnerKind::RandomForest: return Model(fit_forest(x, y, spec));
    case LearnerKind::Linear: return Model(fit_linear(x, y, spec));
    case LearnerKind::Logistic:
      if (constant(y.values)) throw std::invalid_argument("train: logistic regression needs two classes");
      return Model(fit_logistic(x, y, spec));
  }
  throw std::logic_error("train: unhandled learner kind");
}

void FeatureTable::add(std::string name, std::vector<double> values, std::vector<std::uint8_t> miss) {
  if (!columns.empty() && values.size() != rows()) throw std::invalid_argument("FeatureTable: column length mismatch");
  if (miss.empty()) miss.assign(values.size(), 0);
  if (miss.size() != values.size()) throw std::invalid_argument("FeatureTable: missing mask length mismatch");
  names.push_back(std::move(name));
  columns.push_back(std::move(values));
  missing.push_back(std::move(miss));
}

Matrix impute_matrix(const FeatureTable& table, std::span<const std::size_t> fit_rows,
                     std::span<const std::size_t> rows) {
  Matrix x(rows.size(), table.columns.size());
  std::vector<double> observed;
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    const auto& col = table.columns[j];
    const auto& miss = table.missing[j];
    observed.clear();
    for (std::size_t r : fit_rows)
      if (!miss[r] && std::isfinite(col[r])) observed.push_back(col[r]);
    double median = 0.0;
    if (!observed.empty()) {
      std::sort(observed.begin(), observed.end());
      const std::size_t h = observed.size() / 2;
      median = observed.size() % 2 ? observed[h] : 0.5 * (observed[h - 1] + observed[h]);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::size_t r = rows[i];
      x(i, j) = (miss[r] || !std::isfinite(col[r])) ? median : col[r];
    }
  }
  return x;
}

std::vector<double> cv_fold_scores(const LearnerSpec& spec, const FeatureTable& table, const TargetVector& y,
                                   std::size_t k, std::uint64_t seed) {
  const std::size_t n = y.values.size();
  if (!table.columns.empty() && table.rows() != n) throw std::invalid_argument("evaluate_cv: table rows differ from target");
  std::vector<int> strata;
  if (y.task == Task::Classification)
    for (double v : y.values) strata.push_back(static_cast<int>(v));
  const auto folds = kfold_indices(n, k, seed, strata);

  std::vector<double> scores;
  scores.reserve(folds.size());
  for (const auto& fold : folds) {
    TargetVector train_y{{}, y.task, y.n_classes};
    std::vector<double> valid_y;
    for (std::size_t r : fold.train) train_y.values.push_back(y.values[r]);
    for (std::size_t r : fold.valid) valid_y.push_back(y.values[r]);
    if (constant(train_y.values)) {
      scores.push_back(0.0);
      continue;
    }
    const Matrix train_x = impute_matrix(table, fold.train, fold.train);
    const Matrix valid_x = impute_matrix(table, fold.train, fold.valid);
    const auto pred = train(spec, train_x, train_y).predict(valid_x);
    if (y.task == Task::Classification)
      scores.push_back(f1_score(valid_y, pred, y.n_classes));
    else
      scores.push_back(one_minus_rae(valid_y, pred).value_or(0.0));
  }
  return scores;
}

double evaluate_cv(const LearnerSpec& spec, const FeatureTable& table, const TargetVector& y, std::size_t k,
                   std::uint64_t seed) {
  const auto scores = cv_fold_scores(spec, table, y, k, seed);
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

}  // namespace kraft
