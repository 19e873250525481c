#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kraft/error.hpp"
#include "kraft/learn.hpp"
#include "kraft/rng.hpp"
#include "oracles.hpp"

namespace kraft {
namespace {

Matrix from_columns(const std::vector<std::vector<double>>& cols) {
  Matrix x(cols.front().size(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < x.rows; ++i) x(i, j) = cols[j][i];
  return x;
}

TargetVector regression(std::vector<double> y) { return {std::move(y), Task::Regression, 0}; }
TargetVector classes(std::vector<double> y, int n) { return {std::move(y), Task::Classification, n}; }

LearnerSpec spec(LearnerKind kind, std::uint64_t seed = 0) {
  LearnerSpec s;
  s.kind = kind;
  s.seed = seed;
  return s;
}

double accuracy(const Model& m, const Matrix& x, const std::vector<double>& y) {
  const auto pred = m.predict(x);
  double ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += pred[i] == y[i];
  return ok / static_cast<double>(y.size());
}

FeatureTable table_of(const std::vector<std::vector<double>>& cols) {
  FeatureTable t;
  for (std::size_t j = 0; j < cols.size(); ++j)
    t.add("f" + std::to_string(j), cols[j], std::vector<std::uint8_t>(cols[j].size(), 0));
  return t;
}

TEST(F1, Examples) {
  const std::vector<double> truth = {1, 1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(f1_score(truth, truth, 2), 1.0);
  EXPECT_DOUBLE_EQ(f1_score(truth, std::vector<double>(5, 0.0), 2), 0.0);
  // TP=2, FN=1, FP=1: precision = recall = 2/3.
  const std::vector<double> pred = {1, 1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(f1_score(truth, pred, 2), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(f1_score(truth, pred, 2, 0), 0.5);  // TP=1 FP=1 FN=1 on class 0
  EXPECT_THROW(f1_score(truth, std::vector<double>{1}, 2), std::invalid_argument);
}

TEST(F1, MacroAverageForThreeClasses) {
  const std::vector<double> truth = {0, 0, 1, 1, 2, 2};
  const std::vector<double> pred = {0, 1, 1, 1, 2, 0};
  // Per class: 0 -> P 1/2 R 1/2; 1 -> P 2/3 R 1; 2 -> P 1 R 1/2.
  const double f0 = 0.5, f1 = 2 * (2.0 / 3) * 1 / (2.0 / 3 + 1), f2 = 2 * 0.5 / 1.5;
  EXPECT_NEAR(f1_score(truth, pred, 3), (f0 + f1 + f2) / 3, 1e-15);
}

TEST(OneMinusRae, Examples) {
  const std::vector<double> y = {1, 2, 3};
  EXPECT_EQ(one_minus_rae(y, y), 1.0);
  EXPECT_EQ(one_minus_rae(y, std::vector<double>{2, 2, 2}), 0.0);
  EXPECT_EQ(one_minus_rae(y, std::vector<double>{1, 2, 5}), 0.0);
  EXPECT_FALSE(one_minus_rae(std::vector<double>{4, 4}, std::vector<double>{4, 5}));
  EXPECT_THROW(one_minus_rae(y, std::vector<double>{1}), std::invalid_argument);
}

TEST(Metrics, OneIffPerfectProperty) {
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.index(30);
    std::vector<double> y(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = std::round(rng.uniform(-5, 5) * 4) / 4;
      c[i] = static_cast<double>(rng.index(2));
    }
    y[0] = 10;  // never constant
    c[0] = 1;
    auto yp = y, cp = c;
    EXPECT_EQ(*one_minus_rae(y, yp), 1.0);
    EXPECT_EQ(f1_score(c, cp, 2), 1.0);
    const std::size_t k = rng.index(n);
    yp[k] += 0.5;
    cp[k] = 1 - cp[k];
    EXPECT_LT(*one_minus_rae(y, yp), 1.0);
    EXPECT_LT(f1_score(c, cp, 2), 1.0);
  }
}

TEST(Train, TreeSplitsOnBinaryFeature) {
  const std::vector<double> flag = {0, 1, 1, 0, 1, 0, 0, 1};
  const std::vector<double> noise = {3, 1, 4, 1, 5, 9, 2, 6};
  const Matrix x = from_columns({noise, flag});
  LearnerSpec s = spec(LearnerKind::DecisionTree);
  s.max_depth = 1;
  const Model m = train(s, x, classes(flag, 2));
  EXPECT_EQ(accuracy(m, x, flag), 1.0);
}

TEST(Train, LinearRecoversSlope) {
  std::vector<double> xs, ys;
  for (int i = 0; i < 20; ++i) {
    xs.push_back(i * 0.5);
    ys.push_back(2 * i * 0.5);
  }
  const Model m = train(spec(LearnerKind::Linear), from_columns({xs}), regression(ys));
  const auto& lin = std::get<LinearModel>(m.impl());
  EXPECT_NEAR(lin.coef[0], 2.0, 1e-5);  // ridge shrinkage at lambda 1e-6
  const auto oracle = testing::ridge_closed_form({xs}, ys, 1e-6);
  EXPECT_NEAR(lin.coef[0], oracle[1], 1e-10);
  EXPECT_NEAR(lin.intercept, oracle[0], 1e-10);
}

TEST(Train, LinearMatchesClosedFormProperty) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 10 + rng.index(60), p = 1 + rng.index(5);
    std::vector<std::vector<double>> cols(p, std::vector<double>(n));
    std::vector<double> y(n);
    for (auto& c : cols)
      for (auto& v : c) v = rng.uniform(-3, 3);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.normal();
      for (std::size_t j = 0; j < p; ++j) y[i] += (static_cast<double>(j) - 1.5) * cols[j][i];
    }
    const double lambda = rng.uniform() < 0.5 ? 1e-6 : 0.3;
    LearnerSpec s = spec(LearnerKind::Linear);
    s.ridge = lambda;
    const Model m = train(s, from_columns(cols), regression(y));
    const auto& lin = std::get<LinearModel>(m.impl());
    const auto oracle = testing::ridge_closed_form(cols, y, lambda);
    EXPECT_NEAR(lin.intercept, oracle[0], 1e-8);
    for (std::size_t j = 0; j < p; ++j) EXPECT_NEAR(lin.coef[j], oracle[j + 1], 1e-8);
  }
}

TEST(Train, SingleTreeForestIsReproducible) {
  Rng rng(1);
  std::vector<double> a(60), b(60), y(60);
  for (std::size_t i = 0; i < 60; ++i) {
    a[i] = rng.uniform();
    b[i] = rng.uniform();
    y[i] = a[i] > 0.5 ? 1 : 0;
  }
  LearnerSpec s = spec(LearnerKind::RandomForest, 42);
  s.n_trees = 1;
  s.feature_subsample = 1.0;
  const Matrix x = from_columns({a, b});
  EXPECT_EQ(train(s, x, classes(y, 2)).predict(x), train(s, x, classes(y, 2)).predict(x));
}

TEST(Predict, DeepTreeMemorizes) {
  Rng rng(2);
  std::vector<double> a(40), y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    a[i] = static_cast<double>(i) + rng.uniform(0, 0.5);
    y[i] = rng.normal();
  }
  LearnerSpec s = spec(LearnerKind::DecisionTree);
  s.max_depth = 64;
  const Model m = train(s, from_columns({a}), regression(y));
  EXPECT_EQ(m.predict(from_columns({a})), y);
}

TEST(Predict, ForestOfIdenticalTreesMatchesTree) {
  const std::vector<double> a = {1, 2, 3, 4, 5, 6}, y = {0, 0, 1, 1, 2, 2};
  const Matrix x = from_columns({a});
  const Model tree = train(spec(LearnerKind::DecisionTree), x, classes(y, 3));
  const auto& t = std::get<DecisionTreeModel>(tree.impl());
  RandomForestModel forest{Task::Classification, 3, 1, {t, t, t}};
  EXPECT_EQ(Model(forest).predict(x), tree.predict(x));
}

TEST(Predict, ZeroLogisticTiesToLowestClass) {
  LogisticModel m;
  m.n_classes = 2;
  m.mean = {0.0, 0.0};
  m.scale = {1.0, 1.0};
  m.weights.assign(6, 0.0);
  const std::vector<double> row = {3.0, -1.0};
  const auto proba = m.predict_proba(row);
  EXPECT_DOUBLE_EQ(proba[0], 0.5);
  EXPECT_EQ(Model(m).predict_row(row), 0.0);
}

TEST(Train, Errors) {
  EXPECT_THROW(train(spec(LearnerKind::Linear), Matrix(0, 1), regression({})), std::invalid_argument);
  EXPECT_THROW(train(spec(LearnerKind::Logistic), from_columns({{1, 2, 3}}), classes({1, 1, 1}, 2)),
               std::invalid_argument);
  EXPECT_THROW(train(spec(LearnerKind::Linear), from_columns({{1, 2}}), regression({1, 2, 3})),
               std::invalid_argument);
  const Model m = train(spec(LearnerKind::Linear), from_columns({{1, 2, 3}}), regression({1, 2, 4}));
  EXPECT_THROW(m.predict(from_columns({{1}, {2}})), std::invalid_argument);
  EXPECT_THROW(spec(LearnerKind::Linear).validate(Task::Classification), InputError);
  EXPECT_THROW(spec(LearnerKind::Logistic).validate(Task::Regression), InputError);
  LearnerSpec bad = spec(LearnerKind::RandomForest);
  bad.n_trees = 0;
  EXPECT_THROW(bad.validate(Task::Regression), InputError);
  EXPECT_EQ(parse_learner_kind("random_forest"), LearnerKind::RandomForest);
  EXPECT_THROW(parse_learner_kind("svm"), InputError);
}

TEST(Train, TreeErrorNonIncreasingInDepthProperty) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 20 + rng.index(80);
    std::vector<std::vector<double>> cols(3, std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& c : cols) c[i] = std::round(rng.uniform(0, 10));
      y[i] = std::sin(cols[0][i]) + 0.3 * cols[1][i] + rng.normal();
    }
    const Matrix x = from_columns(cols);
    double prev = INFINITY;
    for (int depth = 1; depth <= 8; ++depth) {
      LearnerSpec s = spec(LearnerKind::DecisionTree);
      s.max_depth = depth;
      const auto pred = train(s, x, regression(y)).predict(x);
      double sse = 0;
      for (std::size_t i = 0; i < n; ++i) sse += (pred[i] - y[i]) * (pred[i] - y[i]);
      EXPECT_LE(sse, prev + 1e-9) << "depth " << depth;
      prev = sse;
    }
  }
}

TEST(Importance, Examples) {
  Rng rng(9);
  std::vector<double> copy(120), noise(120), y(120);
  for (std::size_t i = 0; i < 120; ++i) {
    y[i] = rng.uniform(0, 10);
    copy[i] = y[i];
    noise[i] = rng.uniform(0, 10);
  }
  LearnerSpec s = spec(LearnerKind::RandomForest, 3);
  const auto single = feature_importance(train(s, from_columns({copy}), regression(y)));
  ASSERT_EQ(single.size(), 1u);
  EXPECT_DOUBLE_EQ(single[0], 1.0);

  const auto imp = feature_importance(train(s, from_columns({noise, copy}), regression(y)));
  EXPECT_GT(imp[1], imp[0]);
  EXPECT_NEAR(imp[0] + imp[1], 1.0, 1e-9);
  EXPECT_THROW(feature_importance(train(spec(LearnerKind::Linear), from_columns({copy}), regression(y))),
               std::invalid_argument);
}

TEST(Importance, SumsToOneProperty) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 30 + rng.index(50), p = 1 + rng.index(6);
    std::vector<std::vector<double>> cols(p, std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& c : cols) c[i] = rng.uniform();
      y[i] = static_cast<double>(rng.index(3));
    }
    LearnerSpec s = spec(LearnerKind::RandomForest, rng.next());
    s.n_trees = 10;
    const auto imp = feature_importance(train(s, from_columns(cols), classes(y, 3)));
    EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-9);
    for (double v : imp) EXPECT_GE(v, 0.0);
  }
}

TEST(Impute, MedianFromFitRows) {
  FeatureTable t;
  t.add("a", {1, 100, 3, 0, 5}, {0, 0, 0, 1, 0});
  const std::vector<std::size_t> fit = {0, 2, 3, 4}, rows = {3, 1};
  const Matrix m = impute_matrix(t, fit, rows);
  EXPECT_EQ(m(0, 0), 3.0);  // median of {1, 3, 5}
  EXPECT_EQ(m(1, 0), 100.0);
}

TEST(EvaluateCv, DeterministicAndMeanOfFolds) {
  Rng rng(4);
  std::vector<double> a(50), y(50);
  for (std::size_t i = 0; i < 50; ++i) {
    a[i] = rng.uniform();
    y[i] = 3 * a[i] + 0.2 * rng.normal();
  }
  const auto t = table_of({a});
  const LearnerSpec s = spec(LearnerKind::RandomForest, 1);
  const double e1 = evaluate_cv(s, t, regression(y), 5, 7);
  EXPECT_EQ(e1, evaluate_cv(s, t, regression(y), 5, 7));
  const auto folds = cv_fold_scores(s, t, regression(y), 2, 7);
  ASSERT_EQ(folds.size(), 2u);
  EXPECT_DOUBLE_EQ(evaluate_cv(s, t, regression(y), 2, 7), (folds[0] + folds[1]) / 2);
}

TEST(EvaluateCv, ExactTargetCopyScoresOne) {
  Rng rng(6);
  std::vector<double> noise(60), y(60);
  for (std::size_t i = 0; i < 60; ++i) {
    noise[i] = rng.uniform();
    y[i] = rng.normal() * 4;
  }
  const double e = evaluate_cv(spec(LearnerKind::Linear), table_of({noise, y}), regression(y), 5, 0);
  EXPECT_NEAR(e, 1.0, 1e-5);  // ridge shrinkage at lambda 1e-6
}

TEST(EvaluateCv, ConstantTrainTargetScoresZero) {
  const std::vector<double> a = {1, 2, 3, 4}, y = {5, 5, 5, 5};
  EXPECT_EQ(evaluate_cv(spec(LearnerKind::Linear), table_of({a}), regression(y), 2, 0), 0.0);
}

TEST(EvaluateCv, ColumnOrderInvariantForLinearModelsProperty) {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 40 + rng.index(40), p = 2 + rng.index(4);
    std::vector<std::vector<double>> cols(p, std::vector<double>(n));
    std::vector<double> y(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < p; ++j) {
        cols[j][i] = rng.uniform(-2, 2);
        s += cols[j][i] * static_cast<double>(j + 1);
      }
      y[i] = s + rng.normal();
      c[i] = s + rng.normal() > 0 ? 1 : 0;
    }
    auto permuted = cols;
    rng.shuffle(permuted.begin(), permuted.end());
    const double lin = evaluate_cv(spec(LearnerKind::Linear), table_of(cols), regression(y), 4, trial);
    const double lin_p = evaluate_cv(spec(LearnerKind::Linear), table_of(permuted), regression(y), 4, trial);
    EXPECT_NEAR(lin, lin_p, 1e-9);
    const double log = evaluate_cv(spec(LearnerKind::Logistic), table_of(cols), classes(c, 2), 4, trial);
    const double log_p = evaluate_cv(spec(LearnerKind::Logistic), table_of(permuted), classes(c, 2), 4, trial);
    EXPECT_NEAR(log, log_p, 1e-9);
  }
}

}  // namespace
}  // namespace kraft
