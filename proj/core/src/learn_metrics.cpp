#include <cmath>
#include <set>
#include <stdexcept>

#include "kraft/error.hpp"
#include "kraft/learn.hpp"

namespace kraft {

namespace {

void check_lengths(std::span<const double> truth, std::span<const double> pred) {
  if (truth.size() != pred.size()) throw std::invalid_argument("metric: truth and prediction lengths differ");
}

double class_f1(std::span<const double> truth, std::span<const double> pred, double cls) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == cls, p = pred[i] == cls;
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

}  // namespace

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::DecisionTree: return "decision_tree";
    case LearnerKind::RandomForest: return "random_forest";
    case LearnerKind::Linear: return "linear";
    case LearnerKind::Logistic: return "logistic";
  }
  return "?";
}

LearnerKind parse_learner_kind(std::string_view text) {
  for (auto k : {LearnerKind::DecisionTree, LearnerKind::RandomForest, LearnerKind::Linear, LearnerKind::Logistic})
    if (to_string(k) == text) return k;
  throw InputError("unknown learner '" + std::string(text) +
                   "' (expected decision_tree, random_forest, linear or logistic)");
}

void LearnerSpec::validate(Task task) const {
  if (max_depth <= 0) throw InputError("learner max_depth must be positive");
  if (n_trees <= 0) throw InputError("learner n_trees must be positive");
  if (feature_subsample < 0.0 || feature_subsample > 1.0)
    throw InputError("learner feature_subsample must lie in [0, 1] (0 selects the default)");
  if (!(ridge > 0.0)) throw InputError("learner ridge must be positive");
  if (logistic_iterations <= 0) throw InputError("learner logistic_iterations must be positive");
  if (kind == LearnerKind::Linear && task != Task::Regression)
    throw InputError("linear learner requires a regression task");
  if (kind == LearnerKind::Logistic && task != Task::Classification)
    throw InputError("logistic learner requires a classification task");
}

LearnerSpec LearnerSpec::default_for(Task task) {
  LearnerSpec spec;
  spec.kind = task == Task::Regression ? LearnerKind::Linear : LearnerKind::RandomForest;
  return spec;
}

double f1_score(std::span<const double> truth, std::span<const double> pred, int n_classes, int positive) {
  check_lengths(truth, pred);
  if (n_classes <= 2) return class_f1(truth, pred, positive >= 0 ? positive : std::max(n_classes - 1, 0));
  std::set<double> seen(truth.begin(), truth.end());
  seen.insert(pred.begin(), pred.end());
  if (seen.empty()) return 0.0;
  double sum = 0.0;
  for (double c : seen) sum += class_f1(truth, pred, c);
  return sum / static_cast<double>(seen.size());
}

std::optional<double> one_minus_rae(std::span<const double> truth, std::span<const double> pred) {
  check_lengths(truth, pred);
  if (truth.empty()) return std::nullopt;
  double mean = 0.0;
  for (double v : truth) mean += v;
  mean /= static_cast<double>(truth.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    num += std::abs(pred[i] - truth[i]);
    den += std::abs(mean - truth[i]);
  }
  if (den <= 0.0) return std::nullopt;
  return 1.0 - num / den;
}

}  // namespace kraft
