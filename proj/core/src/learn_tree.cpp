// CART trees and bagged forests.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kraft/learn.hpp"
#include "kraft/rng.hpp"

namespace kraft {

namespace {

struct TreeParams {
  int max_depth = 6;
  std::size_t features_per_split = 0;  // 0 = all
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const TargetVector& y, TreeParams params, Rng& rng)
      : x_(x), y_(y), params_(params), rng_(rng) {
    model_.task = y.task;
    model_.n_classes = y.n_classes;
    model_.n_features = x.cols;
    model_.impurity_decrease.assign(x.cols, 0.0);
    features_.resize(x.cols);
    std::iota(features_.begin(), features_.end(), 0);
  }

  DecisionTreeModel build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return std::move(model_);
  }

 private:
  bool classification() const { return y_.task == Task::Classification; }

  // Weighted impurity: n * gini, or the sum of squared deviations.
  double impurity(std::span<const std::size_t> rows) const {
    const double n = static_cast<double>(rows.size());
    if (classification()) {
      std::vector<double> counts(static_cast<std::size_t>(y_.n_classes), 0.0);
      for (std::size_t r : rows) counts[static_cast<std::size_t>(y_.values[r])] += 1.0;
      double sq = 0.0;
      for (double c : counts) sq += c * c;
      return n - sq / n;
    }
    double mean = 0.0;
    for (std::size_t r : rows) mean += y_.values[r];
    mean /= n;
    double sse = 0.0;
    for (std::size_t r : rows) sse += (y_.values[r] - mean) * (y_.values[r] - mean);
    return sse;
  }

  std::vector<double> leaf_value(std::span<const std::size_t> rows) const {
    const double n = static_cast<double>(rows.size());
    if (classification()) {
      std::vector<double> p(static_cast<std::size_t>(y_.n_classes), 0.0);
      for (std::size_t r : rows) p[static_cast<std::size_t>(y_.values[r])] += 1.0;
      for (double& v : p) v /= n;
      return p;
    }
    double mean = 0.0;
    for (std::size_t r : rows) mean += y_.values[r];
    return {mean / n};
  }

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double decrease = 0.0;
  };

  Split best_split(std::span<const std::size_t> rows, double parent) {
    std::size_t n_try = x_.cols;
    if (params_.features_per_split > 0 && params_.features_per_split < x_.cols) {
      n_try = params_.features_per_split;
      for (std::size_t i = 0; i < n_try; ++i) std::swap(features_[i], features_[i + rng_.index(x_.cols - i)]);
    } else {
      std::iota(features_.begin(), features_.end(), 0);
    }

    Split best;
    const std::size_t n = rows.size();
    const auto n_classes = static_cast<std::size_t>(std::max(y_.n_classes, 0));
    std::vector<std::pair<double, double>> sorted(n);
    std::vector<double> left_counts(n_classes), right_counts(n_classes);
    const double tolerance = 1e-12 * std::max(1.0, parent);

    std::vector<std::size_t> tried(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(n_try));
    std::sort(tried.begin(), tried.end());
    for (std::size_t f : tried) {
      for (std::size_t i = 0; i < n; ++i) sorted[i] = {x_(rows[i], f), y_.values[rows[i]]};
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front().first == sorted.back().first) continue;

      if (classification()) {
        std::fill(left_counts.begin(), left_counts.end(), 0.0);
        std::fill(right_counts.begin(), right_counts.end(), 0.0);
        for (const auto& s : sorted) right_counts[static_cast<std::size_t>(s.second)] += 1.0;
        double left_sq = 0.0, right_sq = 0.0;
        for (double c : right_counts) right_sq += c * c;
        for (std::size_t i = 0; i + 1 < n; ++i) {
          const auto c = static_cast<std::size_t>(sorted[i].second);
          left_sq += 2.0 * left_counts[c] + 1.0;
          right_sq -= 2.0 * right_counts[c] - 1.0;
          left_counts[c] += 1.0;
          right_counts[c] -= 1.0;
          if (sorted[i].first == sorted[i + 1].first) continue;
          const double nl = static_cast<double>(i + 1), nr = static_cast<double>(n - i - 1);
          const double child = (nl - left_sq / nl) + (nr - right_sq / nr);
          const double decrease = parent - child;
          if (decrease > best.decrease + tolerance) {
            best = {static_cast<int>(f), 0.5 * (sorted[i].first + sorted[i + 1].first), decrease};
          }
        }
      } else {
        double total = 0.0, total_sq = 0.0;
        for (const auto& s : sorted) {
          total += s.second;
          total_sq += s.second * s.second;
        }
        double left = 0.0, left_sq = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
          left += sorted[i].second;
          left_sq += sorted[i].second * sorted[i].second;
          if (sorted[i].first == sorted[i + 1].first) continue;
          const double nl = static_cast<double>(i + 1), nr = static_cast<double>(n - i - 1);
          const double right = total - left, right_sq = total_sq - left_sq;
          const double child = (left_sq - left * left / nl) + (right_sq - right * right / nr);
          const double decrease = parent - child;
          if (decrease > best.decrease + tolerance) {
            best = {static_cast<int>(f), 0.5 * (sorted[i].first + sorted[i + 1].first), decrease};
          }
        }
      }
    }
    return best;
  }

  int grow(std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(model_.nodes.size());
    model_.nodes.emplace_back();
    const double parent = impurity(rows);
    Split split;
    if (depth < params_.max_depth && rows.size() >= 2 && parent > 1e-12) split = best_split(rows, parent);
    if (split.feature < 0) {
      model_.nodes[static_cast<std::size_t>(id)].value = leaf_value(rows);
      return id;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) (x_(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(r);
    model_.impurity_decrease[static_cast<std::size_t>(split.feature)] += split.decrease;
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    TreeNode& node = model_.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  const Matrix& x_;
  const TargetVector& y_;
  TreeParams params_;
  Rng& rng_;
  DecisionTreeModel model_;
  std::vector<std::size_t> features_;
};

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace

const std::vector<double>& DecisionTreeModel::leaf(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

double DecisionTreeModel::predict_row(std::span<const double> row) const {
  const auto& v = leaf(row);
  if (task == Task::Classification) return static_cast<double>(argmax(v));
  return v.front();
}

double RandomForestModel::predict_row(std::span<const double> row) const {
  if (task == Task::Classification) {
    std::vector<double> votes(static_cast<std::size_t>(n_classes), 0.0);
    for (const auto& t : trees) votes[static_cast<std::size_t>(t.predict_row(row))] += 1.0;
    return static_cast<double>(argmax(votes));
  }
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict_row(row);
  return sum / static_cast<double>(trees.size());
}

DecisionTreeModel fit_tree(const Matrix& x, const TargetVector& y, const LearnerSpec& spec) {
  Rng rng(derive_seed(spec.seed, 0x74726565ULL));
  std::vector<std::size_t> rows(x.rows);
  std::iota(rows.begin(), rows.end(), 0);
  return TreeBuilder(x, y, {spec.max_depth, 0}, rng).build(std::move(rows));
}

RandomForestModel fit_forest(const Matrix& x, const TargetVector& y, const LearnerSpec& spec) {
  RandomForestModel forest;
  forest.task = y.task;
  forest.n_classes = y.n_classes;
  forest.n_features = x.cols;
  const double fraction =
      spec.feature_subsample > 0 ? spec.feature_subsample
                                 : (x.cols > 0 ? std::sqrt(static_cast<double>(x.cols)) / static_cast<double>(x.cols) : 1.0);
  const auto per_split = static_cast<std::size_t>(
      std::clamp(std::llround(fraction * static_cast<double>(x.cols)), 1LL, static_cast<long long>(std::max<std::size_t>(x.cols, 1))));
  for (int t = 0; t < spec.n_trees; ++t) {
    Rng rng(derive_seed(spec.seed, 0x666f7265ULL + static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows(x.rows);
    for (auto& r : rows) r = rng.index(x.rows);
    forest.trees.push_back(TreeBuilder(x, y, {spec.max_depth, per_split}, rng).build(std::move(rows)));
  }
  return forest;
}

std::vector<double> feature_importance(const Model& model) {
  const auto* forest = std::get_if<RandomForestModel>(&model.impl());
  if (!forest) throw std::invalid_argument("feature_importance requires a random forest model");
  std::vector<double> imp(forest->n_features, 0.0);
  for (const auto& t : forest->trees)
    for (std::size_t f = 0; f < imp.size(); ++f) imp[f] += t.impurity_decrease[f];
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (imp.empty()) return imp;
  if (total <= 0.0) {
    std::fill(imp.begin(), imp.end(), 1.0 / static_cast<double>(imp.size()));
    return imp;
  }
  for (double& v : imp) v /= total;
  return imp;
}

}  // namespace kraft
