// Ridge and multinomial logistic regression.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kraft/learn.hpp"

namespace kraft {

namespace {

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 0 for constant columns
};

Standardizer standardize(const Matrix& x) {
  Standardizer s{std::vector<double>(x.cols, 0.0), std::vector<double>(x.cols, 0.0)};
  const double n = static_cast<double>(x.rows);
  for (std::size_t j = 0; j < x.cols; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) m += x(i, j);
    m /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) var += (x(i, j) - m) * (x(i, j) - m);
    var /= n;
    s.mean[j] = m;
    s.scale[j] = var > 1e-24 * std::max(1.0, m * m) ? std::sqrt(var) : 0.0;
  }
  return s;
}

double z(const Standardizer& s, std::size_t j, double v) {
  return s.scale[j] > 0.0 ? (v - s.mean[j]) / s.scale[j] : 0.0;
}

}  // namespace

double LinearModel::predict_row(std::span<const double> row) const {
  double y = intercept;
  for (std::size_t j = 0; j < coef.size(); ++j) y += coef[j] * row[j];
  return y;
}

std::vector<double> LogisticModel::predict_proba(std::span<const double> row) const {
  const std::size_t p = mean.size();
  std::vector<double> logits(static_cast<std::size_t>(n_classes));
  for (std::size_t c = 0; c < logits.size(); ++c) {
    const double* w = weights.data() + c * (p + 1);
    double s = w[0];
    for (std::size_t j = 0; j < p; ++j)
      if (scale[j] > 0.0) s += w[j + 1] * (row[j] - mean[j]) / scale[j];
    logits[c] = s;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& l : logits) {
    l = std::exp(l - mx);
    total += l;
  }
  for (double& l : logits) l /= total;
  return logits;
}

double LogisticModel::predict_row(std::span<const double> row) const {
  const auto p = predict_proba(row);
  std::size_t best = 0;
  for (std::size_t c = 1; c < p.size(); ++c)
    if (p[c] > p[best]) best = c;
  return static_cast<double>(best);
}

LinearModel fit_linear(const Matrix& x, const TargetVector& y, const LearnerSpec& spec) {
  const std::size_t n = x.rows, p = x.cols;
  const Standardizer s = standardize(x);
  double y_mean = 0.0;
  for (double v : y.values) y_mean += v;
  y_mean /= static_cast<double>(n);

  LinearModel model;
  model.coef.assign(p, 0.0);
  model.intercept = y_mean;
  if (p == 0) return model;

  Eigen::MatrixXd zm(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::VectorXd yc(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    yc(static_cast<Eigen::Index>(i)) = y.values[i] - y_mean;
    for (std::size_t j = 0; j < p; ++j) zm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = z(s, j, x(i, j));
  }
  Eigen::MatrixXd gram = zm.transpose() * zm;
  gram.diagonal().array() += spec.ridge * static_cast<double>(n);
  const Eigen::VectorXd w = gram.ldlt().solve(zm.transpose() * yc);
  for (std::size_t j = 0; j < p; ++j) {
    if (s.scale[j] == 0.0) continue;
    model.coef[j] = w(static_cast<Eigen::Index>(j)) / s.scale[j];
    model.intercept -= model.coef[j] * s.mean[j];
  }
  return model;
}

LogisticModel fit_logistic(const Matrix& x, const TargetVector& y, const LearnerSpec& spec) {
  const std::size_t n = x.rows, p = x.cols;
  const auto c_count = static_cast<std::size_t>(y.n_classes);
  const Standardizer s = standardize(x);

  LogisticModel model;
  model.n_classes = y.n_classes;
  model.mean = s.mean;
  model.scale = s.scale;
  model.weights.assign(c_count * (p + 1), 0.0);

  Matrix zx(n, p + 1);
  for (std::size_t i = 0; i < n; ++i) {
    zx(i, 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j) zx(i, j + 1) = z(s, j, x(i, j));
  }

  // Step 1/L with L bounding the Hessian of the mean log-loss.
  const double lr = 2.0 / static_cast<double>(p + 1);
  std::vector<double> grad(model.weights.size());
  std::vector<double> prob(c_count);
  for (int it = 0; it < spec.logistic_iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = zx.row(i);
      double mx = -INFINITY;
      for (std::size_t c = 0; c < c_count; ++c) {
        const double* w = model.weights.data() + c * (p + 1);
        double l = 0.0;
        for (std::size_t j = 0; j <= p; ++j) l += w[j] * row[j];
        prob[c] = l;
        mx = std::max(mx, l);
      }
      double total = 0.0;
      for (double& v : prob) {
        v = std::exp(v - mx);
        total += v;
      }
      const auto label = static_cast<std::size_t>(y.values[i]);
      for (std::size_t c = 0; c < c_count; ++c) {
        const double err = prob[c] / total - (c == label ? 1.0 : 0.0);
        double* g = grad.data() + c * (p + 1);
        for (std::size_t j = 0; j <= p; ++j) g[j] += err * row[j];
      }
    }
    const double step = lr / static_cast<double>(n);
    for (std::size_t k = 0; k < grad.size(); ++k) {
      const bool bias = k % (p + 1) == 0;
      model.weights[k] -= step * grad[k] + (bias ? 0.0 : lr * spec.ridge * model.weights[k]);
    }
  }
  return model;
}

}  // namespace kraft
