#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "poisonlab/dataset.hpp"

namespace poisonlab {

struct ModelConfig {
  double learning_rate = 0.1;
  double l2_lambda = 1e-3;
  std::size_t max_epochs = 2000;
  double convergence_tol = 1e-6;  // on the max absolute gradient entry

  void validate() const {
    if (!(learning_rate > 0.0)) throw DataError("learning_rate must be positive");
    if (!(l2_lambda >= 0.0)) throw DataError("l2_lambda must be non-negative");
    if (max_epochs < 1) throw DataError("max_epochs must be at least 1");
    if (!(convergence_tol > 0.0)) throw DataError("convergence_tol must be positive");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct Model {
  std::vector<double> weights;
  double bias = 0.0;
  ModelConfig config;
  std::string trained_on;

  std::size_t dim() const { return weights.size(); }

  friend bool operator==(const Model&, const Model&) = default;
};

struct Metrics {
  std::size_t tn = 0, fn = 0, tp = 0, fp = 0;
  double accuracy = 0.0, recall = 0.0, f1 = 0.0, roc_auc = 0.0;

  std::size_t total() const { return tn + fn + tp + fp; }

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct TrainingTrace {
  std::vector<double> loss;  // objective after each accepted epoch; loss[0] is the initial value
  std::size_t epochs = 0;
  bool converged = false;
};

/// FNV-1a over instance ids and provenance flags, as 16 hex digits.
inline std::string fingerprint(const Dataset& dataset) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto feed = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& inst : dataset) {
    feed(inst.id);
    feed(inst.provenance == Provenance::Poisoned ? 1 : 0);
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
  return out;
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double decision_value(const Model& model, std::span<const double> features) {
  if (features.size() != model.weights.size()) {
    throw DataError("feature length " + std::to_string(features.size()) + " does not match model dimension " +
                    std::to_string(model.weights.size()));
  }
  double z = model.bias;
  for (std::size_t f = 0; f < features.size(); ++f) z += model.weights[f] * features[f];
  return z;
}

/// Probability of the positive class, kept strictly inside (0, 1).
inline double predict_proba(const Model& model, std::span<const double> features) {
  constexpr double kLow = 1e-300;
  constexpr double kHigh = 1.0 - 0x1.0p-53;
  return std::clamp(sigmoid(decision_value(model, features)), kLow, kHigh);
}

/// Ties (probability exactly 0.5) go to the positive class.
inline Label predict(const Model& model, std::span<const double> features) {
  return decision_value(model, features) >= 0.0 ? Label::Positive : Label::Negative;
}

namespace detail {

// Row-major copy of the training matrix for the inner loops.
struct DesignMatrix {
  std::vector<double> x;
  std::vector<double> y;
  std::size_t n = 0, d = 0;

  explicit DesignMatrix(const Dataset& data) : n(data.size()), d(data.dim()) {
    x.reserve(n * d);
    y.reserve(n);
    for (const auto& inst : data) {
      x.insert(x.end(), inst.features.begin(), inst.features.end());
      y.push_back(static_cast<double>(to_int(inst.label)));
    }
  }
};

inline double dot(const double* a, const double* b, std::size_t d) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t f = 0;
  for (; f + 4 <= d; f += 4) {
    s0 += a[f] * b[f];
    s1 += a[f + 1] * b[f + 1];
    s2 += a[f + 2] * b[f + 2];
    s3 += a[f + 3] * b[f + 3];
  }
  for (; f < d; ++f) s0 += a[f] * b[f];
  return (s0 + s1) + (s2 + s3);
}

// Gradient of the mean logistic loss plus (lambda/2)|w|^2 at (w, b); the objective value is
// accumulated only when `loss` is non-null.
inline void gradient(const DesignMatrix& m, double lambda, std::span<const double> w, double b,
                     std::vector<double>& grad_w, double& grad_b, double* loss = nullptr) {
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  double* __restrict g = grad_w.data();
  const std::size_t d = m.d;
  grad_b = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < m.n; ++i) {
    const double* __restrict row = m.x.data() + i * d;
    const double margin = m.y[i] * (b + dot(w.data(), row, d));
    if (loss) total += softplus(-margin);
    const double coeff = -m.y[i] * sigmoid(-margin);
    for (std::size_t f = 0; f < d; ++f) g[f] += coeff * row[f];
    grad_b += coeff;
  }
  const double inv_n = 1.0 / static_cast<double>(m.n);
  double reg = 0.0;
  for (std::size_t f = 0; f < m.d; ++f) {
    grad_w[f] = grad_w[f] * inv_n + lambda * w[f];
    reg += w[f] * w[f];
  }
  grad_b *= inv_n;
  if (loss) *loss = total * inv_n + 0.5 * lambda * reg;
}

inline double objective(const DesignMatrix& m, double lambda, std::span<const double> w, double b) {
  double total = 0.0;
  for (std::size_t i = 0; i < m.n; ++i) {
    total += softplus(-m.y[i] * (b + dot(w.data(), m.x.data() + i * m.d, m.d)));
  }
  double reg = 0.0;
  for (double v : w) reg += v * v;
  return total / static_cast<double>(m.n) + 0.5 * lambda * reg;
}

// Upper estimate of the gradient's Lipschitz constant: lambda_max([X 1]^T [X 1]) / (4n) + lambda,
// by a fixed number of power iterations from the all-ones vector, padded by 10%.
inline double lipschitz_bound(const DesignMatrix& m, double lambda) {
  std::vector<double> v(m.d + 1, 1.0), next(m.d + 1);
  double eig = 0.0;
  for (int it = 0; it < 60; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < m.n; ++i) {
      const double* row = m.x.data() + i * m.d;
      const double z = dot(v.data(), row, m.d) + v[m.d];
      for (std::size_t f = 0; f < m.d; ++f) next[f] += z * row[f];
      next[m.d] += z;
    }
    double norm = 0.0;
    for (double x : next) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) break;
    double vnorm = 0.0;
    for (double x : v) vnorm += x * x;
    eig = norm / std::sqrt(vnorm);
    for (std::size_t f = 0; f <= m.d; ++f) v[f] = next[f] / norm;
  }
  return 1.1 * eig / (4.0 * static_cast<double>(m.n)) + lambda;
}

}  // namespace detail

/// Full-batch gradient descent on the L2-regularised logistic loss from an all-zero start.
/// The step is min(learning_rate, 1/L) with L a bound on the gradient's Lipschitz constant,
/// which keeps every epoch a descent step on ill-conditioned inputs.
inline Model train(const Dataset& dataset, const ModelConfig& config, TrainingTrace* trace = nullptr) {
  config.validate();
  if (dataset.empty()) throw DataError("cannot train on an empty dataset");
  if (dataset.dim() == 0) throw DataError("cannot train on a zero-dimensional dataset");
  if (dataset.count(Label::Positive) == 0 || dataset.count(Label::Negative) == 0) {
    throw DataError("training requires both classes");
  }

  const detail::DesignMatrix m(dataset);
  const double rate = std::min(config.learning_rate, 1.0 / detail::lipschitz_bound(m, config.l2_lambda));
  std::vector<double> w(m.d, 0.0), grad(m.d);
  double b = 0.0, grad_b = 0.0;

  if (trace) {
    trace->loss.assign(1, detail::objective(m, config.l2_lambda, w, b));
    trace->epochs = 0;
    trace->converged = false;
  }
  bool converged = false;
  std::size_t epoch = 0;
  for (; epoch < config.max_epochs; ++epoch) {
    detail::gradient(m, config.l2_lambda, w, b, grad, grad_b);
    double largest = std::abs(grad_b);
    for (double g : grad) largest = std::max(largest, std::abs(g));
    if (largest < config.convergence_tol) {
      converged = true;
      break;
    }
    for (std::size_t f = 0; f < m.d; ++f) w[f] -= rate * grad[f];
    b -= rate * grad_b;
    if (trace) trace->loss.push_back(detail::objective(m, config.l2_lambda, w, b));
  }
  if (trace) {
    trace->epochs = epoch;
    trace->converged = converged;
  }
  return Model{std::move(w), b, config, fingerprint(dataset)};
}

/// Confusion counts from predicted labels and ROC-AUC from probabilities, treating +1 as the
/// positive class. ROC-AUC is the Mann-Whitney rank statistic with ties counted half; it is
/// 0.5 when a class is absent.
inline Metrics metrics_from_scores(std::span<const double> probabilities, std::span<const Label> predicted,
                                   std::span<const Label> labels) {
  Metrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted_pos = predicted[i] == Label::Positive;
    const bool actual_pos = labels[i] == Label::Positive;
    if (actual_pos) {
      predicted_pos ? ++m.tp : ++m.fn;
    } else {
      predicted_pos ? ++m.fp : ++m.tn;
    }
  }
  const auto total = static_cast<double>(m.total());
  m.accuracy = total > 0 ? static_cast<double>(m.tp + m.tn) / total : 0.0;
  m.recall = m.tp + m.fn > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
  m.f1 = m.tp > 0 ? 2.0 * static_cast<double>(m.tp) / static_cast<double>(2 * m.tp + m.fp + m.fn) : 0.0;

  const std::size_t n_pos = m.tp + m.fn;
  const std::size_t n_neg = m.tn + m.fp;
  if (n_pos == 0 || n_neg == 0) {
    m.roc_auc = 0.5;
    return m;
  }
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probabilities[a] < probabilities[b]; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && probabilities[order[j]] == probabilities[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == Label::Positive) positive_rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  m.roc_auc = (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
  return m;
}

inline Metrics evaluate(const Model& model, const Dataset& dataset) {
  if (dataset.empty()) throw DataError("cannot evaluate on an empty dataset");
  std::vector<double> probs;
  std::vector<Label> predicted, labels;
  probs.reserve(dataset.size());
  predicted.reserve(dataset.size());
  labels.reserve(dataset.size());
  for (const auto& inst : dataset) {
    probs.push_back(predict_proba(model, inst.features));
    predicted.push_back(predict(model, inst.features));
    labels.push_back(inst.label);
  }
  return metrics_from_scores(probs, predicted, labels);
}

struct FeatureImportance {
  std::size_t feature = 0;
  double importance = 0.0;
};

/// Features by descending |weight|, ties by ascending index.
inline std::vector<FeatureImportance> feature_importance(const Model& model) {
  std::vector<FeatureImportance> out;
  out.reserve(model.weights.size());
  for (std::size_t f = 0; f < model.weights.size(); ++f) out.push_back({f, std::abs(model.weights[f])});
  std::stable_sort(out.begin(), out.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) { return a.importance > b.importance; });
  return out;
}

}  // namespace poisonlab
