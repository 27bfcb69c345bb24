#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "poisonlab/dataset.hpp"
#include "poisonlab/random.hpp"

namespace poisonlab {

struct ProjectionConfig {
  std::optional<double> perplexity;  // unset: min(30, (n - 1) / 3.5)
  std::size_t iterations = 1000;
  double early_exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  double learning_rate = 200.0;
  std::uint64_t seed = 42;

  friend bool operator==(const ProjectionConfig&, const ProjectionConfig&) = default;
};

struct ProjectionResult {
  std::vector<std::size_t> ids;                 // dataset order
  std::vector<std::array<double, 2>> coordinates;
  double final_kl = 0.0;
  double kl_after_exaggeration = 0.0;

  friend bool operator==(const ProjectionResult&, const ProjectionResult&) = default;
};

inline double effective_perplexity(const ProjectionConfig& config, std::size_t n) {
  const double limit = (static_cast<double>(n) - 1.0) / 3.0;
  if (!config.perplexity) return std::min(30.0, (static_cast<double>(n) - 1.0) / 3.5);
  if (!(*config.perplexity > 0.0) || !(*config.perplexity < limit)) {
    throw DataError("perplexity must lie in (0, (n-1)/3)");
  }
  return *config.perplexity;
}

namespace detail {

// Row-conditional affinities whose entropy matches log(perplexity), found by bisection on
// the Gaussian precision; then symmetrised and normalised to sum one.
inline std::vector<double> tsne_affinities(const std::vector<double>& sq_dist, std::size_t n, double perplexity) {
  constexpr double kTol = 1e-5;
  constexpr int kMaxTries = 50;
  const double target_entropy = std::log(perplexity);
  std::vector<double> cond(n * n, 0.0);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    double beta = 1.0, beta_lo = 0.0, beta_hi = std::numeric_limits<double>::infinity();
    double min_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) min_d = std::min(min_d, sq_dist[i * n + j]);
    }
    double sum = 0.0;
    for (int tries = 0; tries < kMaxTries; ++tries) {
      sum = 0.0;
      double weighted = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        // Shifting by the nearest distance leaves the normalised row unchanged and avoids underflow.
        row[j] = j == i ? 0.0 : std::exp(-beta * (sq_dist[i * n + j] - min_d));
        sum += row[j];
        weighted += row[j] * (sq_dist[i * n + j] - min_d);
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      const double diff = entropy - target_entropy;
      if (std::abs(diff) < kTol) break;
      if (diff > 0) {
        beta_lo = beta;
        beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta + beta_hi);
      } else {
        beta_hi = beta;
        beta = 0.5 * (beta + beta_lo);
      }
    }
    for (std::size_t j = 0; j < n; ++j) cond[i * n + j] = row[j] / sum;
  }
  std::vector<double> p(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      p[i * n + j] = std::max((cond[i * n + j] + cond[j * n + i]) / (2.0 * static_cast<double>(n)), 1e-12);
    }
  }
  return p;
}

inline double tsne_kl(const std::vector<double>& p, const std::vector<std::array<double, 2>>& y) {
  const std::size_t n = y.size();
  double z = 0.0;
  std::vector<double> num(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
      num[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy);
      z += num[i * n + j];
    }
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double q = std::max(num[i * n + j] / z, 1e-300);
      kl += p[i * n + j] * std::log(p[i * n + j] / q);
    }
  }
  return std::max(kl, 0.0);
}

}  // namespace detail

/// Exact O(n^2) t-SNE to two dimensions. Each point's initial position is drawn from a
/// N(0, 1e-4^2) stream keyed by its instance id, so permuting the rows permutes the output.
inline ProjectionResult tsne_embed(const Dataset& dataset, const ProjectionConfig& config) {
  const std::size_t n = dataset.size();
  if (n < 4) throw DataError("t-SNE needs at least 4 instances");
  if (config.iterations < config.exaggeration_iterations) {
    throw DataError("iterations must cover the early exaggeration phase");
  }
  if (!(config.learning_rate > 0.0)) throw DataError("learning_rate must be positive");
  const double perplexity = effective_perplexity(config, n);

  std::vector<double> sq_dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d2 = squared_distance(dataset[i].features, dataset[j].features);
      sq_dist[i * n + j] = sq_dist[j * n + i] = d2;
    }
  }
  const std::vector<double> p = detail::tsne_affinities(sq_dist, n, perplexity);

  ProjectionResult result;
  result.ids.reserve(n);
  std::vector<std::array<double, 2>> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.ids.push_back(dataset[i].id);
    Rng rng(mix_seed(config.seed, dataset[i].id));
    y[i] = {1e-4 * rng.normal(), 1e-4 * rng.normal()};
  }

  std::vector<std::array<double, 2>> update(n, {0.0, 0.0}), gains(n, {1.0, 1.0}), grad(n);
  std::vector<double> num(n * n, 0.0);
  constexpr std::size_t kMomentumSwitch = 250;
  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const double exaggeration = iter < config.exaggeration_iterations ? config.early_exaggeration : 1.0;
    const double momentum = iter < kMomentumSwitch ? 0.5 : 0.8;

    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
        const double q = 1.0 / (1.0 + dx * dx + dy * dy);
        num[i * n + j] = num[j * n + i] = q;
        z += 2.0 * q;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double w = (exaggeration * p[i * n + j] - num[i * n + j] / z) * num[i * n + j];
        gx += w * (y[i][0] - y[j][0]);
        gy += w * (y[i][1] - y[j][1]);
      }
      grad[i] = {4.0 * gx, 4.0 * gy};
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < 2; ++c) {
        const bool same_sign = (grad[i][c] > 0.0) == (update[i][c] > 0.0);
        gains[i][c] = same_sign ? std::max(gains[i][c] * 0.8, 0.01) : gains[i][c] + 0.2;
        update[i][c] = momentum * update[i][c] - config.learning_rate * gains[i][c] * grad[i][c];
        y[i][c] += update[i][c];
      }
    }
    std::array<double, 2> mean{0.0, 0.0};
    for (const auto& pt : y) {
      mean[0] += pt[0];
      mean[1] += pt[1];
    }
    for (auto& pt : y) {
      pt[0] -= mean[0] / static_cast<double>(n);
      pt[1] -= mean[1] / static_cast<double>(n);
    }
    if (iter + 1 == config.exaggeration_iterations) result.kl_after_exaggeration = detail::tsne_kl(p, y);
  }
  if (config.exaggeration_iterations == 0) result.kl_after_exaggeration = detail::tsne_kl(p, y);
  result.final_kl = detail::tsne_kl(p, y);
  result.coordinates = std::move(y);
  return result;
}

}  // namespace poisonlab
