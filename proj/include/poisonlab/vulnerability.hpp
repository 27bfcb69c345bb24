#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "poisonlab/attacks.hpp"
#include "poisonlab/classifier.hpp"
#include "poisonlab/dataset.hpp"
#include "poisonlab/random.hpp"

namespace poisonlab {

struct DbdConfig {
  std::size_t n_directions = 256;
  double step_length = 0.05;
  std::size_t max_steps = 400;
  std::uint64_t seed = 42;

  void validate() const {
    if (n_directions < 1) throw DataError("n_directions must be at least 1");
    if (!(step_length > 0.0)) throw DataError("step_length must be positive");
    if (max_steps < 1) throw DataError("max_steps must be at least 1");
  }

  friend bool operator==(const DbdConfig&, const DbdConfig&) = default;
};

/// Unit vectors drawn from normalised standard Gaussians; zero-norm draws are redrawn.
inline std::vector<std::vector<double>> sample_directions(std::size_t dim, std::size_t count, std::uint64_t seed) {
  if (dim == 0) throw DataError("cannot sample directions in zero dimensions");
  Rng rng(seed);
  std::vector<std::vector<double>> out;
  out.reserve(count);
  while (out.size() < count) {
    std::vector<double> v(dim);
    double norm2 = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm2 += x * x;
    }
    if (!(norm2 > 0.0)) continue;
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) x *= inv;
    out.push_back(std::move(v));
  }
  return out;
}

/// Walks each direction in fixed steps until the predicted label changes from the point's own
/// label; the estimate is step_length times the fewest steps any direction needed.
/// Returns nullopt when no direction flips within max_steps.
/// `directions` must come from sample_directions(d, config.n_directions, config.seed).
inline std::optional<double> estimate_dbd(const Model& model, std::span<const double> features,
                                          const DbdConfig& config,
                                          const std::vector<std::vector<double>>& directions) {
  if (features.size() != model.dim()) throw DataError("feature length does not match model dimension");
  const Label own = predict(model, features);

  std::size_t best = config.max_steps + 1;
  std::vector<double> probe(features.size());
  for (const auto& dir : directions) {
    // Only steps that could beat the current best are worth probing.
    const std::size_t limit = std::min(config.max_steps, best - 1);
    for (std::size_t step = 1; step <= limit; ++step) {
      const double t = config.step_length * static_cast<double>(step);
      for (std::size_t f = 0; f < probe.size(); ++f) probe[f] = features[f] + t * dir[f];
      if (predict(model, probe) != own) {
        best = step;
        break;
      }
    }
    if (best == 1) break;
  }
  if (best > config.max_steps) return std::nullopt;
  return config.step_length * static_cast<double>(best);
}

inline std::optional<double> estimate_dbd(const Model& model, std::span<const double> features,
                                          const DbdConfig& config) {
  config.validate();
  if (features.size() != model.dim()) throw DataError("feature length does not match model dimension");
  return estimate_dbd(model, features, config, sample_directions(features.size(), config.n_directions, config.seed));
}

enum class RiskLevel { High, Intermediate, Low, Unknown };

inline constexpr std::string_view to_string(RiskLevel r) {
  switch (r) {
    case RiskLevel::High: return "high";
    case RiskLevel::Intermediate: return "intermediate";
    case RiskLevel::Low: return "low";
    case RiskLevel::Unknown: return "unknown";
  }
  return "unknown";
}

/// Below 5% is high risk, above 20% low; both boundaries are intermediate.
inline RiskLevel risk_level(double poisoning_rate) {
  if (!(poisoning_rate >= 0.0 && poisoning_rate <= 1.0)) throw DataError("poisoning rate must lie in [0, 1]");
  if (poisoning_rate < 0.05) return RiskLevel::High;
  if (poisoning_rate <= 0.20) return RiskLevel::Intermediate;
  return RiskLevel::Low;
}

inline double poisoning_rate(std::size_t n, std::size_t poisons) {
  return static_cast<double>(poisons) / static_cast<double>(n + poisons);
}

/// Default MCSA cap: ceil(0.25 * n) insertions.
inline std::size_t default_mcsa_cap(std::size_t n) { return (n + 3) / 4; }

/// Insertions the attack needs to flip the target with budget `cap`, or nullopt when it
/// fails within the cap.
inline std::optional<std::size_t> mcsa(const Dataset& dataset, const ModelConfig& model_config,
                                       AttackConfig attack_config, std::size_t target_id, std::size_t cap) {
  attack_config.budget = cap;
  const AttackResult result = run_attack(dataset, model_config, attack_config, target_id);
  if (!result.success) return std::nullopt;
  return result.poisons.size();
}

struct AlgorithmOutcome {
  Algorithm algorithm = Algorithm::BinarySearch;
  std::optional<std::size_t> mcsa;  // nullopt: failed at cap
  RiskLevel risk = RiskLevel::Unknown;
  Metrics post_attack_metrics;      // poisoned model evaluated on the original data
  std::optional<std::string> error;

  friend bool operator==(const AlgorithmOutcome&, const AlgorithmOutcome&) = default;
};

struct VulnerabilityRow {
  std::size_t instance_id = 0;
  Label true_label = Label::Negative;
  Label predicted_label = Label::Negative;
  std::optional<double> dbd;
  std::vector<AlgorithmOutcome> outcomes;  // aligned with the sweep's attack configs
  std::optional<std::string> error;

  friend bool operator==(const VulnerabilityRow&, const VulnerabilityRow&) = default;
};

struct SweepReport {
  Metrics victim_metrics;
  std::vector<Algorithm> algorithms;
  std::size_t cap = 0;
  std::vector<VulnerabilityRow> rows;
};

/// Runs `count` independent tasks over `parallelism` threads. Tasks write to their own slots,
/// so the outcome is independent of scheduling.
inline void parallel_for(std::size_t count, std::size_t parallelism, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(parallelism, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) task(i);
    });
  }
}

/// Attacks every instance with every config (budget = cap), estimating the DBD under the victim
/// model. Per-instance failures are recorded on the row rather than aborting the sweep.
/// `progress`, when set, is called with the number of finished rows (from worker threads).
inline SweepReport vulnerability_sweep(const Dataset& dataset, const ModelConfig& model_config,
                                       const std::vector<AttackConfig>& attack_configs, const DbdConfig& dbd_config,
                                       std::size_t cap, std::size_t parallelism,
                                       const std::function<void(std::size_t)>& progress = {}) {
  dbd_config.validate();
  const Model victim = train(dataset, model_config);
  SweepReport report;
  report.victim_metrics = evaluate(victim, dataset);
  report.cap = cap;
  for (const auto& cfg : attack_configs) report.algorithms.push_back(cfg.algorithm);
  report.rows.resize(dataset.size());
  const auto directions = sample_directions(dataset.dim(), dbd_config.n_directions, dbd_config.seed);
  std::atomic<std::size_t> done{0};

  parallel_for(dataset.size(), parallelism, [&](std::size_t pos) {
    const Instance& inst = dataset[pos];
    VulnerabilityRow row;
    row.instance_id = inst.id;
    row.true_label = inst.label;
    row.predicted_label = predict(victim, inst.features);
    try {
      row.dbd = estimate_dbd(victim, inst.features, dbd_config, directions);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    for (AttackConfig cfg : attack_configs) {
      AlgorithmOutcome outcome;
      outcome.algorithm = cfg.algorithm;
      try {
        cfg.budget = cap;
        const AttackResult result = run_attack(dataset, model_config, cfg, inst.id, &victim);
        if (result.success) {
          outcome.mcsa = result.poisons.size();
          outcome.risk = risk_level(poisoning_rate(dataset.size(), result.poisons.size()));
        }
        outcome.post_attack_metrics = evaluate(result.poisoned_model, dataset);
      } catch (const std::exception& e) {
        outcome.error = e.what();
      }
      row.outcomes.push_back(std::move(outcome));
    }
    report.rows[pos] = std::move(row);
    const std::size_t finished = done.fetch_add(1) + 1;
    if (progress) progress(finished);
  });

  std::sort(report.rows.begin(), report.rows.end(),
            [](const VulnerabilityRow& a, const VulnerabilityRow& b) { return a.instance_id < b.instance_id; });
  return report;
}

}  // namespace poisonlab
