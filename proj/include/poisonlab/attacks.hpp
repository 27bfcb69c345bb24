#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poisonlab/classifier.hpp"
#include "poisonlab/dataset.hpp"
#include "poisonlab/random.hpp"

namespace poisonlab {

enum class Algorithm { BinarySearch, StingRay };

inline constexpr std::string_view to_string(Algorithm a) {
  return a == Algorithm::BinarySearch ? "binary-search" : "stingray";
}

/// Identifier-safe form used in column and file names.
inline constexpr std::string_view column_name(Algorithm a) {
  return a == Algorithm::BinarySearch ? "binary_search" : "stingray";
}

inline Algorithm parse_algorithm(std::string_view text) {
  if (text == "binary-search" || text == "binary_search" || text == "BinarySearch") return Algorithm::BinarySearch;
  if (text == "stingray" || text == "StingRay") return Algorithm::StingRay;
  throw DataError("unknown attack algorithm '" + std::string(text) + "'");
}

struct AttackConfig {
  Algorithm algorithm = Algorithm::BinarySearch;
  std::size_t budget = 0;
  std::size_t bisection_cap = 20;
  std::size_t candidate_count = 20;
  double perturb_fraction = 0.25;
  double perturb_scale = 0.5;
  std::uint64_t seed = 42;

  void validate() const {
    if (bisection_cap < 1) throw DataError("bisection_cap must be at least 1");
    if (candidate_count < 1) throw DataError("candidate_count must be at least 1");
    if (!(perturb_fraction > 0.0 && perturb_fraction <= 1.0)) throw DataError("perturb_fraction must be in (0, 1]");
    if (!(perturb_scale >= 0.0)) throw DataError("perturb_scale must be non-negative");
  }

  friend bool operator==(const AttackConfig&, const AttackConfig&) = default;
};

struct IterationRecord {
  std::optional<std::size_t> base_id;  // nearest desired-class member used this iteration
  std::vector<double> candidate;       // empty when no valid candidate was found
  bool accepted = false;
  std::size_t resets = 0;
  double target_probability = 0.0;  // P(+1) for the target after this iteration

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct AttackResult {
  std::size_t target_id = 0;
  Label desired_label = Label::Negative;
  bool success = false;
  std::vector<Instance> poisons;
  Model victim_model;
  Model poisoned_model;
  std::vector<IterationRecord> trace;
  std::vector<std::size_t> innocents;
  double poisoning_rate = 0.0;
  std::size_t original_size = 0;
  AttackConfig config;

  friend bool operator==(const AttackResult&, const AttackResult&) = default;
};

struct CandidateOutcome {
  std::optional<std::vector<double>> candidate;
  std::size_t resets = 0;
};

inline std::vector<double> midpoint(std::span<const double> a, std::span<const double> b) {
  std::vector<double> mid(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) mid[i] = 0.5 * (a[i] + b[i]);
  return mid;
}

/// Midpoint of target and neighbour; while the model rejects it, move the candidate to the
/// midpoint between itself and the neighbour, at most `bisection_cap` times.
inline CandidateOutcome binary_search_candidate(std::span<const double> target, std::span<const double> neighbor,
                                                const Model& model, Label desired, std::size_t bisection_cap) {
  CandidateOutcome out;
  std::vector<double> candidate = midpoint(target, neighbor);
  while (predict(model, candidate) != desired) {
    if (out.resets == bisection_cap) return out;
    candidate = midpoint(candidate, neighbor);
    ++out.resets;
  }
  out.candidate = std::move(candidate);
  return out;
}

/// Indices of the ceil(fraction * d) features with the smallest |weight| under `model`.
inline std::vector<std::size_t> least_informative_features(const Model& model, double fraction) {
  const auto ranking = feature_importance(model);
  const std::size_t d = ranking.size();
  auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(d) - 1e-12));
  count = std::min(std::max<std::size_t>(count, 1), d);
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = d - count; i < d; ++i) out.push_back(ranking[i].feature);
  return out;
}

/// Copies of `base` with the least informative features (by the victim's weights) jittered
/// uniformly within +-perturb_scale * feature_scale. Of the copies the current model puts in
/// the desired class, returns the one closest to the target (first generated on ties).
inline CandidateOutcome stingray_candidate(std::span<const double> target, std::span<const double> base,
                                           const Model& model, const Model& victim_model, Label desired,
                                           const AttackConfig& config, std::span<const double> feature_scale,
                                           Rng& rng) {
  const auto perturbed = least_informative_features(victim_model, config.perturb_fraction);
  CandidateOutcome out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < config.candidate_count; ++c) {
    std::vector<double> copy(base.begin(), base.end());
    for (std::size_t f : perturbed) {
      const double half_width = config.perturb_scale * feature_scale[f];
      copy[f] += rng.uniform(-half_width, half_width);
    }
    if (predict(model, copy) != desired) continue;
    const double dist = squared_distance(copy, target);
    if (dist < best) {
      best = dist;
      out.candidate = std::move(copy);
    }
  }
  return out;
}

/// Population stddev of each feature; constant features get 0 and are never perturbed.
inline std::vector<double> feature_scales(const Dataset& dataset) {
  const std::size_t d = dataset.dim();
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (const auto& inst : dataset) {
    for (std::size_t f = 0; f < d; ++f) mean[f] += inst.features[f];
  }
  for (auto& m : mean) m /= static_cast<double>(dataset.size());
  for (const auto& inst : dataset) {
    for (std::size_t f = 0; f < d; ++f) var[f] += (inst.features[f] - mean[f]) * (inst.features[f] - mean[f]);
  }
  std::vector<double> out(d);
  for (std::size_t f = 0; f < d; ++f) {
    const double sd = std::sqrt(var[f] / static_cast<double>(dataset.size()));
    out[f] = sd > 1e-12 ? sd : 0.0;
  }
  return out;
}

/// Original instances (target excluded) whose predicted label differs between the two models.
inline std::vector<std::size_t> flipped_innocents(const Dataset& dataset, const Model& victim, const Model& poisoned,
                                                  std::size_t target_id) {
  std::vector<std::size_t> out;
  for (const auto& inst : dataset) {
    if (inst.id == target_id || inst.provenance != Provenance::Original) continue;
    if (predict(victim, inst.features) != predict(poisoned, inst.features)) out.push_back(inst.id);
  }
  return out;
}

/// Targeted poisoning: select the nearest desired-class member, craft a candidate, insert it
/// and retrain, until the target takes the desired label or the budget runs out.
///
/// The desired label is the opposite of the target's stored label, so a target the victim
/// already misclassifies is reported as a success with no insertions. Neighbour search runs
/// over original instances and earlier poisons that the current model puts in the desired class.
inline AttackResult run_attack(const Dataset& dataset, const ModelConfig& model_config,
                               const AttackConfig& attack_config, std::size_t target_id,
                               const Model* victim_hint = nullptr) {
  attack_config.validate();
  const Instance& target = dataset.by_id(target_id);

  AttackResult result;
  result.target_id = target_id;
  result.desired_label = opposite(target.label);
  result.original_size = dataset.size();
  result.config = attack_config;
  result.victim_model = victim_hint ? *victim_hint : train(dataset, model_config);

  const Label desired = result.desired_label;
  const auto scales = feature_scales(dataset);
  Rng rng(mix_seed(attack_config.seed, target_id));
  std::size_t next_id = dataset.max_id() + 1;

  Model current = result.victim_model;
  while (predict(current, target.features) != desired) {
    if (result.poisons.size() >= attack_config.budget) break;

    IterationRecord record;
    const Instance* nearest = nullptr;
    double best = std::numeric_limits<double>::infinity();
    const auto consider = [&](const Instance& member) {
      if (member.id == target_id || predict(current, member.features) != desired) return;
      const double dist = squared_distance(member.features, target.features);
      if (dist < best) {
        best = dist;
        nearest = &member;
      }
    };
    for (const auto& inst : dataset) consider(inst);
    for (const auto& poison : result.poisons) consider(poison);
    if (nearest == nullptr) {
      record.target_probability = predict_proba(current, target.features);
      result.trace.push_back(std::move(record));
      break;
    }
    record.base_id = nearest->id;

    CandidateOutcome outcome =
        attack_config.algorithm == Algorithm::BinarySearch
            ? binary_search_candidate(target.features, nearest->features, current, desired, attack_config.bisection_cap)
            : stingray_candidate(target.features, nearest->features, current, result.victim_model, desired,
                                 attack_config, scales, rng);
    record.resets = outcome.resets;
    if (!outcome.candidate) {
      record.target_probability = predict_proba(current, target.features);
      result.trace.push_back(std::move(record));
      break;
    }

    record.candidate = *outcome.candidate;
    record.accepted = true;
    result.poisons.push_back(Instance{next_id++, std::move(*outcome.candidate), desired, Provenance::Poisoned});
    current = train(dataset.with_appended(result.poisons), model_config);
    record.target_probability = predict_proba(current, target.features);
    result.trace.push_back(std::move(record));
  }

  result.success = predict(current, target.features) == desired;
  result.poisoned_model = std::move(current);
  result.innocents = flipped_innocents(dataset, result.victim_model, result.poisoned_model, target_id);
  const auto m = static_cast<double>(result.poisons.size());
  result.poisoning_rate = m / (static_cast<double>(dataset.size()) + m);
  return result;
}

/// Original training data plus the attack's poisons.
inline Dataset poisoned_dataset(const Dataset& dataset, const AttackResult& result) {
  return dataset.with_appended(result.poisons);
}

}  // namespace poisonlab
