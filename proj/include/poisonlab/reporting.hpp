#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "poisonlab/attacks.hpp"
#include "poisonlab/classifier.hpp"
#include "poisonlab/dataset.hpp"
#include "poisonlab/vulnerability.hpp"

namespace poisonlab {

struct ModelOverview {
  Metrics victim_metrics;
  Metrics poisoned_metrics;
  std::size_t target_id = 0;
  Label desired_label = Label::Negative;
  std::size_t poison_count = 0;
  double poisoning_rate = 0.0;
  bool success = false;

  friend bool operator==(const ModelOverview&, const ModelOverview&) = default;
};

/// Both models are scored on the original training data; poisons are not evaluated.
inline ModelOverview model_overview(const AttackResult& result, const Dataset& dataset) {
  return ModelOverview{evaluate(result.victim_model, dataset),
                       evaluate(result.poisoned_model, dataset),
                       result.target_id,
                       result.desired_label,
                       result.poisons.size(),
                       result.poisoning_rate,
                       result.success};
}

enum class InstanceKind { Target, Innocent, Poison, Other };

inline constexpr std::string_view to_string(InstanceKind k) {
  switch (k) {
    case InstanceKind::Target: return "target";
    case InstanceKind::Innocent: return "innocent";
    case InstanceKind::Poison: return "poison";
    case InstanceKind::Other: return "other";
  }
  return "other";
}

inline InstanceKind parse_instance_kind(std::string_view text) {
  if (text == "target") return InstanceKind::Target;
  if (text == "innocent") return InstanceKind::Innocent;
  if (text == "poison") return InstanceKind::Poison;
  if (text == "other") return InstanceKind::Other;
  throw DataError("unknown instance kind '" + std::string(text) + "'");
}

using KindFilter = std::set<InstanceKind>;

inline KindFilter all_kinds() {
  return {InstanceKind::Target, InstanceKind::Innocent, InstanceKind::Poison, InstanceKind::Other};
}

struct InstanceAttributeRow {
  std::size_t instance_id = 0;
  InstanceKind instance_kind = InstanceKind::Other;
  std::optional<double> victim_probability;  // absent for poisons
  double poisoned_probability = 0.0;
  std::optional<double> victim_dbd;  // absent for poisons or when no direction reached the boundary
  std::optional<double> poisoned_dbd;
  std::optional<Label> victim_label;
  Label poisoned_label = Label::Negative;
  bool flipped = false;

  friend bool operator==(const InstanceAttributeRow&, const InstanceAttributeRow&) = default;
};

inline std::vector<InstanceAttributeRow> instance_attributes(const AttackResult& result, const Dataset& dataset,
                                                             const DbdConfig& dbd_config, const KindFilter& filter) {
  dbd_config.validate();
  const std::set<std::size_t> innocents(result.innocents.begin(), result.innocents.end());
  const auto directions = sample_directions(dataset.dim(), dbd_config.n_directions, dbd_config.seed);
  std::vector<InstanceAttributeRow> rows;
  const auto add = [&](const Instance& inst, InstanceKind kind) {
    if (!filter.contains(kind)) return;
    InstanceAttributeRow row;
    row.instance_id = inst.id;
    row.instance_kind = kind;
    row.poisoned_probability = predict_proba(result.poisoned_model, inst.features);
    row.poisoned_label = predict(result.poisoned_model, inst.features);
    row.poisoned_dbd = estimate_dbd(result.poisoned_model, inst.features, dbd_config, directions);
    if (kind != InstanceKind::Poison) {
      row.victim_probability = predict_proba(result.victim_model, inst.features);
      row.victim_label = predict(result.victim_model, inst.features);
      row.victim_dbd = estimate_dbd(result.victim_model, inst.features, dbd_config, directions);
      row.flipped = *row.victim_label != row.poisoned_label;
    }
    rows.push_back(std::move(row));
  };
  for (const auto& inst : dataset) {
    InstanceKind kind = InstanceKind::Other;
    if (inst.id == result.target_id) {
      kind = InstanceKind::Target;
    } else if (innocents.contains(inst.id)) {
      kind = InstanceKind::Innocent;
    }
    add(inst, kind);
  }
  for (const auto& poison : result.poisons) add(poison, InstanceKind::Poison);
  return rows;
}

struct FeatureReportRow {
  std::size_t feature = 0;
  std::string feature_name;
  std::vector<double> bin_edges;                        // bins + 1 edges, raw feature scale
  std::array<std::vector<std::size_t>, 3> histograms;   // {negative, positive, poison}
  std::array<double, 3> group_variance{};               // raw-scale variance per group (0 when empty)
  double victim_importance = 0.0;
  double poisoned_importance = 0.0;
  std::size_t victim_rank = 0;  // 1 = most important
  std::size_t poisoned_rank = 0;
  long rank_delta = 0;          // victim_rank - poisoned_rank

  friend bool operator==(const FeatureReportRow&, const FeatureReportRow&) = default;
};

/// Histograms of original negatives, original positives and poisons over shared per-feature
/// bins, with importance and rank under both models.
inline std::vector<FeatureReportRow> feature_report(const AttackResult& result, const Dataset& dataset,
                                                    std::size_t bins) {
  if (bins < 2) throw DataError("feature report needs at least 2 bins");
  const std::size_t d = dataset.dim();
  const auto victim_rank = feature_importance(result.victim_model);
  const auto poisoned_rank = feature_importance(result.poisoned_model);

  // Raw-scale feature values per group.
  std::array<std::vector<std::vector<double>>, 3> groups;
  for (const auto& inst : dataset) {
    groups[inst.label == Label::Positive ? 1 : 0].push_back(dataset.raw_features(inst.features));
  }
  for (const auto& p : result.poisons) groups[2].push_back(dataset.raw_features(p.features));

  std::vector<FeatureReportRow> rows(d);
  for (std::size_t f = 0; f < d; ++f) {
    FeatureReportRow& row = rows[f];
    row.feature = f;
    row.feature_name = dataset.feature_names()[f];
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& g : groups) {
      for (const auto& v : g) {
        lo = std::min(lo, v[f]);
        hi = std::max(hi, v[f]);
      }
    }
    if (hi <= lo) hi = lo + 1.0;
    row.bin_edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) {
      row.bin_edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
    }
    for (std::size_t g = 0; g < 3; ++g) {
      row.histograms[g].assign(bins, 0);
      double mean = 0.0;
      for (const auto& v : groups[g]) {
        auto b = static_cast<std::size_t>((v[f] - lo) / (hi - lo) * static_cast<double>(bins));
        ++row.histograms[g][std::min(b, bins - 1)];
        mean += v[f];
      }
      if (groups[g].empty()) continue;
      mean /= static_cast<double>(groups[g].size());
      double var = 0.0;
      for (const auto& v : groups[g]) var += (v[f] - mean) * (v[f] - mean);
      row.group_variance[g] = var / static_cast<double>(groups[g].size());
    }
  }
  for (std::size_t r = 0; r < d; ++r) {
    rows[victim_rank[r].feature].victim_rank = r + 1;
    rows[victim_rank[r].feature].victim_importance = victim_rank[r].importance;
    rows[poisoned_rank[r].feature].poisoned_rank = r + 1;
    rows[poisoned_rank[r].feature].poisoned_importance = poisoned_rank[r].importance;
  }
  for (auto& row : rows) {
    row.rank_delta = static_cast<long>(row.victim_rank) - static_cast<long>(row.poisoned_rank);
  }
  return rows;
}

}  // namespace poisonlab
