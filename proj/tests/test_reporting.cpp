#include <algorithm>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "poisonlab/reporting.hpp"
#include "poisonlab/synth.hpp"

using namespace poisonlab;

namespace {

struct Fixture {
  Dataset data = standardize(synth::spambase_like(6, 60, 40));
  AttackResult result;

  Fixture() {
    const Model victim = train(data, ModelConfig{});
    std::pair<double, std::size_t> best{1e300, 0};
    for (const auto& inst : data) {
      if (predict(victim, inst.features) != inst.label) continue;
      best = std::min(best, {std::abs(decision_value(victim, inst.features)), inst.id});
    }
    AttackConfig cfg;
    cfg.budget = 25;
    result = run_attack(data, ModelConfig{}, cfg, best.second, &victim);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST(Overview, MetricsScoredOnOriginalData) {
  const auto& f = fixture();
  const ModelOverview o = model_overview(f.result, f.data);
  EXPECT_EQ(o.victim_metrics, evaluate(f.result.victim_model, f.data));
  EXPECT_EQ(o.poisoned_metrics, evaluate(f.result.poisoned_model, f.data));
  EXPECT_EQ(o.victim_metrics.total(), f.data.size());
  EXPECT_EQ(o.poison_count, f.result.poisons.size());
  EXPECT_EQ(o.success, f.result.success);
  EXPECT_EQ(o.target_id, f.result.target_id);
}

TEST(InstanceAttributes, KindsProbabilitiesAndFilter) {
  const auto& f = fixture();
  DbdConfig dbd;
  dbd.n_directions = 16;
  const auto rows = instance_attributes(f.result, f.data, dbd, all_kinds());
  ASSERT_EQ(rows.size(), f.data.size() + f.result.poisons.size());
  const std::set<std::size_t> innocents(f.result.innocents.begin(), f.result.innocents.end());
  std::size_t targets = 0;
  for (const auto& row : rows) {
    if (row.instance_kind == InstanceKind::Poison) {
      EXPECT_FALSE(row.victim_label.has_value());
      EXPECT_FALSE(row.victim_probability.has_value());
      EXPECT_FALSE(row.flipped);
      continue;
    }
    const Instance& inst = f.data.by_id(row.instance_id);
    if (row.instance_kind == InstanceKind::Target) ++targets;
    EXPECT_EQ(row.instance_kind == InstanceKind::Innocent, innocents.contains(row.instance_id));
    EXPECT_DOUBLE_EQ(*row.victim_probability, predict_proba(f.result.victim_model, inst.features));
    EXPECT_DOUBLE_EQ(row.poisoned_probability, predict_proba(f.result.poisoned_model, inst.features));
    EXPECT_EQ(row.flipped, *row.victim_label != row.poisoned_label);
    EXPECT_EQ(row.victim_dbd, estimate_dbd(f.result.victim_model, inst.features, dbd));
  }
  EXPECT_EQ(targets, 1u);

  const auto only_poisons = instance_attributes(f.result, f.data, dbd, {InstanceKind::Poison});
  EXPECT_EQ(only_poisons.size(), f.result.poisons.size());
  EXPECT_EQ(parse_instance_kind("innocent"), InstanceKind::Innocent);
  EXPECT_THROW(parse_instance_kind("bystander"), DataError);
}

TEST(FeatureReport, HistogramsCountEveryGroupMemberAndRanksArePermutations) {
  const auto& f = fixture();
  const std::size_t bins = 12;
  const auto rows = feature_report(f.result, f.data, bins);
  ASSERT_EQ(rows.size(), f.data.dim());
  const Dataset raw = destandardize(f.data);
  std::vector<std::size_t> vr, pr;
  for (const auto& row : rows) {
    EXPECT_EQ(row.bin_edges.size(), bins + 1);
    EXPECT_TRUE(std::is_sorted(row.bin_edges.begin(), row.bin_edges.end()));
    const auto sum = [](const std::vector<std::size_t>& h) { return std::accumulate(h.begin(), h.end(), std::size_t{0}); };
    EXPECT_EQ(sum(row.histograms[0]), raw.count(Label::Negative));
    EXPECT_EQ(sum(row.histograms[1]), raw.count(Label::Positive));
    EXPECT_EQ(sum(row.histograms[2]), f.result.poisons.size());
    for (const auto& inst : raw) {
      EXPECT_GE(inst.features[row.feature], row.bin_edges.front() - 1e-9);
      EXPECT_LE(inst.features[row.feature], row.bin_edges.back() + 1e-9);
    }
    EXPECT_DOUBLE_EQ(row.victim_importance, std::abs(f.result.victim_model.weights[row.feature]));
    EXPECT_EQ(row.rank_delta, static_cast<long>(row.victim_rank) - static_cast<long>(row.poisoned_rank));
    vr.push_back(row.victim_rank);
    pr.push_back(row.poisoned_rank);
  }
  std::sort(vr.begin(), vr.end());
  std::sort(pr.begin(), pr.end());
  std::vector<std::size_t> expected(f.data.dim());
  std::iota(expected.begin(), expected.end(), 1);
  EXPECT_EQ(vr, expected);
  EXPECT_EQ(pr, expected);
  EXPECT_THROW(feature_report(f.result, f.data, 1), DataError);
}

TEST(FeatureReport, HandCountedBins) {
  const Dataset d({{0, {0.0}, Label::Negative, Provenance::Original},
                   {1, {1.0}, Label::Negative, Provenance::Original},
                   {2, {4.0}, Label::Positive, Provenance::Original}},
                  {"x"});
  AttackResult r;
  r.victim_model = Model{{1.0}, 0.0, {}, ""};
  r.poisoned_model = Model{{2.0}, 0.0, {}, ""};
  r.poisons.push_back({3, {3.0}, Label::Positive, Provenance::Poisoned});
  const auto rows = feature_report(r, d, 4);
  EXPECT_EQ(rows[0].bin_edges, (std::vector<double>{0.0, 1.0, 2.0, 3.0, 4.0}));
  EXPECT_EQ(rows[0].histograms[0], (std::vector<std::size_t>{1, 1, 0, 0}));
  EXPECT_EQ(rows[0].histograms[1], (std::vector<std::size_t>{0, 0, 0, 1}));
  EXPECT_EQ(rows[0].histograms[2], (std::vector<std::size_t>{0, 0, 0, 1}));
  EXPECT_DOUBLE_EQ(rows[0].group_variance[0], 0.25);
  EXPECT_EQ(rows[0].group_variance[1], 0.0);
}
