#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "poisonlab/attacks.hpp"
#include "poisonlab/synth.hpp"

using namespace poisonlab;

namespace {

const Model kUnitModel{{1.0}, 0.0, {}, ""};

std::vector<std::size_t> near_boundary_targets(const Dataset& d, const Model& m, std::size_t count) {
  std::vector<std::pair<double, std::size_t>> scored;
  for (const auto& inst : d) {
    if (predict(m, inst.features) == inst.label) scored.emplace_back(std::abs(decision_value(m, inst.features)), inst.id);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(count, scored.size()); ++i) out.push_back(scored[i].second);
  return out;
}

AttackConfig config_for(Algorithm a, std::size_t budget) {
  AttackConfig c;
  c.algorithm = a;
  c.budget = budget;
  return c;
}

}  // namespace

TEST(BinarySearchCandidate, HandTraceWithOneReset) {
  const std::vector<double> target{-3.0}, neighbor{1.0};
  const auto out = binary_search_candidate(target, neighbor, kUnitModel, Label::Positive, 20);
  ASSERT_TRUE(out.candidate.has_value());
  // midpoint -1 is rejected, midpoint(-1, 1) = 0 sits on the boundary and is accepted
  EXPECT_EQ(*out.candidate, std::vector<double>{0.0});
  EXPECT_EQ(out.resets, 1u);
}

TEST(BinarySearchCandidate, AcceptsFirstMidpointWithoutResets) {
  const std::vector<double> target{-1.0}, neighbor{3.0};
  const auto out = binary_search_candidate(target, neighbor, kUnitModel, Label::Positive, 20);
  ASSERT_TRUE(out.candidate.has_value());
  EXPECT_EQ(*out.candidate, std::vector<double>{1.0});
  EXPECT_EQ(out.resets, 0u);
}

TEST(BinarySearchCandidate, GivesUpAtBisectionCap) {
  const std::vector<double> target{-100.0}, neighbor{1.0};
  const auto out = binary_search_candidate(target, neighbor, kUnitModel, Label::Positive, 2);
  EXPECT_FALSE(out.candidate.has_value());
  EXPECT_EQ(out.resets, 2u);
}

TEST(StingRayCandidate, ZeroScaleReturnsExactBase) {
  const Model victim{{3.0, 0.1}, 0.0, {}, ""};
  AttackConfig cfg = config_for(Algorithm::StingRay, 5);
  cfg.perturb_scale = 0.0;
  const std::vector<double> target{-1.0, 0.0}, base{1.0, 2.0}, scales{1.0, 1.0};
  Rng rng(1);
  const auto out = stingray_candidate(target, base, victim, victim, Label::Positive, cfg, scales, rng);
  ASSERT_TRUE(out.candidate.has_value());
  EXPECT_EQ(*out.candidate, base);
}

TEST(StingRayCandidate, PicksClosestAcceptedCopyAmongRegeneratedDraws) {
  const Model victim{{2.0, -0.5, 0.05, 0.01}, 0.0, {}, ""};
  const Model current{{1.0, 0.0, 0.0, 2.0}, -0.5, {}, ""};
  AttackConfig cfg = config_for(Algorithm::StingRay, 5);
  cfg.perturb_fraction = 0.5;
  cfg.candidate_count = 50;
  cfg.perturb_scale = 1.0;
  const std::vector<double> target{-1.0, 0.0, 0.0, 0.0}, base{0.8, 0.3, -0.2, 0.0}, scales{1.0, 1.0, 2.0, 0.5};
  Rng rng(77);
  const auto out = stingray_candidate(target, base, current, victim, Label::Positive, cfg, scales, rng);

  // Independent replay: the two smallest-|w| victim features are 2 and 3.
  Rng replay(77);
  std::optional<std::vector<double>> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int c = 0; c < 50; ++c) {
    std::vector<double> x = base;
    x[2] += replay.uniform(-2.0, 2.0);
    x[3] += replay.uniform(-0.5, 0.5);
    const double z = x[0] + 2.0 * x[3] - 0.5;
    if (z < 0.0) continue;
    double dist = 0.0;
    for (int f = 0; f < 4; ++f) dist += (x[f] - target[f]) * (x[f] - target[f]);
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  }
  ASSERT_TRUE(best.has_value());
  ASSERT_TRUE(out.candidate.has_value());
  for (int f = 0; f < 4; ++f) EXPECT_NEAR((*out.candidate)[f], (*best)[f], 1e-15);
}

TEST(LeastInformative, SmallestWeightsRoundedUp) {
  const Model m{{5.0, -0.1, 2.0, 0.3, -4.0}, 0.0, {}, ""};
  auto picked = least_informative_features(m, 0.25);  // ceil(1.25) = 2
  std::sort(picked.begin(), picked.end());
  EXPECT_EQ(picked, (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(least_informative_features(m, 1.0).size(), 5u);
}

TEST(FeatureScales, PopulationStddevAndZeroForConstants) {
  const Dataset d({{0, {1.0, 7.0}, Label::Positive, Provenance::Original},
                   {1, {3.0, 7.0}, Label::Negative, Provenance::Original}},
                  {"a", "b"});
  const auto s = feature_scales(d);
  EXPECT_DOUBLE_EQ(s[0], 1.0);
  EXPECT_EQ(s[1], 0.0);
}

class RunAttack : public ::testing::TestWithParam<Algorithm> {
 protected:
  Dataset data = synth::two_gaussians(60, 2.0, 1.0, 11);
  ModelConfig model_config;
  Model victim = train(data, model_config);
};

TEST_P(RunAttack, SuccessfulAttacksHoldUpUnderIndependentRetraining) {
  std::size_t successes = 0;
  for (std::size_t target : near_boundary_targets(data, victim, 5)) {
    const AttackResult r = run_attack(data, model_config, config_for(GetParam(), 15), target);
    const Instance& t = data.by_id(target);
    EXPECT_EQ(r.desired_label, opposite(t.label));
    EXPECT_EQ(r.victim_model, victim);
    const Model retrained = train(data.with_appended(r.poisons), model_config);
    EXPECT_EQ(retrained, r.poisoned_model);
    EXPECT_EQ(predict(retrained, t.features) == r.desired_label, r.success);
    EXPECT_LE(r.poisons.size(), 15u);
    if (!r.success) continue;
    ++successes;
    ASSERT_FALSE(r.poisons.empty());
    // Minimality along the trajectory: one poison fewer did not yet flip the target.
    std::vector<Instance> prefix(r.poisons.begin(), r.poisons.end() - 1);
    const Model before_last = train(data.with_appended(prefix), model_config);
    EXPECT_NE(predict(before_last, t.features), r.desired_label);
  }
  EXPECT_GT(successes, 0u);
}

TEST_P(RunAttack, PoisonsAreWellFormed) {
  const std::size_t target = near_boundary_targets(data, victim, 1).front();
  const AttackResult r = run_attack(data, model_config, config_for(GetParam(), 10), target);
  ASSERT_FALSE(r.poisons.empty());
  std::size_t next = data.max_id() + 1;
  std::size_t accepted = 0;
  for (const auto& rec : r.trace) accepted += rec.accepted ? 1 : 0;
  EXPECT_EQ(accepted, r.poisons.size());
  for (std::size_t i = 0; i < r.poisons.size(); ++i) {
    EXPECT_EQ(r.poisons[i].id, next++);
    EXPECT_EQ(r.poisons[i].label, r.desired_label);
    EXPECT_EQ(r.poisons[i].provenance, Provenance::Poisoned);
    EXPECT_EQ(r.poisons[i].features.size(), data.dim());
    EXPECT_EQ(r.trace[i].candidate, r.poisons[i].features);
  }
  const double m = static_cast<double>(r.poisons.size());
  EXPECT_DOUBLE_EQ(r.poisoning_rate, m / (60.0 + m));
  EXPECT_EQ(r.original_size, 60u);
}

TEST_P(RunAttack, FirstBaseIsBruteForceNearestDesiredMember) {
  const std::size_t target = near_boundary_targets(data, victim, 1).front();
  const AttackResult r = run_attack(data, model_config, config_for(GetParam(), 1), target);
  ASSERT_FALSE(r.trace.empty());
  const Instance& t = data.by_id(target);
  std::size_t best_id = 0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& inst : data) {
    if (inst.id == target || predict(victim, inst.features) != r.desired_label) continue;
    const double dx = inst.features[0] - t.features[0], dy = inst.features[1] - t.features[1];
    if (dx * dx + dy * dy < best) {
      best = dx * dx + dy * dy;
      best_id = inst.id;
    }
  }
  EXPECT_EQ(r.trace.front().base_id, best_id);
}

TEST_P(RunAttack, InnocentsMatchBruteForceComparison) {
  const std::size_t target = near_boundary_targets(data, victim, 3).back();
  const AttackResult r = run_attack(data, model_config, config_for(GetParam(), 15), target);
  std::vector<std::size_t> expected;
  for (const auto& inst : data) {
    if (inst.id != target && predict(r.victim_model, inst.features) != predict(r.poisoned_model, inst.features)) {
      expected.push_back(inst.id);
    }
  }
  EXPECT_EQ(r.innocents, expected);
}

TEST_P(RunAttack, DeterministicForFixedSeed) {
  const std::size_t target = near_boundary_targets(data, victim, 2).back();
  EXPECT_EQ(run_attack(data, model_config, config_for(GetParam(), 10), target),
            run_attack(data, model_config, config_for(GetParam(), 10), target));
}

TEST_P(RunAttack, LargerBudgetNeverHurts) {
  for (std::size_t target : near_boundary_targets(data, victim, 3)) {
    const AttackResult big = run_attack(data, model_config, config_for(GetParam(), 20), target);
    if (!big.success) continue;
    const std::size_t m = big.poisons.size();
    for (std::size_t b = m; b <= m + 3; ++b) {
      const AttackResult r = run_attack(data, model_config, config_for(GetParam(), b), target);
      EXPECT_TRUE(r.success);
      EXPECT_EQ(r.poisons, big.poisons);
    }
    if (m > 0) EXPECT_FALSE(run_attack(data, model_config, config_for(GetParam(), m - 1), target).success);
  }
}

TEST_P(RunAttack, MisclassifiedTargetNeedsNoPoison) {
  std::optional<std::size_t> wrong;
  for (const auto& inst : data) {
    if (predict(victim, inst.features) != inst.label) {
      wrong = inst.id;
      break;
    }
  }
  ASSERT_TRUE(wrong.has_value());
  const AttackResult r = run_attack(data, model_config, config_for(GetParam(), 10), *wrong);
  EXPECT_TRUE(r.success);
  EXPECT_TRUE(r.poisons.empty());
  EXPECT_EQ(r.poisoning_rate, 0.0);
  EXPECT_EQ(r.poisoned_model, r.victim_model);
  EXPECT_TRUE(r.innocents.empty());
}

TEST_P(RunAttack, ZeroBudgetFailsOnCorrectlyClassifiedTarget) {
  const std::size_t target = near_boundary_targets(data, victim, 1).front();
  const AttackResult r = run_attack(data, model_config, config_for(GetParam(), 0), target);
  EXPECT_FALSE(r.success);
  EXPECT_TRUE(r.poisons.empty());
  EXPECT_TRUE(r.trace.empty());
}

TEST_P(RunAttack, UnknownTargetThrows) {
  EXPECT_THROW(run_attack(data, model_config, config_for(GetParam(), 5), 999), DataError);
}

INSTANTIATE_TEST_SUITE_P(Algorithms, RunAttack, ::testing::Values(Algorithm::BinarySearch, Algorithm::StingRay),
                         [](const auto& info) { return std::string(column_name(info.param)); });

TEST(AlgorithmNames, ParseAndPrint) {
  EXPECT_EQ(parse_algorithm("binary-search"), Algorithm::BinarySearch);
  EXPECT_EQ(parse_algorithm("stingray"), Algorithm::StingRay);
  EXPECT_EQ(to_string(Algorithm::StingRay), "stingray");
  EXPECT_THROW(parse_algorithm("gradient"), DataError);
}
