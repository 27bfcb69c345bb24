#include <cmath>

#include <gtest/gtest.h>

#include "poisonlab/classifier.hpp"
#include "poisonlab/synth.hpp"

using namespace poisonlab;

namespace {

// Plain-loop objective, independent of the trainer's implementation.
double reference_objective(const Dataset& d, double lambda, const std::vector<double>& w, double b) {
  double loss = 0.0;
  for (const auto& inst : d) {
    double z = b;
    for (std::size_t f = 0; f < w.size(); ++f) z += w[f] * inst.features[f];
    loss += std::log1p(std::exp(-to_int(inst.label) * z));
  }
  double reg = 0.0;
  for (double v : w) reg += v * v;
  return loss / static_cast<double>(d.size()) + 0.5 * lambda * reg;
}

}  // namespace

TEST(Train, LossIsNonIncreasingEveryEpoch) {
  const Dataset d = standardize(synth::spambase_like(1, 120, 80));
  TrainingTrace trace;
  train(d, ModelConfig{}, &trace);
  ASSERT_GE(trace.loss.size(), 2u);
  for (std::size_t i = 1; i < trace.loss.size(); ++i) EXPECT_LE(trace.loss[i], trace.loss[i - 1]);
}

TEST(Train, ObjectiveMatchesReferenceAndGradientMatchesFiniteDifferences) {
  const Dataset d = synth::two_gaussians(40, 3.0, 1.0, 2);
  const detail::DesignMatrix m(d);
  const std::vector<double> w{0.3, -0.7};
  const double b = 0.2, lambda = 0.05;
  EXPECT_NEAR(detail::objective(m, lambda, w, b), reference_objective(d, lambda, w, b), 1e-12);
  std::vector<double> g(2);
  double gb = 0.0;
  detail::gradient(m, lambda, w, b, g, gb);
  const double h = 1e-6;
  for (std::size_t f = 0; f < 2; ++f) {
    auto up = w, down = w;
    up[f] += h;
    down[f] -= h;
    const double fd = (reference_objective(d, lambda, up, b) - reference_objective(d, lambda, down, b)) / (2 * h);
    EXPECT_NEAR(g[f], fd, 1e-7);
  }
  const double fdb = (reference_objective(d, lambda, w, b + h) - reference_objective(d, lambda, w, b - h)) / (2 * h);
  EXPECT_NEAR(gb, fdb, 1e-7);
}

TEST(Train, ConvergesToStationaryPointWhenGivenEnoughEpochs) {
  const Dataset d = synth::two_gaussians(60, 2.0, 1.0, 3);
  ModelConfig cfg;
  cfg.max_epochs = 200000;
  cfg.l2_lambda = 0.01;
  TrainingTrace trace;
  const Model m = train(d, cfg, &trace);
  EXPECT_TRUE(trace.converged);
  const detail::DesignMatrix dm(d);
  std::vector<double> g(2);
  double gb = 0.0;
  detail::gradient(dm, cfg.l2_lambda, m.weights, m.bias, g, gb);
  EXPECT_LT(std::max({std::abs(g[0]), std::abs(g[1]), std::abs(gb)}), cfg.convergence_tol);
}

TEST(Train, DeterministicAndPure) {
  const Dataset d = standardize(synth::spambase_like(4, 60, 40));
  EXPECT_EQ(train(d, ModelConfig{}), train(d, ModelConfig{}));
  EXPECT_EQ(train(d, ModelConfig{}).trained_on, fingerprint(d));
}

TEST(Train, MirrorSymmetry) {
  const Dataset d = synth::two_gaussians(50, 3.0, 1.0, 5);
  std::vector<Instance> neg_all, flip_only;
  for (const auto& inst : d) {
    Instance a = inst;
    for (auto& v : a.features) v = -v;
    a.label = opposite(a.label);
    neg_all.push_back(a);
    Instance b = inst;
    b.label = opposite(b.label);
    flip_only.push_back(b);
  }
  const Model base = train(d, ModelConfig{});
  const Model mirrored = train(Dataset(neg_all, d.feature_names()), ModelConfig{});
  const Model flipped = train(Dataset(flip_only, d.feature_names()), ModelConfig{});
  for (std::size_t f = 0; f < 2; ++f) {
    EXPECT_NEAR(mirrored.weights[f], base.weights[f], 1e-12);
    EXPECT_NEAR(flipped.weights[f], -base.weights[f], 1e-12);
  }
  EXPECT_NEAR(mirrored.bias, -base.bias, 1e-12);
  EXPECT_NEAR(flipped.bias, -base.bias, 1e-12);
}

TEST(Train, RejectsUntrainableInput) {
  const Dataset one_class({{0, {1.0}, Label::Positive, Provenance::Original},
                           {1, {2.0}, Label::Positive, Provenance::Original}},
                          {"x"});
  EXPECT_THROW(train(one_class, ModelConfig{}), DataError);
  ModelConfig bad;
  bad.learning_rate = 0.0;
  EXPECT_THROW(train(synth::two_gaussians(10, 4, 1, 1), bad), DataError);
}

TEST(Predict, TieGoesToPositiveAndDimensionIsChecked) {
  const Model m{{1.0, -1.0}, 0.0, {}, ""};
  const std::vector<double> tie{2.0, 2.0};
  EXPECT_EQ(predict(m, tie), Label::Positive);
  EXPECT_DOUBLE_EQ(predict_proba(m, tie), 0.5);
  const std::vector<double> neg{0.0, 1.0};
  EXPECT_EQ(predict(m, neg), Label::Negative);
  const std::vector<double> wrong{1.0};
  EXPECT_THROW(predict(m, wrong), DataError);
  EXPECT_GT(predict_proba(Model{{1.0}, -800.0, {}, ""}, std::vector<double>{0.0}), 0.0);
  EXPECT_LT(predict_proba(Model{{1.0}, 800.0, {}, ""}, std::vector<double>{0.0}), 1.0);
}

TEST(Metrics, HandComputedConfusionAndAuc) {
  const std::vector<double> p{0.9, 0.8, 0.3, 0.6, 0.2, 0.4};
  const std::vector<Label> y{Label::Positive, Label::Positive, Label::Positive,
                             Label::Negative, Label::Negative, Label::Negative};
  std::vector<Label> pred;
  for (double v : p) pred.push_back(v >= 0.5 ? Label::Positive : Label::Negative);
  const Metrics m = metrics_from_scores(p, pred, y);
  EXPECT_EQ(m.tp, 2u);
  EXPECT_EQ(m.fn, 1u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.tn, 2u);
  EXPECT_DOUBLE_EQ(m.accuracy, 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.f1, 4.0 / 6.0);
  // Pairs (pos, neg) ranked correctly: 0.9 beats all 3, 0.8 beats all 3, 0.3 beats 0.2 only.
  EXPECT_DOUBLE_EQ(m.roc_auc, 7.0 / 9.0);
}

TEST(Metrics, AucMatchesPairwiseCountWithTies) {
  const Dataset d = standardize(synth::spambase_like(8, 90, 60));
  const Model model = train(d, ModelConfig{});
  const Metrics m = evaluate(model, d);
  double wins = 0.0, pairs = 0.0;
  for (const auto& a : d) {
    if (a.label != Label::Positive) continue;
    for (const auto& b : d) {
      if (b.label != Label::Negative) continue;
      const double pa = predict_proba(model, a.features), pb = predict_proba(model, b.features);
      wins += pa > pb ? 1.0 : (pa == pb ? 0.5 : 0.0);
      pairs += 1.0;
    }
  }
  EXPECT_NEAR(m.roc_auc, wins / pairs, 1e-12);
  EXPECT_EQ(m.total(), d.size());
}

TEST(Metrics, SingleClassAucIsHalf) {
  const std::vector<double> p{0.2, 0.7};
  const std::vector<Label> y{Label::Positive, Label::Positive};
  const std::vector<Label> pred{Label::Negative, Label::Positive};
  EXPECT_DOUBLE_EQ(metrics_from_scores(p, pred, y).roc_auc, 0.5);
}

TEST(Importance, SortedByMagnitudeWithStableTies) {
  const Model m{{0.5, -2.0, 0.5, 0.0}, 0.0, {}, ""};
  const auto imp = feature_importance(m);
  ASSERT_EQ(imp.size(), 4u);
  EXPECT_EQ(imp[0].feature, 1u);
  EXPECT_EQ(imp[1].feature, 0u);
  EXPECT_EQ(imp[2].feature, 2u);
  EXPECT_EQ(imp[3].feature, 3u);
  EXPECT_DOUBLE_EQ(imp[0].importance, 2.0);
}
