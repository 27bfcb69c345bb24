#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "poisonlab/dataset.hpp"
#include "poisonlab/synth.hpp"

using namespace poisonlab;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in, "y", "spam", "ham", "test.csv");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Csv, ParsesFeaturesAndLabels) {
  const Dataset d = parse("a,y,b\n1.5,spam,2\n-3,ham,4e1\n");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.dim(), 2u);
  EXPECT_EQ(d.feature_names(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d[0].label, Label::Positive);
  EXPECT_EQ(d[1].label, Label::Negative);
  EXPECT_EQ(d[1].features, (std::vector<double>{-3.0, 40.0}));
  EXPECT_EQ(d[1].id, 1u);
}

TEST(Csv, ErrorsNameLineAndColumn) {
  EXPECT_NE(error_of("a,y\n1,spam\nx,ham\n").find("line 3, column 1 ('a')"), std::string::npos);
  EXPECT_NE(error_of("a,y\n1,spam\n2,maybe\n").find("line 3, column 2 ('y')"), std::string::npos);
  EXPECT_NE(error_of("a,y\n1,spam,3\n2,ham\n").find("line 2 has 3 columns"), std::string::npos);
  EXPECT_NE(error_of("a,b\n1,2\n3,4\n").find("label column 'y' not found"), std::string::npos);
  EXPECT_NE(error_of("a,y\n1,spam\n").find("at least 2 data rows"), std::string::npos);
  EXPECT_NE(error_of("").find("empty file"), std::string::npos);
}

TEST(Csv, RoundTripsIdsProvenanceAndValues) {
  std::vector<Instance> inst{{7, {0.1, 1e-300}, Label::Positive, Provenance::Original},
                             {9, {-2.0 / 3.0, 12345.678}, Label::Negative, Provenance::Poisoned}};
  const Dataset d(inst, {"p", "q"});
  std::ostringstream out;
  write_csv(out, d);
  std::istringstream in(out.str());
  const Dataset back = parse_csv(in, "label", "1", "-1");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(back[i], d[i]);
}

TEST(DatasetInvariants, RejectsBadConstruction) {
  EXPECT_THROW(Dataset({{0, {1.0}, Label::Positive, Provenance::Original},
                        {0, {2.0}, Label::Negative, Provenance::Original}},
                       {"x"}),
               DataError);
  EXPECT_THROW(Dataset({{0, {1.0, 2.0}, Label::Positive, Provenance::Original}}, {"x"}), DataError);
  EXPECT_THROW(Dataset({{0, {1.0}, static_cast<Label>(0), Provenance::Original}}, {"x"}), DataError);
}

TEST(DatasetInvariants, AppendAndRemove) {
  const Dataset d = synth::two_gaussians(10, 4.0, 1.0, 1);
  const Instance extra{d.max_id() + 1, {0.0, 0.0}, Label::Positive, Provenance::Poisoned};
  const Dataset more = d.with_appended(std::span<const Instance>(&extra, 1));
  EXPECT_EQ(more.size(), 11u);
  EXPECT_EQ(more.by_id(10).provenance, Provenance::Poisoned);
  const Dataset fewer = more.without_id(3);
  EXPECT_EQ(fewer.size(), 10u);
  EXPECT_FALSE(fewer.position_of(3).has_value());
  EXPECT_THROW(fewer.without_id(3), DataError);
  EXPECT_THROW(d.by_id(99), DataError);
}

TEST(Subsample, KeepsClassProportionsOfSpambaseShape) {
  const Dataset full = synth::spambase_like(42);
  ASSERT_EQ(full.count(Label::Negative), 2788u);
  ASSERT_EQ(full.count(Label::Positive), 1813u);
  const Dataset sub = stratified_subsample(full, 400, 42);
  EXPECT_EQ(sub.count(Label::Negative), 243u);
  EXPECT_EQ(sub.count(Label::Positive), 157u);
  ASSERT_EQ(sub.source_ids().size(), 400u);
  for (std::size_t i = 0; i < sub.size(); ++i) {
    EXPECT_EQ(sub[i].id, i);
    const Instance& src = full.by_id(sub.source_ids()[i]);
    EXPECT_EQ(src.features, sub[i].features);
    EXPECT_EQ(src.label, sub[i].label);
    if (i > 0) EXPECT_LT(sub.source_ids()[i - 1], sub.source_ids()[i]);
  }
}

TEST(Subsample, DeterministicPerSeed) {
  const Dataset full = synth::spambase_like(7, 300, 200);
  EXPECT_EQ(stratified_subsample(full, 50, 3).source_ids(), stratified_subsample(full, 50, 3).source_ids());
  EXPECT_NE(stratified_subsample(full, 50, 3).source_ids(), stratified_subsample(full, 50, 4).source_ids());
  EXPECT_THROW(stratified_subsample(full, 501, 1), DataError);
}

TEST(Standardize, ZeroMeanUnitVarianceAndInverse) {
  const Dataset raw = synth::spambase_like(3, 120, 80);
  const Dataset z = standardize(raw);
  for (std::size_t f = 0; f < z.dim(); ++f) {
    double mean = 0.0, sq = 0.0;
    for (const auto& inst : z) mean += inst.features[f];
    mean /= static_cast<double>(z.size());
    for (const auto& inst : z) sq += (inst.features[f] - mean) * (inst.features[f] - mean);
    const double sd = std::sqrt(sq / static_cast<double>(z.size()));
    if (z.standardization()->stddev[f] == 1.0 && z.standardization()->mean[f] == 0.0) continue;
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(sd, 1.0, 1e-12);
  }
  const Dataset back = destandardize(z);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t f = 0; f < raw.dim(); ++f) {
      EXPECT_NEAR(back[i].features[f], raw[i].features[f], 1e-9 * (1.0 + std::abs(raw[i].features[f])));
    }
  }
  EXPECT_THROW(standardize(z), DataError);
}

TEST(Standardize, ConstantColumnPassesThrough) {
  const Dataset raw({{0, {5.0, 1.0}, Label::Positive, Provenance::Original},
                     {1, {5.0, 3.0}, Label::Negative, Provenance::Original}},
                    {"const", "x"});
  const Dataset z = standardize(raw);
  EXPECT_EQ(z[0].features[0], 5.0);
  EXPECT_EQ(z[1].features[0], 5.0);
  EXPECT_DOUBLE_EQ(z[0].features[1], -1.0);
  EXPECT_DOUBLE_EQ(z[1].features[1], 1.0);
}

TEST(Rng, SeededStreamsAreReproducible) {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng c(9);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = c.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
  EXPECT_NE(mix_seed(42, 1), mix_seed(42, 2));
}
