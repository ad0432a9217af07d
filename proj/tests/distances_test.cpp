#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "taskprint/baselines.hpp"
#include "taskprint/bkld.hpp"
#include "taskprint/divergence.hpp"
#include "test_support.hpp"

using namespace taskprint;
using testing_support::random_fingerprint;

namespace {

Fingerprint single_feature(std::vector<double> hist, double mean = 1.0) {
  Fingerprint fp;
  fp.task_id = "t";
  fp.n_features = 1;
  fp.binning = BinningConfig{static_cast<std::uint32_t>(hist.size()), 0.0, 10.0};
  fp.histograms = std::move(hist);
  fp.mean_features = {mean};
  fp.extractor_id = "x";
  return fp;
}

Fingerprint with_means(std::vector<double> means) {
  Fingerprint fp;
  fp.n_features = static_cast<std::uint32_t>(means.size());
  fp.binning = BinningConfig{2, 0.0, 10.0};
  for (std::size_t i = 0; i < means.size(); ++i) fp.histograms.insert(fp.histograms.end(), {0.5, 0.5});
  fp.mean_features = std::move(means);
  fp.extractor_id = "x";
  return fp;
}

GaussianSummary gaussian_1d(double mean, double var) { return GaussianSummary{"g", {mean}, {var}, 10}; }

oracle::Weights to_oracle(WeightMode m) {
  switch (m) {
    case WeightMode::Uniform: return oracle::Weights::Uniform;
    case WeightMode::TargetSoftmax: return oracle::Weights::TargetSoftmax;
    case WeightMode::SourceNormalized: return oracle::Weights::SourceNormalized;
  }
  return oracle::Weights::Uniform;
}

}  // namespace

TEST(Softmax, ConstantVectorIsUniform) {
  const auto s = softmax(std::vector<double>{3.0, 3.0, 3.0, 3.0});
  for (double v : s) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Softmax, ClosedForm) {
  const auto s = softmax(std::vector<double>{0.0, std::log(3.0)});
  EXPECT_NEAR(s[0], 0.25, 1e-15);
  EXPECT_NEAR(s[1], 0.75, 1e-15);
}

TEST(Softmax, ShiftInvariantAndStableForLargeInputs) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(7);
    for (auto& v : x) v = n(rng);
    auto shifted = x;
    for (auto& v : shifted) v += 700.0;
    const auto a = softmax(x);
    const auto b = softmax(shifted);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(Kld, IdenticalIsZero) { EXPECT_DOUBLE_EQ(kld(std::vector<double>{0.3, 0.7}, std::vector<double>{0.3, 0.7}), 0.0); }

TEST(Kld, PointMassAgainstUniformIsLn2) {
  EXPECT_NEAR(kld(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}), std::log(2.0), 1e-12);
}

TEST(Kld, MatchesSummationOracle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(10), q(10);
    for (auto& v : p) v = u(rng) < 0.3 ? 0.0 : u(rng);
    for (auto& v : q) v = 0.01 + u(rng);
    p[t % 10] += 0.1;
    double sp = 0, sq = 0;
    for (double v : p) sp += v;
    for (double v : q) sq += v;
    for (auto& v : p) v /= sp;
    for (auto& v : q) v /= sq;
    EXPECT_NEAR(kld(p, q), oracle::kld(p, q), 1e-12);
  }
}

TEST(Kld, RejectsInvalidDistributions) {
  EXPECT_THROW(kld(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0}), ValidationError);
  EXPECT_THROW(kld(std::vector<double>{0.5, 0.6}, std::vector<double>{0.5, 0.5}), ValidationError);
  EXPECT_THROW(kld(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}), ValidationError);
}

TEST(BkldWeights, ClosedForms) {
  const auto a = with_means({1.0, 3.0});
  const auto b = with_means({0.0, std::log(3.0)});
  const auto uniform = resolve_weights(WeightSpec{WeightMode::Uniform}, with_means({1, 1, 1, 1}), with_means({1, 1, 1, 1}));
  EXPECT_EQ(uniform, (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
  const auto target = resolve_weights(WeightSpec{WeightMode::TargetSoftmax}, a, b);
  EXPECT_NEAR(target[0], 0.25, 1e-15);
  EXPECT_NEAR(target[1], 0.75, 1e-15);
  const auto source = resolve_weights(WeightSpec{WeightMode::SourceNormalized}, a, b);
  EXPECT_DOUBLE_EQ(source[0], 0.25);
  EXPECT_DOUBLE_EQ(source[1], 0.75);
}

TEST(BkldWeights, AllZeroSourceMeanIsRejected) {
  EXPECT_THROW(resolve_weights(WeightSpec{WeightMode::SourceNormalized}, with_means({0.0, 0.0}), with_means({1.0, 1.0})),
               ValidationError);
}

TEST(Bkld, SingleFeatureSelfDistanceClosedForm) {
  const auto fp = single_feature({1.0, 0.0});
  EXPECT_NEAR(bkld_distance(fp, fp, WeightSpec{WeightMode::Uniform}), std::log(1.0 + std::exp(1.0)) - 1.0, 1e-12);
}

TEST(Bkld, UniformHistogramIsAFixedPoint) {
  const auto fp = single_feature({0.5, 0.5});
  EXPECT_NEAR(bkld_distance(fp, fp, WeightSpec{WeightMode::Uniform}), 0.0, 1e-15);
}

TEST(Bkld, MatchesDoubleLoopOracleForAllWeightModes) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::uint32_t> dim(1, 8), bins(2, 10);
  for (int t = 0; t < 300; ++t) {
    const std::uint32_t m = dim(rng), b = bins(rng);
    const auto s = random_fingerprint(rng, m, b, "s");
    const auto g = random_fingerprint(rng, m, b, "g");
    for (auto mode : {WeightMode::Uniform, WeightMode::TargetSoftmax, WeightMode::SourceNormalized}) {
      const double expected = oracle::bkld(s.histograms, s.mean_features, g.histograms, g.mean_features, m, b, to_oracle(mode));
      EXPECT_NEAR(bkld_distance(s, g, WeightSpec{mode}), expected, 1e-10);
    }
  }
}

TEST(Bkld, NonNegativeAndAsymmetric) {
  std::mt19937_64 rng(8);
  bool saw_asymmetry = false;
  for (int t = 0; t < 50; ++t) {
    const auto a = random_fingerprint(rng, 3, 6);
    const auto b = random_fingerprint(rng, 3, 6);
    const double ab = bkld_distance(a, b, WeightSpec{WeightMode::Uniform});
    const double ba = bkld_distance(b, a, WeightSpec{WeightMode::Uniform});
    EXPECT_GE(ab, 0.0);
    if (std::abs(ab - ba) > 1e-9) saw_asymmetry = true;
  }
  EXPECT_TRUE(saw_asymmetry);
}

TEST(Bkld, IncompatibleFingerprintsAreRejected) {
  std::mt19937_64 rng(3);
  EXPECT_THROW(bkld_distance(random_fingerprint(rng, 2, 4), random_fingerprint(rng, 2, 5), WeightSpec{}),
               IncompatibleError);
}

TEST(BkldVariants, StandardConfigurations) {
  const auto v = standard_bkld_variants();
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].name, "bkld-small-target");
  EXPECT_EQ(v[0].binning.n_bins, 100u);
  EXPECT_EQ(v[0].weights.mode, WeightMode::TargetSoftmax);
  EXPECT_EQ(v[1].binning.n_bins, 1000u);
  EXPECT_EQ(v[1].weights.mode, WeightMode::SourceNormalized);
  EXPECT_EQ(v[2].binning.n_bins, 1000u);
  EXPECT_EQ(v[2].weights.mode, WeightMode::Uniform);
  EXPECT_EQ(weight_mode_from_string("source_normalized"), WeightMode::SourceNormalized);
  EXPECT_THROW(weight_mode_from_string("bogus"), ValidationError);
}

TEST(GaussianSummary, HandComputedTwoSamples) {
  FeatureMatrix f{"g", 2, 1, {0.0, 2.0}, "x"};
  const auto g = gaussian_summary(f);
  EXPECT_DOUBLE_EQ(g.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(g.covariance[0], 2.0);
}

TEST(GaussianSummary, ConstantColumnHasZeroCovariance) {
  FeatureMatrix f{"g", 3, 2, {5.0, 1.0, 5.0, 2.0, 5.0, 4.0}, "x"};
  const auto g = gaussian_summary(f);
  EXPECT_DOUBLE_EQ(g.cov(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(g.cov(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(g.cov(1, 0), 0.0);
}

TEST(GaussianSummary, MatchesTwoPassOracle) {
  std::mt19937_64 rng(6);
  const auto f = testing_support::random_features(rng, 50, 4, -2.0, 9.0);
  const auto g = gaussian_summary(f);
  const auto expected = oracle::covariance(f.values, 50, 4);
  for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_NEAR(g.covariance[k], expected[k], 1e-10);
}

TEST(GaussianSummary, NeedsTwoSamples) {
  FeatureMatrix f{"g", 1, 1, {1.0}, "x"};
  EXPECT_THROW(gaussian_summary(f), ValidationError);
}

TEST(GaussianFormat, RoundTripIsExact) {
  std::mt19937_64 rng(6);
  const auto g = gaussian_summary(testing_support::random_features(rng, 30, 3, 0.0, 5.0, "gauss"));
  const auto back = decode_gaussian(encode_gaussian(g), "gauss");
  EXPECT_EQ(back, g);
  EXPECT_TRUE(looks_like_gaussian(encode_gaussian(g)));
  EXPECT_THROW(decode_gaussian("TGSX", "x"), FormatError);
}

TEST(Fid, AnalyticOneDimensionalCases) {
  EXPECT_NEAR(fid_distance(gaussian_1d(0, 1), gaussian_1d(1, 1)), 1.0, 1e-9);
  EXPECT_NEAR(fid_distance(gaussian_1d(0, 1), gaussian_1d(0, 4)), 1.0, 1e-9);
  EXPECT_NEAR(fid_distance(gaussian_1d(3, 2), gaussian_1d(3, 2)), 0.0, 1e-9);
}

TEST(Fid, MatchesClosedFormForDiagonalCovariances) {
  // tr(sqrt(A B)) = sum sqrt(a_i b_i) for commuting diagonal matrices.
  GaussianSummary a{"a", {0, 1, 2}, {1, 0, 0, 0, 4, 0, 0, 0, 9}, 10};
  GaussianSummary b{"b", {1, 1, 0}, {4, 0, 0, 0, 1, 0, 0, 0, 1}, 10};
  const double expected = (1 + 0 + 4) + (1 + 4 + 9) + (4 + 1 + 1) - 2 * (2 + 2 + 3);
  EXPECT_NEAR(fid_distance(a, b), expected, 1e-9);
}

TEST(Fid, SymmetricAndZeroOnIdenticalRandomSummaries) {
  std::mt19937_64 rng(12);
  const auto a = gaussian_summary(testing_support::random_features(rng, 40, 5, 0.0, 3.0));
  const auto b = gaussian_summary(testing_support::random_features(rng, 40, 5, 1.0, 6.0));
  EXPECT_NEAR(fid_distance(a, a), 0.0, 1e-8);
  EXPECT_NEAR(fid_distance(a, b), fid_distance(b, a), 1e-8);
  EXPECT_GT(fid_distance(a, b), 0.0);
}

TEST(Fid, DimensionMismatchIsIncompatible) {
  EXPECT_THROW(fid_distance(gaussian_1d(0, 1), GaussianSummary{"b", {0, 0}, {1, 0, 0, 1}, 2}), IncompatibleError);
}

TEST(P2l, ClosedFormAndIdentity) {
  const auto target = with_means({0.0, std::log(3.0)});
  const auto source = with_means({0.0, 0.0});
  EXPECT_NEAR(p2l_distance(source, target), 0.25 * std::log(0.5) + 0.75 * std::log(1.5), 1e-12);
  EXPECT_NEAR(p2l_distance(target, target), 0.0, 1e-15);
}

TEST(P2l, MatchesOracleOnRandomMeans) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 1 + t % 8;
    std::vector<double> ms(m), mt(m);
    for (auto& v : ms) v = u(rng);
    for (auto& v : mt) v = u(rng);
    const double expected = oracle::kld(oracle::softmax(mt), oracle::softmax(ms));
    EXPECT_NEAR(p2l_distance(with_means(ms), with_means(mt)), expected, 1e-12);
  }
}

TEST(Vdna, OppositePointMasses) {
  EXPECT_EQ(vdna_distance(single_feature({1, 0, 0}), single_feature({0, 0, 1})), 2.0);
}

TEST(Vdna, SymmetricAndZeroOnIdentity) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_fingerprint(rng, 4, 7);
    const auto b = random_fingerprint(rng, 4, 7);
    EXPECT_DOUBLE_EQ(vdna_distance(a, a), 0.0);
    EXPECT_NEAR(vdna_distance(a, b), vdna_distance(b, a), 1e-12);
  }
}

TEST(Manual, IouValues) {
  const auto abc = make_keyword_set("x", {"a", "b", "c"}, 1);
  EXPECT_DOUBLE_EQ(manual_distance(make_keyword_set("y", {"b", "c", "d"}, 1), abc), -0.5);
  EXPECT_DOUBLE_EQ(manual_distance(abc, abc), -1.0);
  EXPECT_DOUBLE_EQ(manual_distance(make_keyword_set("z", {"q"}, 1), abc), 0.0);
}

TEST(Manual, KeywordsAreNormalized) {
  const auto a = make_keyword_set("x", {"  Laparoscopy ", "CT", "ct"}, 1);
  EXPECT_EQ(a.keywords, (std::set<std::string>{"ct", "laparoscopy"}));
  EXPECT_THROW(manual_distance(a, make_keyword_set("e", {}, 1)), ValidationError);
}

TEST(Manual, ManifestRoundTripAndErrors) {
  const std::vector<KeywordSet> sets{make_keyword_set("a", {"x", "y"}, 10), make_keyword_set("b", {"z"}, 20)};
  EXPECT_EQ(keyword_manifest_from_json(keyword_manifest_to_json(sets)), sets);
  EXPECT_THROW(keyword_manifest_from_json(nlohmann::json::parse(R"([{"task_id":"a"}])")), FormatError);
  EXPECT_THROW(keyword_manifest_from_json(nlohmann::json::parse(
                   R"([{"task_id":"a","keywords":["x"],"task_size":1},{"task_id":"a","keywords":["y"],"task_size":1}])")),
               ValidationError);
}
