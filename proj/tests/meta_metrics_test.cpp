#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "taskprint/meta_metrics.hpp"
#include "taskprint/rank_correlation.hpp"

using namespace taskprint;

namespace {

const SetupKey kKey{"T", Scenario::Pretraining, BaseMetric::BA, 0};

/// Four-source setup with outcomes 0.1..0.4 and baseline 0.25.
OutcomeTable four_outcomes() {
  OutcomeTable t;
  t.add(kKey, std::string(kBaselineSource), 0.25);
  t.add(kKey, "a", 0.1);
  t.add(kKey, "b", 0.2);
  t.add(kKey, "c", 0.3);
  t.add(kKey, "d", 0.4);
  return t;
}

RankedSuggestions suggestions(std::vector<std::string> ids) {
  RankedSuggestions r{"sel", {}};
  for (std::size_t i = 0; i < ids.size(); ++i) r.entries.push_back(Suggestion{ids[i], static_cast<double>(i), i + 1, 0});
  return r;
}

}  // namespace

TEST(Improvement, Subtraction) {
  EXPECT_NEAR(improvement(0.82, 0.80), 0.02, 1e-15);
  EXPECT_DOUBLE_EQ(improvement(0.8, 0.8), 0.0);
  EXPECT_NEAR(improvement(0.70, 0.80), -0.10, 1e-15);
}

TEST(Gain, StrictInequalityForNegativeTransfer) {
  EXPECT_EQ(gain(0.82, 0.80), 1);
  EXPECT_EQ(gain(0.70, 0.80), 0);
  EXPECT_EQ(gain(0.80, 0.80), 1);
}

TEST(Gain, AgreesWithImprovementSignOnRandomRecords) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double s = std::round(u(rng) * 50) / 50, b = std::round(u(rng) * 50) / 50;
    EXPECT_EQ(gain(s, b) == 1, improvement(s, b) >= 0.0);
  }
}

TEST(Percentile, CountingDefinition) {
  const std::vector<double> o{0.1, 0.2, 0.3, 0.4};
  EXPECT_DOUBLE_EQ(percentile(o, 0.3), 0.75);
  EXPECT_DOUBLE_EQ(percentile(o, 0.4), 1.0);
  EXPECT_DOUBLE_EQ(percentile(std::vector<double>{0.6}, 0.6), 1.0);
  EXPECT_THROW(percentile(std::vector<double>{}, 0.5), ValidationError);
}

TEST(Regret, Definition) {
  EXPECT_NEAR(regret(std::vector<double>{0.9, 0.8}, 0.8), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(regret(std::vector<double>{0.9, 0.8}, 0.9), 0.0);
  EXPECT_NEAR(regret(std::vector<double>{0.95, 0.5}, 0.5), 0.9, 1e-12);
}

TEST(TableMetrics, FourOutcomeSetup) {
  const auto t = four_outcomes();
  EXPECT_DOUBLE_EQ(meta_metric(MetaMetric::Percentile, t, kKey, "c"), 0.75);
  EXPECT_DOUBLE_EQ(meta_metric(MetaMetric::Percentile, t, kKey, "a"), 0.25);
  EXPECT_NEAR(meta_metric(MetaMetric::Improvement, t, kKey, "c"), 0.05, 1e-15);
  EXPECT_NEAR(meta_metric(MetaMetric::Improvement, t, kKey, "b"), -0.05, 1e-15);
  EXPECT_EQ(meta_metric(MetaMetric::Gain, t, kKey, "c"), 1.0);
  EXPECT_EQ(meta_metric(MetaMetric::Gain, t, kKey, "b"), 0.0);
  EXPECT_NEAR(meta_metric(MetaMetric::Regret, t, kKey, "c"), 0.1 / 0.7, 1e-15);
  EXPECT_DOUBLE_EQ(meta_metric(MetaMetric::Regret, t, kKey, "d"), 0.0);
  EXPECT_THROW(meta_metric(MetaMetric::WeightedTau, t, kKey, "c"), ValidationError);
  EXPECT_THROW(meta_metric(MetaMetric::Gain, t, kKey, "zzz"), NotFoundError);
}

TEST(MultiShot, BestAndAverageModes) {
  OutcomeTable t;
  t.add(kKey, std::string(kBaselineSource), 0.65);
  t.add(kKey, "x", 0.6);
  t.add(kKey, "y", 0.9);
  t.add(kKey, "z", 0.7);
  const auto s = suggestions({"x", "y", "z"});
  EXPECT_NEAR(multi_shot(t, kKey, s, 3, ShotMode::Best, MetaMetric::Improvement), 0.25, 1e-12);
  EXPECT_NEAR(multi_shot(t, kKey, s, 3, ShotMode::Average, MetaMetric::Improvement), 0.25 / 3.0, 1e-12);
  for (auto m : {MetaMetric::Improvement, MetaMetric::Percentile, MetaMetric::Regret, MetaMetric::Gain}) {
    EXPECT_DOUBLE_EQ(multi_shot(t, kKey, s, 1, ShotMode::Best, m), meta_metric(m, t, kKey, "x"));
    EXPECT_DOUBLE_EQ(multi_shot(t, kKey, s, 1, ShotMode::Average, m), meta_metric(m, t, kKey, "x"));
  }
  EXPECT_THROW(multi_shot(t, kKey, s, 0, ShotMode::Best, MetaMetric::Gain), ValidationError);
  EXPECT_THROW(multi_shot(t, kKey, s, 4, ShotMode::Best, MetaMetric::Gain), ValidationError);
}

TEST(WeightedTau, IdentityAndReversal) {
  const std::vector<std::string> ids{"a", "b", "c", "d", "e"};
  auto rev = ids;
  std::reverse(rev.begin(), rev.end());
  EXPECT_EQ(weighted_tau(ids, ids), 1.0);
  EXPECT_EQ(weighted_tau(rev, ids), -1.0);
}

TEST(WeightedTau, MatchesPairEnumeration) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + t % 7;
    std::vector<std::string> actual;
    for (std::size_t i = 0; i < n; ++i) actual.push_back("id" + std::to_string(i));
    std::shuffle(actual.begin(), actual.end(), rng);
    auto predicted = actual;
    std::shuffle(predicted.begin(), predicted.end(), rng);
    EXPECT_NEAR(weighted_tau(predicted, actual), oracle::weighted_tau(predicted, actual), 1e-12);
  }
}

TEST(WeightedTau, TopSwapsCostMoreThanBottomSwaps) {
  const std::vector<std::string> actual{"a", "b", "c", "d", "e", "f"};
  const std::vector<std::string> top_swap{"b", "a", "c", "d", "e", "f"};
  const std::vector<std::string> bottom_swap{"a", "b", "c", "d", "f", "e"};
  const double top = weighted_tau(top_swap, actual);
  const double bottom = weighted_tau(bottom_swap, actual);
  EXPECT_LT(top, bottom);
}

TEST(WeightedTau, RejectsMismatchedIdSets) {
  using ids = std::vector<std::string>;
  EXPECT_THROW(weighted_tau(ids{"a", "b"}, ids{"a", "c"}), ValidationError);
  EXPECT_THROW(weighted_tau(ids{"a"}, ids{"a", "b"}), ValidationError);
}

TEST(WeightedTauScore, UsesOutcomeOrdering) {
  const auto t = four_outcomes();
  EXPECT_EQ(actual_ranking(t, kKey), (std::vector<std::string>{"d", "c", "b", "a"}));
  EXPECT_EQ(weighted_tau_score(t, kKey, suggestions({"d", "c", "b", "a"})), 1.0);
  EXPECT_EQ(weighted_tau_score(t, kKey, suggestions({"a", "b", "c", "d"})), -1.0);
}

TEST(KendallTau, MatchesPairEnumerationWithTies) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> v(0, 3);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + t % 9;
    std::vector<double> x(n), y(n);
    for (auto& e : x) e = v(rng);
    for (auto& e : y) e = v(rng);
    EXPECT_NEAR(kendall_tau(x, y), oracle::kendall_tau_b(x, y), 1e-12);
  }
}

TEST(Spearman, PerfectAndInverse) {
  const std::vector<double> x{1, 2, 3, 4}, y{10, 20, 30, 40}, z{4, 3, 2, 1};
  EXPECT_NEAR(spearman(x, y), 1.0, 1e-15);
  EXPECT_NEAR(spearman(x, z), -1.0, 1e-15);
}

TEST(AverageRanks, TiesShareTheMeanPosition) {
  EXPECT_EQ(average_ranks(std::vector<double>{0.5, 0.9, 0.5, 0.1}, Orientation::HigherIsBetter),
            (std::vector<double>{2.5, 1.0, 2.5, 4.0}));
  EXPECT_EQ(average_ranks(std::vector<double>{0.5, 0.9, 0.5, 0.1}, Orientation::LowerIsBetter),
            (std::vector<double>{2.5, 4.0, 2.5, 1.0}));
}

TEST(WinRates, Counting) {
  const std::vector<std::string> sel{"A", "B"};
  const std::vector<std::map<std::string, double>> cases{
      {{"A", 1.0}, {"B", 0.0}}, {{"A", 1.0}, {"B", 0.5}}, {{"A", 0.2}, {"B", 0.1}}, {{"A", 0.0}, {"B", 0.3}}};
  const auto r = win_rates(sel, cases);
  EXPECT_DOUBLE_EQ(r.at("A"), 75.0);
  EXPECT_DOUBLE_EQ(r.at("B"), 25.0);
}

TEST(WinRates, TiesCreditEveryone) {
  const auto r = win_rates({"A", "B", "C"}, {{{"A", 1.0}, {"B", 1.0}, {"C", 1.0}}, {{"A", 0.0}, {"B", 0.0}, {"C", 0.0}}});
  for (const auto& [_, v] : r) EXPECT_DOUBLE_EQ(v, 100.0);
  EXPECT_DOUBLE_EQ(win_rates({"solo"}, {{{"solo", 0.3}}}).at("solo"), 100.0);
}

TEST(WinRates, LowerIsBetterOrientation) {
  const auto r = win_rates({"A", "B"}, {{{"A", 0.1}, {"B", 0.2}}}, Orientation::LowerIsBetter);
  EXPECT_DOUBLE_EQ(r.at("A"), 100.0);
  EXPECT_DOUBLE_EQ(r.at("B"), 0.0);
}

TEST(Stability, IdenticalAndReversedRankings) {
  const std::map<std::string, double> r1{{"A", 1}, {"B", 2}, {"C", 3}};
  const std::map<std::string, double> r2{{"A", 3}, {"B", 2}, {"C", 1}};
  EXPECT_DOUBLE_EQ(stability_score({{"x", r1}, {"y", r1}, {"z", r1}}), 1.0);
  EXPECT_DOUBLE_EQ(stability_score({{"x", r1}, {"y", r2}}), -1.0);
}

TEST(Stability, MeanOfPairwiseTaus) {
  const std::vector<std::vector<double>> cols{{1, 2, 3, 4}, {2, 1, 3, 4}, {4, 2, 3, 1}};
  std::map<std::string, std::map<std::string, double>> rankings;
  const std::vector<std::string> sel{"A", "B", "C", "D"};
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (std::size_t s = 0; s < sel.size(); ++s) rankings["v" + std::to_string(c)][sel[s]] = cols[c][s];
  }
  const double expected = (oracle::kendall_tau_b(cols[0], cols[1]) + oracle::kendall_tau_b(cols[0], cols[2]) +
                           oracle::kendall_tau_b(cols[1], cols[2])) /
                          3.0;
  EXPECT_NEAR(stability_score(rankings), expected, 1e-12);
  EXPECT_THROW(stability_score({{"x", {{"A", 1}, {"B", 2}}}}), ValidationError);
}

TEST(RandomSelector, BestOfThreeFromHundredNearThreeQuarters) {
  const double p = random_selector_percentile(100, 3, 20000, 99);
  EXPECT_GT(p, 0.74);
  EXPECT_LT(p, 0.76);
  EXPECT_EQ(random_selector_percentile(100, 3, 500, 5), random_selector_percentile(100, 3, 500, 5));
}

TEST(OutcomesCsv, ParsesAndReportsLineNumbers) {
  std::istringstream good(
      "target_id,source_id,scenario,metric,repetition,value\n"
      "T,__baseline__,PRETRAINING,BA,0,0.5\n"
      "T,S1,PRETRAINING,BA,0,0.6\r\n");
  const auto t = read_outcomes_csv(good);
  EXPECT_DOUBLE_EQ(t.baseline(kKey), 0.5);
  EXPECT_DOUBLE_EQ(t.value(kKey, "S1"), 0.6);

  std::istringstream bad(
      "target_id,source_id,scenario,metric,repetition,value\n"
      "T,__baseline__,PRETRAINING,BA,0,0.5\n"
      "T,S1,PRETRAINING,BA,0,1.5\n");
  try {
    read_outcomes_csv(bad);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::istringstream header("a,b\n");
  EXPECT_THROW(read_outcomes_csv(header), FormatError);
}

TEST(OutcomeTable, RejectsSelfTransferAndMissingBaseline) {
  OutcomeTable t;
  EXPECT_THROW(t.add(kKey, "T", 0.5), ValidationError);
  t.add(kKey, "S", 0.5);
  EXPECT_THROW(t.validate(), ValidationError);
}
