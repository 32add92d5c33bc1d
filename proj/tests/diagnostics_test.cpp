#include <numeric>

#include <gtest/gtest.h>

#include "kgeval/kgeval.hpp"
#include "test_support.hpp"

using namespace kgeval;
using kgeval::fixtures::make_dataset;

TEST(TieHistogram, Buckets) {
  const std::vector<std::uint64_t> tied{0, 0, 3, 3, 7};
  const TieHistogram h = tie_histogram(tied);
  EXPECT_EQ(h.buckets, (std::map<std::uint64_t, std::size_t>{{0, 2}, {3, 2}, {7, 1}}));
  EXPECT_DOUBLE_EQ(h.mean, 2.6);
  EXPECT_EQ(h.max, 7u);
  EXPECT_DOUBLE_EQ(h.fraction_with_ties, 0.6);
  EXPECT_EQ(tie_histogram_csv(h), "bucket,count\n0,2\n3,2\n7,1\n");
}

TEST(TieStats, ConstantScorerTiesEverything) {
  const Dataset ds = synthetic_kg();
  const ConstantScorer c(1.0, ds.entity_count(), ds.relation_count());
  const TieHistogram h = tie_stats(ds, c, TieStatsConfig{});
  ASSERT_EQ(h.query_count(), 2 * ds.test.size());
  for (std::size_t i = 0; i < h.query_count(); ++i) EXPECT_EQ(h.tied[i] + 1, h.candidates[i]);
  EXPECT_EQ(h.fraction_with_ties, 1.0);
}

TEST(TieStats, TieFreeScorerHasOnlyZeroBucket) {
  Rng rng(3);
  const Dataset ds = synthetic_kg();
  const TableScorer s = fixtures::distinct_table_scorer(ds.entity_count(), ds.relation_count(), rng);
  const TieHistogram h = tie_stats(ds, s, TieStatsConfig{});
  ASSERT_EQ(h.buckets.size(), 1u);
  EXPECT_EQ(h.buckets.begin()->first, 0u);
  EXPECT_EQ(h.fraction_with_ties, 0.0);
}

TEST(TieStats, AgreesWithEvaluate) {
  const Dataset ds = synthetic_kg();
  TiedReluScorer s(ds.entity_count(), ds.relation_count(), 16, 1);
  const TieHistogram h = tie_stats(ds, s, TieStatsConfig{});
  EvalConfig cfg;
  cfg.protocols = {Protocol::kTop};
  const auto r = evaluate(ds, s, cfg);
  ASSERT_EQ(h.query_count(), r.queries.size());
  for (std::size_t i = 0; i < r.queries.size(); ++i) {
    EXPECT_EQ(h.tied[i], r.queries[i].profile.tied);
    EXPECT_EQ(h.candidates[i], r.queries[i].profile.total_candidates);
  }
  EXPECT_DOUBLE_EQ(h.mean, r.ties.mean_tied);

  TieStatsConfig with_valid;
  with_valid.include_valid = true;
  EXPECT_EQ(tie_stats(ds, s, with_valid).query_count(), 2 * (ds.valid.size() + ds.test.size()));
}

TEST(ZeroRatioHistogram, BucketsAndMean) {
  EXPECT_EQ(ZeroRatioHistogram::bucket_of(0.0), 0u);
  EXPECT_EQ(ZeroRatioHistogram::bucket_of(0.75), 15u);
  EXPECT_EQ(ZeroRatioHistogram::bucket_of(0.049), 0u);
  EXPECT_EQ(ZeroRatioHistogram::bucket_of(1.0), 19u);
  const std::vector<double> r{0.0, 0.5, 1.0, 1.0};
  const ZeroRatioHistogram h = zero_ratio_histogram(r);
  EXPECT_DOUBLE_EQ(h.mean, 0.625);
  EXPECT_DOUBLE_EQ(h.frequency[19], 0.5);
  EXPECT_DOUBLE_EQ(h.frequency[10], 0.25);
  EXPECT_EQ(h.samples, 4u);
}

TEST(ReluStats, SaturatedNetwork) {
  const Dataset ds = synthetic_kg();
  TiedReluScorer::Options o;
  o.hidden_bias = -1e6;
  TiedReluScorer s(ds.entity_count(), ds.relation_count(), 8, 0, o);
  const ReluStats st = relu_zero_stats(ds, s);
  EXPECT_EQ(st.valid.mean, 1.0);
  EXPECT_EQ(st.valid.frequency[19], 1.0);
  EXPECT_EQ(st.negatives.mean, 1.0);
  EXPECT_GT(st.negatives.samples, st.valid.samples);
}

TEST(ReluStats, SingleTripleRatio) {
  // Hidden bias 0 and one unit forced positive: three of four units are zero.
  TiedReluScorer::Options o;
  o.hidden = 4;
  o.hidden_bias = 0.0;
  TiedReluScorer s(2, 1, 2, 0, o);
  auto w = s.hidden_weights();
  std::fill(w.begin(), w.end(), 0.0);
  auto b = s.hidden_bias();
  const std::vector<double> bias{0.0, 0.0, 0.5, -0.25};
  std::copy(bias.begin(), bias.end(), b.begin());
  const std::vector<Triple> t{{0, 0, 1}};
  EXPECT_DOUBLE_EQ(relu_zero_stats(s, t).mean, 0.75);
}

TEST(ReluStats, FrequenciesSumToOne) {
  const Dataset ds = synthetic_kg();
  TiedReluScorer s(ds.entity_count(), ds.relation_count(), 16, 4);
  const ReluStats st = relu_zero_stats(ds, s);
  for (const auto* h : {&st.valid, &st.negatives}) {
    EXPECT_NEAR(std::accumulate(h->frequency.begin(), h->frequency.end(), 0.0), 1.0, 1e-9);
  }
  const std::string csv = zero_ratio_csv(st.valid);
  EXPECT_EQ(csv.rfind("bucket,frequency\n0.00,", 0), 0u);
  EXPECT_NE(csv.find("\n0.95,"), std::string::npos);
  EXPECT_EQ(zero_ratio_json(st.valid)["frequency"].size(), 20u);
}

TEST(ReluStats, RequiresProbe) {
  const Dataset ds = synthetic_kg();
  const DistMultScorer s(ds.entity_count(), ds.relation_count(), 4, 0);
  EXPECT_THROW(relu_zero_stats(ds, s), CapabilityError);
}

// A pathological single-layer ReLU scorer is tie-heavy; an embedding scorer
// is not.
TEST(Diagnostics, AffectedVersusNonAffected) {
  const Dataset ds = synthetic_kg();
  TiedReluScorer relu(ds.entity_count(), ds.relation_count(), 16, 0);
  DistMultScorer dm(ds.entity_count(), ds.relation_count(), 16, 0);
  const TieHistogram hr = tie_stats(ds, relu, TieStatsConfig{});
  const TieHistogram hd = tie_stats(ds, dm, TieStatsConfig{});
  EXPECT_GT(hr.fraction_with_ties, 0.5);
  EXPECT_EQ(hd.fraction_with_ties, 0.0);
  EXPECT_GT(hr.mean, 10.0);
}

TEST(ScoreDump, ListsCandidates) {
  const Dataset ds = make_dataset(3, 1, {{0, 0, 1}}, {}, {{0, 0, 2}});
  const ConstantScorer c(0.5, 3, 1);
  EXPECT_EQ(score_dump_csv(ds, c, {{0, 0, 2}, Side::kTail}),
            "entity,score,evaluated\ne0,0.5,0\ne2,0.5,1\n");
}
