#include <cstring>

#include <gtest/gtest.h>

#include "kgeval/kgeval.hpp"
#include "test_support.hpp"

using namespace kgeval;
using kgeval::fixtures::make_dataset;

TEST(SampleNegatives, AvoidsKnownTails) {
  const Dataset ds = make_dataset(3, 1, {{0, 0, 1}}, {}, {});
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    for (const Triple& t : sample_negatives(rng, {0, 0, 1}, ds, 1, Side::kTail)) {
      EXPECT_TRUE(t.tail == 0 || t.tail == 2);
      EXPECT_EQ(t.head, 0u);
    }
  }
}

TEST(SampleNegatives, ExhaustedReturnsEmpty) {
  const Dataset ds = make_dataset(2, 1, {{0, 0, 0}, {0, 0, 1}}, {}, {});
  Rng rng(1);
  EXPECT_TRUE(sample_negatives(rng, {0, 0, 1}, ds, 3, Side::kTail).empty());
}

TEST(SampleNegatives, ReturnsAllWhenFewerThanK) {
  const Dataset ds = make_dataset(4, 1, {{0, 0, 1}}, {}, {});
  Rng rng(1);
  const auto neg = sample_negatives(rng, {0, 0, 1}, ds, 10, Side::kHead);
  ASSERT_EQ(neg.size(), 3u);
  for (const Triple& t : neg) EXPECT_NE(t.head, 0u);
}

TEST(SampleNegatives, UnfilteredOnlyAvoidsSelf) {
  const Dataset ds = make_dataset(3, 1, {{0, 0, 1}, {0, 0, 2}}, {}, {});
  Rng rng(4);
  const auto neg = sample_negatives(rng, {0, 0, 1}, ds, 2, Side::kTail, false);
  ASSERT_EQ(neg.size(), 2u);
  for (const Triple& t : neg) EXPECT_NE(t.tail, 1u);
}

TEST(SampleNegatives, DeterministicForSeed) {
  const Dataset ds = synthetic_kg();
  Rng a(99), b(99);
  for (const Triple& t : ds.train) {
    EXPECT_EQ(sample_negatives(a, t, ds, 4, Side::kTail), sample_negatives(b, t, ds, 4, Side::kTail));
  }
}

TEST(MarginLoss, Values) {
  EXPECT_EQ(margin_loss(2.0, 0.0, 1.0), 0.0);
  EXPECT_EQ(margin_loss(0.0, 0.0, 1.0), 1.0);
  EXPECT_EQ(margin_loss(0.5, 1.0, 1.0), 1.5);
}

// A few instances per scorer; the acceptance suite runs 100 each.
TEST(MarginLoss, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    TransEScorer::Options o;
    o.unit_norm_entities = false;
    TransEScorer s(4, 2, 3, rng.next(), o);
    const Triple pos{0, 1, 2}, neg{0, 1, 3};
    SparseGradient g(s.parameters().size());
    accumulate_pair_gradient(s, pos, neg, 5.0, 1.0, g);
    EXPECT_LT(fixtures::relative_error(g.dense(), fixtures::numeric_pair_gradient(s, pos, neg, 5.0)), 1e-6);
  }
}

TEST(Train, SeparatesSingleTriple) {
  const Dataset ds = make_dataset(4, 1, {{0, 0, 1}}, {}, {{0, 0, 1}});
  TransEScorer s(4, 1, 8, 2);
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.learning_rate = 0.05;
  cfg.margin = 0.5;
  cfg.negatives = 3;
  train(s, ds, cfg);
  const double pos = s.score({0, 0, 1});
  for (EntityId t : {0u, 2u, 3u}) EXPECT_GE(pos - s.score({0, 0, t}), cfg.margin);
  for (EntityId h : {1u, 2u, 3u}) EXPECT_GE(pos - s.score({h, 0, 1}), cfg.margin);
}

TEST(Train, ZeroEpochsLeavesScorerUnchanged) {
  const Dataset ds = synthetic_kg();
  DistMultScorer s(ds.entity_count(), ds.relation_count(), 8, 1);
  const std::vector<double> before(s.parameters().begin(), s.parameters().end());
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto r = train(s, ds, cfg);
  EXPECT_TRUE(r.loss_trace.empty());
  EXPECT_TRUE(std::equal(before.begin(), before.end(), s.parameters().begin()));
}

TEST(Train, BitReproducible) {
  const Dataset ds = synthetic_kg();
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.negatives = 3;
  for (const char* kind : {"transe", "distmult", "tied-relu"}) {
    auto a = make_trainable_scorer(kind, ds.entity_count(), ds.relation_count(), 8, 4);
    auto b = make_trainable_scorer(kind, ds.entity_count(), ds.relation_count(), 8, 4);
    const auto ra = train(*a, ds, cfg), rb = train(*b, ds, cfg);
    EXPECT_EQ(ra.loss_trace, rb.loss_trace) << kind;
    EXPECT_EQ(std::memcmp(a->parameters().data(), b->parameters().data(),
                          a->parameters().size() * sizeof(double)),
              0)
        << kind;
  }
}

TEST(Train, TransEKeepsUnitNormsAndLossFalls) {
  const Dataset ds = synthetic_kg();
  TransEScorer s(ds.entity_count(), ds.relation_count(), 16, 1);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.learning_rate = 0.05;
  cfg.negatives = 5;
  const auto r = train(s, ds, cfg);
  for (EntityId e = 0; e < ds.entity_count(); ++e) {
    double n = 0.0;
    for (double v : s.embeddings().entity(e)) n += v * v;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-9);
  }
  EXPECT_TRUE(all_finite(s.parameters()));
  // Non-increasing once smoothed over 10-epoch windows.
  auto window = [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t k = i; k < i + 10; ++k) s += r.loss_trace[k];
    return s / 10.0;
  };
  for (std::size_t i = 10; i + 10 <= r.loss_trace.size(); i += 10) EXPECT_LE(window(i), window(i - 10));
}

TEST(Train, NonFiniteLossAborts) {
  const Dataset ds = synthetic_kg();
  DistMultScorer s(ds.entity_count(), ds.relation_count(), 8, 1);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 1e150;
  EXPECT_THROW(train(s, ds, cfg), NumericError);
}

TEST(Train, RejectsBadConfig) {
  const Dataset ds = synthetic_kg();
  DistMultScorer s(ds.entity_count(), ds.relation_count(), 8, 1);
  TrainConfig cfg;
  cfg.margin = 0.0;
  EXPECT_THROW(train(s, ds, cfg), Error);
}
