#include <cstring>
#include <set>

#include <gtest/gtest.h>

#include "kgeval/kgeval.hpp"
#include "test_support.hpp"

using namespace kgeval;

namespace {

template <typename S>
void set_row(S& s, bool entity, std::uint32_t id, std::initializer_list<double> v) {
  auto row = entity ? s.embeddings().entity(id) : s.embeddings().relation(id);
  std::copy(v.begin(), v.end(), row.begin());
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

const std::vector<EntityId> kAll4{0, 1, 2, 3};

}  // namespace

TEST(ConstantScorer, ReturnsConstant) {
  const ConstantScorer zero(0.0, 4, 1);
  EXPECT_EQ(zero.score_batch({0, 0, Side::kTail}, kAll4), (std::vector<double>{0, 0, 0, 0}));
  const ConstantScorer c(7.5, 4, 1);
  const std::vector<EntityId> one{2};
  EXPECT_EQ(c.score_batch({1, 0, Side::kHead}, one), (std::vector<double>{7.5}));
}

TEST(ConstantScorer, SingleDistinctValue) {
  const ConstantScorer c(-3.25, 4, 2);
  for (Side side : {Side::kHead, Side::kTail}) {
    for (EntityId a = 0; a < 4; ++a) {
      const auto s = c.score_batch({a, 1, side}, kAll4);
      EXPECT_EQ(std::set<double>(s.begin(), s.end()).size(), 1u);
    }
  }
}

TEST(TransE, ExactTranslationScoresZero) {
  TransEScorer::Options o;
  o.unit_norm_entities = false;
  TransEScorer s(2, 1, 2, 0, o);
  set_row(s, true, 0, {0, 0});
  set_row(s, true, 1, {1, 0});
  set_row(s, false, 0, {1, 0});
  EXPECT_EQ(s.score({0, 0, 1}), 0.0);
  EXPECT_EQ(s.score({0, 0, 0}), -1.0);
  EXPECT_EQ(s.score_batch({1, 0, Side::kHead}, std::vector<EntityId>{0})[0], 0.0);
}

TEST(TransE, MatchesReferenceNorm) {
  Rng rng(5);
  TransEScorer::Options o;
  o.unit_norm_entities = false;
  for (int trial = 0; trial < 50; ++trial) {
    TransEScorer s(6, 2, 8, rng.next(), o);
    const Triple t{static_cast<EntityId>(rng.below(6)), static_cast<RelationId>(rng.below(2)),
                   static_cast<EntityId>(rng.below(6))};
    const auto emb = s.embeddings();
    const double expected = fixtures::reference_transe_l2(emb.entity(t.head), emb.relation(t.relation),
                                                         emb.entity(t.tail));
    EXPECT_NEAR(s.score(t), expected, 1e-12);
  }
}

TEST(TransE, L1Norm) {
  TransEScorer::Options o;
  o.norm = Norm::kL1;
  o.unit_norm_entities = false;
  TransEScorer s(2, 1, 2, 0, o);
  set_row(s, true, 0, {0, 0});
  set_row(s, true, 1, {1, 2});
  set_row(s, false, 0, {0, 0});
  EXPECT_EQ(s.score({0, 0, 1}), -3.0);
}

TEST(TransE, UnitNormAtInit) {
  TransEScorer s(10, 3, 16, 3);
  for (EntityId e = 0; e < 10; ++e) {
    double n = 0.0;
    for (double v : s.embeddings().entity(e)) n += v * v;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-12);
  }
}

TEST(DistMult, HandArithmetic) {
  DistMultScorer s(2, 1, 2, 0);
  set_row(s, true, 0, {1, 2});
  set_row(s, true, 1, {1, 1});
  set_row(s, false, 0, {1, 1});
  EXPECT_EQ(s.score({0, 0, 1}), 3.0);
}

TEST(DistMult, ZeroRelationTiesEverything) {
  DistMultScorer s(4, 2, 3, 9);
  set_row(s, false, 1, {0, 0, 0});
  for (double v : s.score_batch({2, 1, Side::kTail}, kAll4)) EXPECT_EQ(v, 0.0);
}

TEST(DistMult, SymmetricInHeadAndTail) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    DistMultScorer s(5, 2, 6, rng.next());
    const EntityId h = rng.below(5), t = rng.below(5);
    const RelationId r = rng.below(2);
    EXPECT_EQ(s.score({h, r, t}), s.score({t, r, h}));
  }
}

TEST(TiedRelu, SaturatedNetworkIsConstant) {
  TiedReluScorer::Options o;
  o.hidden_bias = -1e6;
  o.output_bias = 0.25;
  TiedReluScorer s(4, 2, 5, 1, o);
  for (Side side : {Side::kHead, Side::kTail}) {
    for (double v : s.score_batch({1, 1, side}, kAll4)) EXPECT_EQ(v, 0.25);
  }
  const auto p = s.score_probed({0, 1, 3});
  EXPECT_EQ(p.zero_ratio, 1.0);
  EXPECT_EQ(p.score, 0.25);
}

TEST(TiedRelu, ZeroRatio) {
  const std::vector<double> z{0, 0, 0.5, 0};
  EXPECT_DOUBLE_EQ(zero_ratio(z), 0.75);
}

TEST(TiedRelu, ProbeAgreesWithActivations) {
  TiedReluScorer::Options o;
  o.hidden_bias = 0.0;
  TiedReluScorer s(5, 2, 4, 3, o);
  const Triple t{1, 0, 4};
  const auto z = s.activations(t);
  EXPECT_EQ(s.score_probed(t).zero_ratio, zero_ratio(z));
  EXPECT_EQ(s.score_probed(t).score, s.score(t));
  EXPECT_NE(s.probe(), nullptr);
  EXPECT_EQ(ConstantScorer(0, 1, 1).probe(), nullptr);
}

TEST(TiedRelu, PathologicalInitSharesEvaluatedScore) {
  const Dataset ds = synthetic_kg();
  TiedReluScorer s(ds.entity_count(), ds.relation_count(), 16, 0);
  std::size_t heavy = 0, queries = 0;
  for (const Query& q : make_queries(ds.test, true, true)) {
    const auto p = profile_query(ds, s, q);
    heavy += 2 * p.tied >= p.total_candidates;
    ++queries;
  }
  EXPECT_GE(2 * heavy, queries);
}

// Batch scoring of either side reproduces the single-triple score bitwise.
TEST(Scorers, SideIndependentBitwiseScores) {
  const std::size_t ne = 7, nr = 3;
  std::vector<std::unique_ptr<Scorer>> scorers;
  scorers.push_back(std::make_unique<TransEScorer>(ne, nr, 8, 1));
  scorers.push_back(std::make_unique<DistMultScorer>(ne, nr, 8, 2));
  TiedReluScorer::Options o;
  o.hidden_bias = 0.0;
  scorers.push_back(std::make_unique<TiedReluScorer>(ne, nr, 8, 3, o));
  std::vector<EntityId> all(ne);
  std::iota(all.begin(), all.end(), 0u);
  for (const auto& s : scorers) {
    for (EntityId a = 0; a < ne; ++a) {
      for (RelationId r = 0; r < nr; ++r) {
        const auto tails = s->score_batch({a, r, Side::kTail}, all);
        const auto heads = s->score_batch({a, r, Side::kHead}, all);
        for (EntityId c = 0; c < ne; ++c) {
          ASSERT_EQ(tails[c], s->score({a, r, c})) << s->kind();
          ASSERT_EQ(heads[c], s->score({c, r, a})) << s->kind();
        }
        // Purity: a second call is bitwise identical.
        ASSERT_TRUE(bitwise_equal(tails, s->score_batch({a, r, Side::kTail}, all)));
      }
    }
  }
}

TEST(Scorers, InitIsBoundedAndFinite) {
  const std::size_t d = 9;
  DistMultScorer s(20, 4, d, 17);
  const double bound = 6.0 / std::sqrt(static_cast<double>(d));
  for (double v : s.parameters()) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_LE(std::abs(v), bound);
  }
  TiedReluScorer t(20, 4, d, 17);
  EXPECT_TRUE(all_finite(t.parameters()));
  for (double w : t.hidden_weights()) EXPECT_LE(std::abs(w), 0.1);
  for (double b : t.hidden_bias()) EXPECT_EQ(b, t.options().hidden_bias);
  EXPECT_EQ(t.hidden(), 16u);
}

TEST(Checkpoint, ReloadReproducesScoresBitwise) {
  const std::size_t ne = 6, nr = 2;
  std::vector<std::unique_ptr<Scorer>> scorers;
  scorers.push_back(std::make_unique<ConstantScorer>(0.1, ne, nr));
  TransEScorer::Options l1;
  l1.norm = Norm::kL1;
  scorers.push_back(std::make_unique<TransEScorer>(ne, nr, 5, 4, l1));
  scorers.push_back(std::make_unique<DistMultScorer>(ne, nr, 5, 5));
  scorers.push_back(std::make_unique<TiedReluScorer>(ne, nr, 5, 6));
  std::vector<EntityId> all(ne);
  std::iota(all.begin(), all.end(), 0u);
  for (const auto& s : scorers) {
    const std::string text = checkpoint_to_string(*s);
    const auto loaded = scorer_from_string(text);
    EXPECT_EQ(loaded->kind(), s->kind());
    EXPECT_EQ(checkpoint_to_string(*loaded), text);
    for (EntityId a = 0; a < ne; ++a) {
      EXPECT_TRUE(bitwise_equal(s->score_batch({a, 1, Side::kTail}, all),
                                loaded->score_batch({a, 1, Side::kTail}, all)));
    }
  }
}

TEST(Checkpoint, RejectsBadInput) {
  EXPECT_THROW(scorer_from_string("{\"format\":\"kgeval-checkpoint\",\"format_version\":2}"),
               FormatError);
  EXPECT_THROW(scorer_from_string("[]"), FormatError);
  auto j = DistMultScorer(3, 1, 2, 0).to_json();
  j["entity_embeddings"] = std::vector<double>{1.0};
  EXPECT_THROW(scorer_from_json(j), FormatError);
}
