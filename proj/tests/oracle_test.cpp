#include <set>

#include <gtest/gtest.h>

#include "kgeval/kgeval.hpp"
#include "test_support.hpp"

using namespace kgeval;
using kgeval::fixtures::make_dataset;

namespace {

// Tail query (0, r0, ?) over five entities; the true tail 1 scores 0.5, one
// negative scores higher and two tie with it.
struct Planted {
  Dataset ds = make_dataset(5, 1, {}, {}, {{0, 0, 1}});
  TableScorer scorer = [] {
    std::vector<double> t(25, 0.0);
    const double tails[5] = {0.5, 0.5, 0.9, 0.5, 0.1};
    for (int e = 0; e < 5; ++e) t[e] = tails[e];
    return TableScorer(5, 1, t);
  }();
  Query q{{0, 0, 1}, Side::kTail};
};

}  // namespace

TEST(OracleRanking, PlantedTies) {
  const Planted p;
  const OracleRanking o = oracle_ranking(p.ds, p.scorer, p.q);
  EXPECT_EQ(o.profile, (TieProfile{1, 2, 5}));
  EXPECT_EQ(o.top.weights, (std::map<std::uint64_t, std::uint64_t>{{2, 1}}));
  EXPECT_EQ(o.bottom.weights, (std::map<std::uint64_t, std::uint64_t>{{4, 1}}));
  for (std::uint64_t r : {2u, 3u, 4u}) EXPECT_DOUBLE_EQ(o.random.probability(r), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(o.random.mean(), 3.0);
  EXPECT_EQ(o.random.probability(5), 0.0);
}

TEST(OracleRanking, TieFreeIsPointMass) {
  Rng rng(2);
  const Dataset ds = make_dataset(6, 1, {{0, 0, 3}}, {}, {{0, 0, 1}});
  const TableScorer s = fixtures::distinct_table_scorer(6, 1, rng);
  const OracleRanking o = oracle_ranking(ds, s, {{0, 0, 1}, Side::kTail});
  EXPECT_EQ(o.top, o.bottom);
  EXPECT_EQ(o.top, o.random);
  EXPECT_EQ(o.random.weights.size(), 1u);
}

TEST(OracleRanking, FastPathInsideSupport) {
  Rng rng(17);
  std::size_t checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const TinyKg kg = random_tiny_kg(rng);
    for (const Query& q : make_queries(kg.dataset.test, true, true)) {
      const OracleRanking o = oracle_ranking(kg.dataset, kg.scorer, q);
      const TieProfile p = profile_query(kg.dataset, kg.scorer, q);
      ASSERT_EQ(p, o.profile);
      ASSERT_TRUE(o.top.contains(rank_top(p)));
      ASSERT_TRUE(o.bottom.contains(rank_bottom(p)));
      CounterRng g(rng.next());
      for (int k = 0; k < 4; ++k) ASSERT_TRUE(o.random.contains(rank_random(p, g)));
      // Uniform over tied+1 insertion points.
      for (const auto& [rank, w] : o.random.weights) ASSERT_EQ(w, 1u) << rank;
      ASSERT_EQ(o.random.denominator, p.tied + 1);
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000u);
}

TEST(OracleFilter, Examples) {
  const Dataset ds = make_dataset(4, 2, {{0, 0, 1}, {0, 1, 2}}, {{0, 0, 3}}, {{0, 0, 2}});
  EXPECT_EQ(oracle_filter(ds, {{0, 0, 2}, Side::kTail}), (std::vector<EntityId>{0, 2}));
  EXPECT_EQ(oracle_filter(ds, {{0, 1, 2}, Side::kHead}), (std::vector<EntityId>{0, 1, 2, 3}));
  const Dataset empty = make_dataset(3, 1, {}, {}, {});
  EXPECT_EQ(oracle_filter(empty, {{1, 0, 2}, Side::kTail}), (std::vector<EntityId>{0, 1, 2}));
}

TEST(OracleFilter, MatchesIndexedFilter) {
  Rng rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const TinyKg kg = random_tiny_kg(rng);
    for (const Query& q : make_queries(kg.dataset.test, true, true)) {
      ASSERT_EQ(filtered_candidates(kg.dataset, q).ids, oracle_filter(kg.dataset, q));
    }
  }
}

TEST(Verify, NoMismatches) {
  const VerifyReport rep = run_verify(200, 5);
  EXPECT_EQ(rep.trials, 200u);
  EXPECT_GT(rep.queries, 200u);
  EXPECT_EQ(rep.total_mismatches(), 0u);
}
