#pragma once

// Brute-force reference implementations of candidate filtering and
// tie-breaking, plus the randomized equivalence suite behind `verify`.
// Everything here is deliberately naive: per-candidate scoring, linear scans
// over the full triple lists, and physical list insertion.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kgeval/dataset.hpp"
#include "kgeval/protocols.hpp"
#include "kgeval/rng.hpp"
#include "kgeval/scoring.hpp"

namespace kgeval {

// Scores read from an explicit dense table indexed by (head, relation, tail).
class TableScorer final : public Scorer {
 public:
  TableScorer(std::size_t entities, std::size_t relations, std::vector<double> table)
      : entities_(entities), relations_(relations), table_(std::move(table)) {
    if (table_.size() != entities * relations * entities)
      throw Error("TableScorer: table size does not match vocabulary");
  }

  std::string_view kind() const override { return "table"; }
  std::size_t entity_count() const override { return entities_; }
  std::size_t relation_count() const override { return relations_; }

  double& at(const Triple& t) { return table_[index(t)]; }
  double at(const Triple& t) const { return table_[index(t)]; }

  using Scorer::score_batch;
  void score_batch(const ScoreQuery& q, std::span<const EntityId> candidates,
                   std::span<double> out) const override {
    for (std::size_t i = 0; i < candidates.size(); ++i) out[i] = at(q.with_candidate(candidates[i]));
  }

  nlohmann::json to_json() const override {
    return {{"kind", "table"}, {"entity_count", entities_}, {"relation_count", relations_}};
  }

 private:
  std::size_t index(const Triple& t) const {
    return (static_cast<std::size_t>(t.head) * relations_ + t.relation) * entities_ + t.tail;
  }

  std::size_t entities_;
  std::size_t relations_;
  std::vector<double> table_;
};

// Exact distribution over ranks: weights[rank] / denominator.
struct RankDistribution {
  std::map<std::uint64_t, std::uint64_t> weights;
  std::uint64_t denominator = 1;

  double probability(std::uint64_t rank) const {
    auto it = weights.find(rank);
    return it == weights.end() ? 0.0
                               : static_cast<double>(it->second) / static_cast<double>(denominator);
  }
  bool contains(std::uint64_t rank) const { return weights.contains(rank); }
  // Sum of rank * weight; the mean is this over the denominator.
  std::uint64_t weighted_rank_sum() const {
    std::uint64_t s = 0;
    for (const auto& [r, w] : weights) s += r * w;
    return s;
  }
  double mean() const {
    return static_cast<double>(weighted_rank_sum()) / static_cast<double>(denominator);
  }
  friend bool operator==(const RankDistribution&, const RankDistribution&) = default;
};

// Candidate set by definition: an entity is excluded iff substituting it
// yields a triple present somewhere in train, valid or test, unless it is
// the evaluated answer.
inline std::vector<EntityId> oracle_filter(const Dataset& ds, const Query& q) {
  std::vector<EntityId> out;
  for (EntityId e = 0; e < ds.entity_count(); ++e) {
    if (e == q.answer()) {
      out.push_back(e);
      continue;
    }
    const Triple cand = q.with_candidate(e);
    bool known = false;
    for (const auto* split : {&ds.train, &ds.valid, &ds.test}) {
      for (const Triple& t : *split) known = known || t == cand;
    }
    if (!known) out.push_back(e);
  }
  return out;
}

struct OracleRanking {
  TieProfile profile;
  RankDistribution top;
  RankDistribution bottom;
  RankDistribution random;

  const RankDistribution& of(Protocol p) const {
    return p == Protocol::kTop ? top : p == Protocol::kBottom ? bottom : random;
  }
};

// Materializes the negatives, stable-sorts them by descending score, and
// physically inserts the true triple at every admissible position among its
// equal-scored neighbours.
inline OracleRanking oracle_ranking(const Dataset& ds, const Scorer& scorer, const Query& q) {
  const auto ids = oracle_filter(ds, q);
  const double target = scorer.score(q.triple);
  struct Item {
    double score;
    bool is_true;
  };
  std::vector<Item> negatives;
  for (EntityId e : ids) {
    if (e == q.answer()) continue;
    negatives.push_back({scorer.score(q.with_candidate(e)), false});
  }
  std::stable_sort(negatives.begin(), negatives.end(),
                   [](const Item& a, const Item& b) { return a.score > b.score; });

  std::size_t lo = 0;
  while (lo < negatives.size() && negatives[lo].score > target) ++lo;
  std::size_t hi = lo;
  while (hi < negatives.size() && negatives[hi].score == target) ++hi;

  auto rank_if_inserted_at = [&](std::size_t pos) -> std::uint64_t {
    std::vector<Item> list = negatives;
    list.insert(list.begin() + static_cast<std::ptrdiff_t>(pos), Item{target, true});
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i].is_true) return i + 1;
    }
    return 0;
  };

  OracleRanking out;
  out.profile = {lo, hi - lo, ids.size()};
  out.top.weights[rank_if_inserted_at(lo)] = 1;
  out.bottom.weights[rank_if_inserted_at(hi)] = 1;
  out.random.denominator = hi - lo + 1;
  for (std::size_t pos = lo; pos <= hi; ++pos) ++out.random.weights[rank_if_inserted_at(pos)];
  return out;
}

inline RankDistribution oracle_rank(const Dataset& ds, const Scorer& scorer, const Query& q,
                                    Protocol protocol) {
  return oracle_ranking(ds, scorer, q).of(protocol);
}

// ---------------------------------------------------------------------------
// Randomized equivalence suite.

struct TinyKg {
  Dataset dataset;
  TableScorer scorer;
};

// Random KG with at most `max_entities` entities and a table scorer whose
// values are drawn from a small alphabet so ties are common.
inline TinyKg random_tiny_kg(Rng& rng, std::size_t max_entities = 8, std::size_t max_relations = 3) {
  const std::size_t ne = 2 + rng.below(max_entities - 1);
  const std::size_t nr = 1 + rng.below(max_relations);
  Vocab entities, relations;
  for (std::size_t i = 0; i < ne; ++i) entities.intern("e" + std::to_string(i));
  for (std::size_t i = 0; i < nr; ++i) relations.intern("r" + std::to_string(i));
  std::vector<Triple> splits[3];
  const std::size_t count = 1 + rng.below(3 * ne);
  for (std::size_t i = 0; i < count; ++i) {
    const Triple t{static_cast<EntityId>(rng.below(ne)), static_cast<RelationId>(rng.below(nr)),
                   static_cast<EntityId>(rng.below(ne))};
    splits[i == 0 ? 2 : rng.below(3)].push_back(t);
  }
  std::vector<double> table(ne * nr * ne);
  const std::uint64_t alphabet = rng.below(3) == 0 ? 1'000'000 : 1 + rng.below(4);
  for (double& v : table) v = static_cast<double>(rng.below(alphabet)) * 0.25;
  Dataset ds = build_dataset(std::move(splits[0]), std::move(splits[1]), std::move(splits[2]),
                             std::move(entities), std::move(relations));
  return {std::move(ds), TableScorer(ne, nr, std::move(table))};
}

struct VerifyReport {
  std::size_t trials = 0;
  std::size_t queries = 0;
  std::size_t filter_mismatches = 0;
  std::size_t profile_mismatches = 0;
  std::size_t top_mismatches = 0;
  std::size_t bottom_mismatches = 0;
  std::size_t random_support_violations = 0;
  std::size_t midpoint_violations = 0;
  std::size_t evaluate_mismatches = 0;

  std::size_t total_mismatches() const {
    return filter_mismatches + profile_mismatches + top_mismatches + bottom_mismatches +
           random_support_violations + midpoint_violations + evaluate_mismatches;
  }
};

inline VerifyReport run_verify(std::size_t trials = 500, std::uint64_t seed = 0,
                               std::size_t random_draws = 8) {
  VerifyReport rep;
  Rng rng(mix_key({seed, 0x766572696679ULL}));
  for (std::size_t trial = 0; trial < trials; ++trial) {
    TinyKg kg = random_tiny_kg(rng);
    const Dataset& ds = kg.dataset;
    ++rep.trials;

    EvalConfig cfg;
    cfg.seed = trial;
    cfg.seeds = random_draws;
    cfg.threads = 1;
    const EvalReport er = evaluate(ds, kg.scorer, cfg);

    const auto queries = make_queries(ds.test, true, true);
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      const Query& q = queries[qi];
      ++rep.queries;
      const CandidateSet fast = filtered_candidates(ds, q);
      if (fast.ids != oracle_filter(ds, q) || fast.evaluated() != q.answer()) ++rep.filter_mismatches;

      const OracleRanking o = oracle_ranking(ds, kg.scorer, q);
      const TieProfile p = profile_query(ds, kg.scorer, q);
      if (!(p == o.profile)) ++rep.profile_mismatches;
      if (!o.top.contains(rank_top(p)) || o.top.weights.size() != 1) ++rep.top_mismatches;
      if (!o.bottom.contains(rank_bottom(p)) || o.bottom.weights.size() != 1) ++rep.bottom_mismatches;
      // Exact midpoint identity, in integers: 2 * sum(ranks) == (top + bottom) * (tied + 1).
      if (2 * o.random.weighted_rank_sum() != (rank_top(p) + rank_bottom(p)) * o.random.denominator)
        ++rep.midpoint_violations;

      const QueryResult& r = er.queries[qi];
      if (!(r.profile == p) || r.rank_top != rank_top(p) || r.rank_bottom != rank_bottom(p))
        ++rep.evaluate_mismatches;
      for (std::uint64_t rr : r.rank_random) {
        if (!o.random.contains(rr)) ++rep.random_support_violations;
      }
    }
  }
  return rep;
}

}  // namespace kgeval
