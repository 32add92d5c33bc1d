#pragma once

// Tie-frequency and dead-ReLU statistics, emitted as plot data.

#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgeval/dataset.hpp"
#include "kgeval/error.hpp"
#include "kgeval/protocols.hpp"
#include "kgeval/scoring.hpp"

namespace kgeval {

struct TieHistogram {
  std::map<std::uint64_t, std::size_t> buckets;  // tied-count -> queries
  std::vector<std::uint64_t> tied;               // per query, evaluate() order
  std::vector<std::uint64_t> candidates;         // per query candidate-set size
  double mean = 0.0;
  std::uint64_t max = 0;
  double fraction_with_ties = 0.0;

  std::size_t query_count() const { return tied.size(); }
};

inline TieHistogram tie_histogram(std::span<const std::uint64_t> tied,
                                  std::span<const std::uint64_t> candidates = {}) {
  TieHistogram h;
  h.tied.assign(tied.begin(), tied.end());
  h.candidates.assign(candidates.begin(), candidates.end());
  double sum = 0.0;
  std::size_t with = 0;
  for (std::uint64_t t : tied) {
    ++h.buckets[t];
    sum += static_cast<double>(t);
    h.max = std::max(h.max, t);
    with += t > 0;
  }
  if (!tied.empty()) {
    h.mean = sum / static_cast<double>(tied.size());
    h.fraction_with_ties = static_cast<double>(with) / static_cast<double>(tied.size());
  }
  return h;
}

struct TieStatsConfig {
  bool head_side = true;
  bool tail_side = true;
  bool include_valid = false;
  bool filtered = true;
  std::size_t threads = 0;
};

// Tied-counts over the test split (optionally preceded by validation), in
// the same query order as evaluate().
inline TieHistogram tie_stats(const Dataset& ds, const Scorer& scorer,
                              const TieStatsConfig& cfg = {}) {
  if (!scorer.covers(ds)) throw UnknownIdError("scorer does not cover the dataset vocabulary");
  std::vector<Query> queries;
  if (cfg.include_valid) {
    auto v = make_queries(ds.valid, cfg.head_side, cfg.tail_side);
    queries.insert(queries.end(), v.begin(), v.end());
  }
  auto t = make_queries(ds.test, cfg.head_side, cfg.tail_side);
  queries.insert(queries.end(), t.begin(), t.end());
  std::vector<std::uint64_t> tied(queries.size()), cands(queries.size());
  parallel_for(queries.size(), resolve_thread_count(cfg.threads), [&](std::size_t i) {
    const TieProfile p = profile_query(ds, scorer, queries[i], cfg.filtered);
    tied[i] = p.tied;
    cands[i] = p.total_candidates;
  });
  return tie_histogram(tied, cands);
}

// Histogram of per-triple zero ratios in 20 buckets of width 0.05; a ratio
// of exactly 1 falls in the last bucket [0.95, 1.0].
struct ZeroRatioHistogram {
  static constexpr std::size_t kBuckets = 20;
  static constexpr double kWidth = 0.05;

  std::vector<double> frequency = std::vector<double>(kBuckets, 0.0);
  double mean = 0.0;
  std::size_t samples = 0;

  static std::size_t bucket_of(double ratio) {
    // Small bias keeps exact multiples of 0.05 (0.75 = 12/16) in the bucket
    // they start rather than the one below.
    const auto b = static_cast<std::size_t>(std::floor(ratio * kBuckets + 1e-9));
    return std::min(b, kBuckets - 1);
  }
};

inline ZeroRatioHistogram zero_ratio_histogram(std::span<const double> ratios) {
  ZeroRatioHistogram h;
  h.samples = ratios.size();
  if (ratios.empty()) return h;
  double sum = 0.0;
  for (double r : ratios) {
    h.frequency[ZeroRatioHistogram::bucket_of(r)] += 1.0;
    sum += r;
  }
  const double n = static_cast<double>(ratios.size());
  for (double& f : h.frequency) f /= n;
  h.mean = sum / n;
  return h;
}

inline const ActivationProbe& require_probe(const Scorer& scorer) {
  const ActivationProbe* p = scorer.probe();
  if (!p) throw CapabilityError(std::string("scorer '") + std::string(scorer.kind()) +
                                "' has no activation probe");
  return *p;
}

inline ZeroRatioHistogram relu_zero_stats(const Scorer& scorer, std::span<const Triple> triples) {
  const ActivationProbe& probe = require_probe(scorer);
  std::vector<double> ratios;
  ratios.reserve(triples.size());
  for (const Triple& t : triples) ratios.push_back(probe.score_probed(t).zero_ratio);
  return zero_ratio_histogram(ratios);
}

// Zero ratios for the valid (test) triples and, separately, for their
// filtered negatives on the chosen sides.
struct ReluStats {
  ZeroRatioHistogram valid;
  ZeroRatioHistogram negatives;
};

inline ReluStats relu_zero_stats(const Dataset& ds, const Scorer& scorer, bool head_side = true,
                                 bool tail_side = true) {
  const ActivationProbe& probe = require_probe(scorer);
  ReluStats out;
  out.valid = relu_zero_stats(scorer, ds.test);
  std::vector<double> neg;
  for (const Query& q : make_queries(ds.test, head_side, tail_side)) {
    const CandidateSet c = filtered_candidates(ds, q);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i == c.evaluated_pos) continue;
      neg.push_back(probe.score_probed(q.with_candidate(c.ids[i])).zero_ratio);
    }
  }
  out.negatives = zero_ratio_histogram(neg);
  return out;
}

// ---------------------------------------------------------------------------
// Plot data.

inline std::string tie_histogram_csv(const TieHistogram& h) {
  std::ostringstream out;
  out << "bucket,count\n";
  for (const auto& [bucket, count] : h.buckets) out << bucket << ',' << count << '\n';
  return out.str();
}

inline std::string zero_ratio_csv(const ZeroRatioHistogram& h) {
  std::ostringstream out;
  out << "bucket,frequency\n";
  char buf[64];
  for (std::size_t i = 0; i < ZeroRatioHistogram::kBuckets; ++i) {
    std::snprintf(buf, sizeof buf, "%.2f,%.6f\n", static_cast<double>(i) * ZeroRatioHistogram::kWidth,
                  h.frequency[i]);
    out << buf;
  }
  return out.str();
}

inline nlohmann::json tie_histogram_json(const TieHistogram& h) {
  auto buckets = nlohmann::json::array();
  for (const auto& [b, c] : h.buckets) buckets.push_back({{"tied", b}, {"queries", c}});
  return {{"queries", h.query_count()},
          {"mean_tied", h.mean},
          {"max_tied", h.max},
          {"fraction_with_ties", h.fraction_with_ties},
          {"buckets", buckets}};
}

inline nlohmann::json zero_ratio_json(const ZeroRatioHistogram& h) {
  return {{"samples", h.samples},
          {"mean", h.mean},
          {"bucket_width", ZeroRatioHistogram::kWidth},
          {"frequency", h.frequency}};
}

// One query's raw candidate scores, for plotting a sorted score curve.
inline std::string score_dump_csv(const Dataset& ds, const Scorer& scorer, const Query& q) {
  const CandidateSet c = filtered_candidates(ds, q);
  const auto scores = scorer.score_batch(ScoreQuery::of(q), c.ids);
  std::ostringstream out;
  out.precision(17);
  out << "entity,score,evaluated\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    out << ds.entities.name(c.ids[i]) << ',' << scores[i] << ',' << (i == c.evaluated_pos) << '\n';
  }
  return out.str();
}

}  // namespace kgeval
