#pragma once

// Tie-aware rank assignment and metric aggregation.
//
// A query's rank under every protocol follows from three counts: negatives
// scoring strictly higher than the evaluated triple, negatives scoring
// exactly the same, and the candidate-set size. Placing the true triple
// first among its ties (TOP), last (BOTTOM) or uniformly at random (RANDOM)
// is then arithmetic on those counts, with no sort and no dependence on any
// sort's tie order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kgeval/dataset.hpp"
#include "kgeval/error.hpp"
#include "kgeval/rng.hpp"
#include "kgeval/scoring.hpp"

namespace kgeval {

struct TieProfile {
  std::uint64_t strictly_better = 0;
  std::uint64_t tied = 0;
  std::uint64_t total_candidates = 0;  // includes the evaluated triple

  friend bool operator==(const TieProfile&, const TieProfile&) = default;
};

enum class Protocol : std::uint8_t { kTop, kBottom, kRandom };

inline const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::kTop: return "top";
    case Protocol::kBottom: return "bottom";
    default: return "random";
  }
}

inline Protocol parse_protocol(std::string_view s) {
  if (s == "top") return Protocol::kTop;
  if (s == "bottom") return Protocol::kBottom;
  if (s == "random") return Protocol::kRandom;
  throw Error("unknown protocol '" + std::string(s) + "'");
}

// Counts negatives relative to scores[evaluated]. With epsilon = 0 (the
// default) ties are exact floating-point equality. A positive epsilon treats
// |s - s*| <= epsilon as a tie; that mode is for diagnostics only.
inline TieProfile tie_profile(std::span<const double> scores, std::size_t evaluated,
                              double epsilon = 0.0) {
  if (evaluated >= scores.size()) throw Error("tie_profile: evaluated index out of range");
  const double target = scores[evaluated];
  if (std::isnan(target)) throw NumericError("tie_profile: NaN score for evaluated triple");
  TieProfile p;
  p.total_candidates = scores.size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == evaluated) continue;
    const double s = scores[i];
    if (std::isnan(s)) throw NumericError("tie_profile: NaN score at candidate " + std::to_string(i));
    if (epsilon == 0.0) {
      p.strictly_better += s > target;
      p.tied += s == target;
    } else {
      p.strictly_better += s > target + epsilon;
      p.tied += std::abs(s - target) <= epsilon;
    }
  }
  return p;
}

inline std::uint64_t rank_top(const TieProfile& p) { return p.strictly_better + 1; }

inline std::uint64_t rank_bottom(const TieProfile& p) { return p.strictly_better + p.tied + 1; }

// Uniform over the tied + 1 possible insertion points.
template <typename Generator>
std::uint64_t rank_random(const TieProfile& p, Generator& rng) {
  if (p.tied == 0) return p.strictly_better + 1;
  return p.strictly_better + 1 + rng.below(p.tied + 1);
}

// Per-query stream keyed by (seed, split, query index, side), independent of
// evaluation order.
inline CounterRng query_rng(std::uint64_t seed, Split split, std::uint64_t index, Side side) {
  return CounterRng(mix_key({seed, static_cast<std::uint64_t>(split), index,
                             static_cast<std::uint64_t>(side)}));
}

inline std::uint64_t rank_for(Protocol protocol, const TieProfile& p, CounterRng* rng) {
  switch (protocol) {
    case Protocol::kTop: return rank_top(p);
    case Protocol::kBottom: return rank_bottom(p);
    default: return rank_random(p, *rng);
  }
}

// ---------------------------------------------------------------------------

struct Metrics {
  double mrr = 0.0;
  double mr = 0.0;
  std::map<int, double> hits;
  std::size_t count = 0;

  double hits_at(int k) const {
    auto it = hits.find(k);
    if (it == hits.end()) throw Error("hits@" + std::to_string(k) + " not computed");
    return it->second;
  }

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

inline Metrics aggregate(std::span<const std::uint64_t> ranks, std::span<const int> ks) {
  if (ranks.empty()) throw Error("aggregate: empty rank list");
  Metrics m;
  m.count = ranks.size();
  double rr = 0.0, r = 0.0;
  std::vector<std::size_t> hit_counts(ks.size(), 0);
  for (std::uint64_t rank : ranks) {
    rr += 1.0 / static_cast<double>(rank);
    r += static_cast<double>(rank);
    for (std::size_t i = 0; i < ks.size(); ++i) hit_counts[i] += rank <= static_cast<std::uint64_t>(ks[i]);
  }
  const double n = static_cast<double>(ranks.size());
  m.mrr = rr / n;
  m.mr = r / n;
  for (std::size_t i = 0; i < ks.size(); ++i) m.hits[ks[i]] = static_cast<double>(hit_counts[i]) / n;
  return m;
}

// Mean and population standard deviation of each metric over seeds.
struct MetricSpread {
  Metrics mean;
  Metrics stddev;
};

inline MetricSpread spread(std::span<const Metrics> runs) {
  if (runs.empty()) throw Error("spread: no runs");
  MetricSpread out;
  const double n = static_cast<double>(runs.size());
  auto stat = [&](auto get, double& mean, double& sd) {
    double s = 0.0;
    for (const auto& m : runs) s += get(m);
    mean = s / n;
    double v = 0.0;
    for (const auto& m : runs) v += (get(m) - mean) * (get(m) - mean);
    sd = std::sqrt(v / n);
  };
  stat([](const Metrics& m) { return m.mrr; }, out.mean.mrr, out.stddev.mrr);
  stat([](const Metrics& m) { return m.mr; }, out.mean.mr, out.stddev.mr);
  for (const auto& [k, _] : runs.front().hits) {
    stat([k = k](const Metrics& m) { return m.hits.at(k); }, out.mean.hits[k], out.stddev.hits[k]);
  }
  out.mean.count = out.stddev.count = runs.front().count;
  return out;
}

// ---------------------------------------------------------------------------

struct EvalConfig {
  std::vector<Protocol> protocols{Protocol::kTop, Protocol::kBottom, Protocol::kRandom};
  bool head_side = true;
  bool tail_side = true;
  std::vector<int> ks{1, 3, 10};
  std::uint64_t seed = 0;
  std::size_t seeds = 5;  // RANDOM repetitions: seed, seed+1, ...
  bool filtered = true;
  Split split = Split::kTest;
  double tie_epsilon = 0.0;
  std::size_t threads = 0;  // 0: KG_EVAL_THREADS or hardware concurrency
  bool keep_per_query = false;
};

inline std::size_t resolve_thread_count(std::size_t requested) {
  std::size_t n = requested;
  if (n == 0) {
    n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("KG_EVAL_THREADS")) {
      const long cap = std::strtol(env, nullptr, 10);
      if (cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
    }
  }
  return std::max<std::size_t>(1, n);
}

// Runs fn(i) for i in [0, n) over `threads` workers with a static
// contiguous partition. fn must only write to slot i of shared outputs.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::min(threads, std::max<std::size_t>(n, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct QueryResult {
  std::uint64_t triple_index = 0;
  Side side = Side::kTail;
  TieProfile profile;
  std::uint64_t rank_top = 0;
  std::uint64_t rank_bottom = 0;
  std::vector<std::uint64_t> rank_random;  // one per seed
};

struct TieSummary {
  std::size_t queries = 0;
  double mean_tied = 0.0;
  std::uint64_t max_tied = 0;
  double fraction_with_ties = 0.0;
  double mean_candidates = 0.0;
};

struct ProtocolResult {
  Protocol protocol = Protocol::kTop;
  std::vector<Metrics> per_seed;  // single entry for TOP and BOTTOM
  MetricSpread summary;
};

struct EvalReport {
  EvalConfig config;
  std::string model;
  std::vector<ProtocolResult> protocols;
  TieSummary ties;
  std::vector<QueryResult> queries;  // always filled; serialized on request

  const ProtocolResult& result(Protocol p) const {
    for (const auto& r : protocols) {
      if (r.protocol == p) return r;
    }
    throw Error(std::string("report has no ") + to_string(p) + " result");
  }
  bool has(Protocol p) const {
    return std::any_of(protocols.begin(), protocols.end(),
                       [p](const ProtocolResult& r) { return r.protocol == p; });
  }
};

inline std::uint64_t random_seed(const EvalConfig& cfg, std::size_t k) { return cfg.seed + k; }

// Profiles one query: filtered candidates, batch scoring, tie counting.
inline TieProfile profile_query(const Dataset& ds, const Scorer& scorer, const Query& q,
                                bool filtered = true, double tie_epsilon = 0.0) {
  const CandidateSet cands = filtered_candidates(ds, q, filtered);
  const auto scores = scorer.score_batch(ScoreQuery::of(q), cands.ids);
  return tie_profile(scores, cands.evaluated_pos, tie_epsilon);
}

inline TieSummary summarize_ties(std::span<const QueryResult> results) {
  TieSummary s;
  s.queries = results.size();
  if (results.empty()) return s;
  std::size_t with = 0;
  double tied = 0.0, cands = 0.0;
  for (const auto& r : results) {
    tied += static_cast<double>(r.profile.tied);
    cands += static_cast<double>(r.profile.total_candidates);
    s.max_tied = std::max(s.max_tied, r.profile.tied);
    with += r.profile.tied > 0;
  }
  const double n = static_cast<double>(results.size());
  s.mean_tied = tied / n;
  s.mean_candidates = cands / n;
  s.fraction_with_ties = static_cast<double>(with) / n;
  return s;
}

inline EvalReport evaluate(const Dataset& ds, const Scorer& scorer, const EvalConfig& cfg) {
  if (!scorer.covers(ds)) throw UnknownIdError("scorer does not cover the dataset vocabulary");
  if (cfg.protocols.empty()) throw Error("evaluate: no protocols requested");
  const auto& triples = ds.split(cfg.split);
  std::vector<std::size_t> triple_of;
  std::vector<Query> queries;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (cfg.head_side) {
      queries.push_back({triples[i], Side::kHead});
      triple_of.push_back(i);
    }
    if (cfg.tail_side) {
      queries.push_back({triples[i], Side::kTail});
      triple_of.push_back(i);
    }
  }
  if (queries.empty()) throw Error("evaluate: no queries (empty split or no sides selected)");

  const bool want_random =
      std::find(cfg.protocols.begin(), cfg.protocols.end(), Protocol::kRandom) != cfg.protocols.end();
  const std::size_t seeds = want_random ? std::max<std::size_t>(cfg.seeds, 1) : 0;

  EvalReport report;
  report.config = cfg;
  report.model = std::string(scorer.kind());
  report.queries.resize(queries.size());

  parallel_for(queries.size(), resolve_thread_count(cfg.threads), [&](std::size_t qi) {
    const Query& q = queries[qi];
    QueryResult& r = report.queries[qi];
    r.triple_index = triple_of[qi];
    r.side = q.side;
    try {
      r.profile = profile_query(ds, scorer, q, cfg.filtered, cfg.tie_epsilon);
    } catch (const NumericError& e) {
      throw NumericError("query " + std::to_string(qi) + " (triple " +
                         std::to_string(r.triple_index) + ", " + to_string(q.side) +
                         " side): " + e.what());
    }
    r.rank_top = rank_top(r.profile);
    r.rank_bottom = rank_bottom(r.profile);
    r.rank_random.resize(seeds);
    for (std::size_t k = 0; k < seeds; ++k) {
      auto rng = query_rng(random_seed(cfg, k), cfg.split, r.triple_index, q.side);
      r.rank_random[k] = rank_random(r.profile, rng);
    }
  });

  std::vector<std::uint64_t> ranks(queries.size());
  for (Protocol p : cfg.protocols) {
    ProtocolResult pr;
    pr.protocol = p;
    const std::size_t runs = p == Protocol::kRandom ? seeds : 1;
    for (std::size_t k = 0; k < runs; ++k) {
      for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto& r = report.queries[i];
        ranks[i] = p == Protocol::kTop ? r.rank_top
                   : p == Protocol::kBottom ? r.rank_bottom
                                            : r.rank_random[k];
      }
      pr.per_seed.push_back(aggregate(ranks, cfg.ks));
    }
    pr.summary = spread(pr.per_seed);
    report.protocols.push_back(std::move(pr));
  }
  report.ties = summarize_ties(report.queries);
  return report;
}

// ---------------------------------------------------------------------------
// EvalReport JSON.

inline constexpr int kReportSchemaVersion = 1;

inline nlohmann::json metrics_to_json(const Metrics& m) {
  nlohmann::json hits = nlohmann::json::object();
  for (const auto& [k, v] : m.hits) hits[std::to_string(k)] = v;
  return {{"mrr", m.mrr}, {"mr", m.mr}, {"hits", hits}, {"count", m.count}};
}

inline Metrics metrics_from_json(const nlohmann::json& j) {
  Metrics m;
  m.mrr = j.at("mrr").get<double>();
  m.mr = j.at("mr").get<double>();
  for (const auto& [k, v] : j.at("hits").items()) m.hits[std::stoi(k)] = v.get<double>();
  m.count = j.at("count").get<std::size_t>();
  return m;
}

inline const char* to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    default: return "test";
  }
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "valid") return Split::kValid;
  if (s == "test") return Split::kTest;
  throw FormatError("unknown split '" + std::string(s) + "'");
}

inline std::string sides_string(const EvalConfig& c) {
  return c.head_side && c.tail_side ? "both" : c.head_side ? "head" : "tail";
}

inline nlohmann::json config_to_json(const EvalConfig& c) {
  auto protocols = nlohmann::json::array();
  for (Protocol p : c.protocols) protocols.push_back(to_string(p));
  return {{"protocols", protocols}, {"sides", sides_string(c)},   {"hits", c.ks},
          {"seed", c.seed},         {"seeds", c.seeds},           {"filtered", c.filtered},
          {"split", to_string(c.split)}, {"tie_epsilon", c.tie_epsilon}};
}

inline EvalConfig config_from_json(const nlohmann::json& j) {
  EvalConfig c;
  c.protocols.clear();
  for (const auto& p : j.at("protocols")) c.protocols.push_back(parse_protocol(p.get<std::string>()));
  const auto sides = j.at("sides").get<std::string>();
  c.head_side = sides != "tail";
  c.tail_side = sides != "head";
  c.ks = j.at("hits").get<std::vector<int>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.seeds = j.at("seeds").get<std::size_t>();
  c.filtered = j.at("filtered").get<bool>();
  c.split = parse_split(j.at("split").get<std::string>());
  c.tie_epsilon = j.at("tie_epsilon").get<double>();
  return c;
}

// Thread count is deliberately absent from the output: reports from any
// worker count are byte-identical.
inline nlohmann::json report_to_json(const EvalReport& r, bool per_query = false) {
  nlohmann::json j;
  j["format"] = "kgeval-report";
  j["schema_version"] = kReportSchemaVersion;
  j["model"] = r.model;
  j["config"] = config_to_json(r.config);
  auto protocols = nlohmann::json::object();
  for (const auto& pr : r.protocols) {
    auto per_seed = nlohmann::json::array();
    for (const auto& m : pr.per_seed) per_seed.push_back(metrics_to_json(m));
    nlohmann::json entry = {{"mean", metrics_to_json(pr.summary.mean)},
                            {"std", metrics_to_json(pr.summary.stddev)}};
    if (pr.protocol == Protocol::kRandom) {
      auto seeds = nlohmann::json::array();
      for (std::size_t k = 0; k < pr.per_seed.size(); ++k) seeds.push_back(random_seed(r.config, k));
      entry["seeds"] = seeds;
      entry["per_seed"] = per_seed;
    }
    protocols[to_string(pr.protocol)] = entry;
  }
  j["protocols"] = protocols;
  j["ties"] = {{"queries", r.ties.queries},
               {"mean_tied", r.ties.mean_tied},
               {"max_tied", r.ties.max_tied},
               {"fraction_with_ties", r.ties.fraction_with_ties},
               {"mean_candidates", r.ties.mean_candidates}};
  if (per_query) {
    auto qs = nlohmann::json::array();
    for (const auto& q : r.queries) {
      qs.push_back({{"triple", q.triple_index},
                    {"side", to_string(q.side)},
                    {"strictly_better", q.profile.strictly_better},
                    {"tied", q.profile.tied},
                    {"total", q.profile.total_candidates},
                    {"top", q.rank_top},
                    {"bottom", q.rank_bottom},
                    {"random", q.rank_random}});
    }
    j["queries"] = qs;
  }
  return j;
}

inline std::string report_to_string(const EvalReport& r, bool per_query = false) {
  return report_to_json(r, per_query).dump(2) + "\n";
}

// Reads back the aggregate part of a report (per-query rows when present).
inline EvalReport report_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "kgeval-report") throw FormatError("not an evaluation report");
  if (j.value("schema_version", -1) != kReportSchemaVersion)
    throw FormatError("report: unsupported schema_version");
  EvalReport r;
  r.model = j.at("model").get<std::string>();
  r.config = config_from_json(j.at("config"));
  for (Protocol p : r.config.protocols) {
    const auto& e = j.at("protocols").at(to_string(p));
    ProtocolResult pr;
    pr.protocol = p;
    pr.summary.mean = metrics_from_json(e.at("mean"));
    pr.summary.stddev = metrics_from_json(e.at("std"));
    if (e.contains("per_seed")) {
      for (const auto& m : e.at("per_seed")) pr.per_seed.push_back(metrics_from_json(m));
    } else {
      pr.per_seed.push_back(pr.summary.mean);
    }
    r.protocols.push_back(std::move(pr));
  }
  const auto& t = j.at("ties");
  r.ties.queries = t.at("queries").get<std::size_t>();
  r.ties.mean_tied = t.at("mean_tied").get<double>();
  r.ties.max_tied = t.at("max_tied").get<std::uint64_t>();
  r.ties.fraction_with_ties = t.at("fraction_with_ties").get<double>();
  r.ties.mean_candidates = t.at("mean_candidates").get<double>();
  if (j.contains("queries")) {
    for (const auto& q : j.at("queries")) {
      QueryResult qr;
      qr.triple_index = q.at("triple").get<std::uint64_t>();
      qr.side = q.at("side").get<std::string>() == "head" ? Side::kHead : Side::kTail;
      qr.profile = {q.at("strictly_better").get<std::uint64_t>(), q.at("tied").get<std::uint64_t>(),
                    q.at("total").get<std::uint64_t>()};
      qr.rank_top = q.at("top").get<std::uint64_t>();
      qr.rank_bottom = q.at("bottom").get<std::uint64_t>();
      qr.rank_random = q.at("random").get<std::vector<std::uint64_t>>();
      r.queries.push_back(std::move(qr));
    }
  }
  return r;
}

inline EvalReport report_from_string(std::string_view text) {
  try {
    return report_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

}  // namespace kgeval
