#pragma once

// Scorer interface and the built-in scorers. Scores follow one convention
// everywhere: strictly higher means more plausible.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgeval/dataset.hpp"
#include "kgeval/error.hpp"
#include "kgeval/rng.hpp"

namespace kgeval {

// The fixed part of a query as seen by a scorer.
struct ScoreQuery {
  EntityId anchor = 0;
  RelationId relation = 0;
  Side side = Side::kTail;

  static ScoreQuery of(const Query& q) { return {q.anchor(), q.triple.relation, q.side}; }

  Triple with_candidate(EntityId candidate) const {
    return side == Side::kTail ? Triple{anchor, relation, candidate}
                               : Triple{candidate, relation, anchor};
  }
};

struct ProbedScore {
  double score = 0.0;
  double zero_ratio = 0.0;
};

// Fraction of exactly-zero entries in a post-ReLU activation vector.
inline double zero_ratio(std::span<const double> activations) {
  if (activations.empty()) return 0.0;
  const auto zeros = std::count(activations.begin(), activations.end(), 0.0);
  return static_cast<double>(zeros) / static_cast<double>(activations.size());
}

// Optional capability of scorers with ReLU layers. The ratio is returned with
// the score rather than stored, so probing is safe from several threads.
class ActivationProbe {
 public:
  virtual ~ActivationProbe() = default;
  virtual ProbedScore score_probed(const Triple& t) const = 0;
};

class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual std::string_view kind() const = 0;
  virtual std::size_t entity_count() const = 0;
  virtual std::size_t relation_count() const = 0;

  // Writes one score per candidate into `out` (same length as candidates).
  // Must be pure: identical inputs give bitwise-identical outputs.
  virtual void score_batch(const ScoreQuery& query, std::span<const EntityId> candidates,
                           std::span<double> out) const = 0;

  std::vector<double> score_batch(const ScoreQuery& query,
                                  std::span<const EntityId> candidates) const {
    std::vector<double> out(candidates.size());
    score_batch(query, candidates, out);
    return out;
  }

  double score(const Triple& t) const {
    const EntityId c = t.tail;
    double s = 0.0;
    score_batch({t.head, t.relation, Side::kTail}, std::span<const EntityId>(&c, 1),
                std::span<double>(&s, 1));
    return s;
  }

  virtual const ActivationProbe* probe() const { return nullptr; }

  virtual nlohmann::json to_json() const = 0;

  bool covers(const Dataset& ds) const {
    return entity_count() >= ds.entity_count() && relation_count() >= ds.relation_count();
  }
};

// ---------------------------------------------------------------------------

// Always returns the same value. The degenerate model a TOP evaluation
// rewards with a perfect score.
class ConstantScorer final : public Scorer {
 public:
  ConstantScorer(double value, std::size_t entities, std::size_t relations)
      : value_(value), entities_(entities), relations_(relations) {}

  std::string_view kind() const override { return "constant"; }
  std::size_t entity_count() const override { return entities_; }
  std::size_t relation_count() const override { return relations_; }
  double value() const { return value_; }

  using Scorer::score_batch;
  void score_batch(const ScoreQuery&, std::span<const EntityId>,
                   std::span<double> out) const override {
    std::fill(out.begin(), out.end(), value_);
  }

  nlohmann::json to_json() const override;

 private:
  double value_;
  std::size_t entities_;
  std::size_t relations_;
};

// ---------------------------------------------------------------------------
// Parameter storage shared by the trainable scorers.

// Gradient accumulator over a flat parameter vector. Only touched entries
// are visited on apply/clear, so per-batch cost is proportional to the
// parameters actually involved.
class SparseGradient {
 public:
  explicit SparseGradient(std::size_t size = 0) : values_(size, 0.0), seen_(size, 0) {}

  void add(std::size_t index, double value) {
    if (!seen_[index]) {
      seen_[index] = 1;
      touched_.push_back(index);
    }
    values_[index] += value;
  }

  double operator[](std::size_t index) const { return values_[index]; }
  std::span<const std::size_t> touched() const { return touched_; }
  std::size_t size() const { return values_.size(); }

  void clear() {
    for (std::size_t i : touched_) {
      values_[i] = 0.0;
      seen_[i] = 0;
    }
    touched_.clear();
  }

  // Dense copy, for tests.
  std::vector<double> dense() const { return values_; }

 private:
  std::vector<double> values_;
  std::vector<std::uint8_t> seen_;
  std::vector<std::size_t> touched_;
};

struct EmbeddingShape {
  std::size_t entities = 0;
  std::size_t relations = 0;
  std::size_t dim = 0;

  std::size_t size() const { return (entities + relations) * dim; }
  std::size_t entity_offset(EntityId e) const { return static_cast<std::size_t>(e) * dim; }
  std::size_t relation_offset(RelationId r) const {
    return (entities + static_cast<std::size_t>(r)) * dim;
  }
};

// View of entity and relation embedding rows laid out at the front of a
// flat parameter vector: all entity rows, then all relation rows.
template <typename T>
class BasicEmbeddingTable {
 public:
  BasicEmbeddingTable(EmbeddingShape shape, std::span<T> storage)
      : shape_(shape), storage_(storage.first(shape.size())) {}

  std::span<T> entity(EntityId e) const {
    return storage_.subspan(shape_.entity_offset(e), shape_.dim);
  }
  std::span<T> relation(RelationId r) const {
    return storage_.subspan(shape_.relation_offset(r), shape_.dim);
  }
  std::size_t dim() const { return shape_.dim; }
  const EmbeddingShape& shape() const { return shape_; }
  std::span<T> data() const { return storage_; }

 private:
  EmbeddingShape shape_;
  std::span<T> storage_;
};

using EmbeddingTable = BasicEmbeddingTable<double>;
using ConstEmbeddingTable = BasicEmbeddingTable<const double>;

inline bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

// Uniform in [-6/sqrt(d), 6/sqrt(d)].
inline void init_embeddings(EmbeddingTable table, Rng& rng) {
  const double bound = 6.0 / std::sqrt(static_cast<double>(table.dim()));
  for (double& v : table.data()) v = rng.uniform(-bound, bound);
}

// A scorer whose parameters live in one flat vector and whose score has an
// analytic gradient.
class DifferentiableScorer : public Scorer {
 public:
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  // grad += coeff * d score(t) / d parameters
  virtual void accumulate_gradient(const Triple& t, double coeff,
                                   SparseGradient& grad) const = 0;

  // Hook run after an SGD step with the indices that changed.
  virtual void after_update(std::span<const std::size_t> /*touched*/) {}

  std::uint64_t seed() const { return seed_; }
  const EmbeddingShape& shape() const { return shape_; }
  std::size_t entity_count() const override { return shape_.entities; }
  std::size_t relation_count() const override { return shape_.relations; }

  EmbeddingTable embeddings() { return {shape_, std::span<double>(params_)}; }
  ConstEmbeddingTable embeddings() const { return {shape_, std::span<const double>(params_)}; }

 protected:
  DifferentiableScorer(EmbeddingShape shape, std::size_t extra, std::uint64_t seed)
      : shape_(shape), seed_(seed), params_(shape.size() + extra, 0.0) {}

  EmbeddingShape shape_;
  std::uint64_t seed_;
  std::vector<double> params_;
};

// ---------------------------------------------------------------------------

enum class Norm : std::uint8_t { kL1 = 1, kL2 = 2 };

// score = -|| e_h + e_r - e_t ||
class TransEScorer final : public DifferentiableScorer {
 public:
  struct Options {
    Norm norm = Norm::kL2;
    bool unit_norm_entities = true;
  };

  TransEScorer(std::size_t entities, std::size_t relations, std::size_t dim,
               std::uint64_t seed, Options opts)
      : DifferentiableScorer({entities, relations, dim}, 0, seed), opts_(opts) {
    Rng rng(seed);
    init_embeddings(embeddings(), rng);
    if (opts_.unit_norm_entities) {
      for (EntityId e = 0; e < entities; ++e) normalize_entity(e);
    }
  }
  TransEScorer(std::size_t entities, std::size_t relations, std::size_t dim,
               std::uint64_t seed)
      : TransEScorer(entities, relations, dim, seed, Options{}) {}

  std::string_view kind() const override { return "transe"; }
  const Options& options() const { return opts_; }

  using Scorer::score_batch;
  void score_batch(const ScoreQuery& q, std::span<const EntityId> candidates,
                   std::span<double> out) const override {
    const auto emb = embeddings();
    const std::size_t d = emb.dim();
    const auto anchor = emb.entity(q.anchor);
    const auto rel = emb.relation(q.relation);
    // x = (h + r) - t, evaluated in the same order for both sides so a
    // triple scores bitwise-identically whichever side is enumerated.
    std::vector<double> base(d);
    if (q.side == Side::kTail) {
      for (std::size_t i = 0; i < d; ++i) base[i] = anchor[i] + rel[i];
    }
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const auto cand = emb.entity(candidates[c]);
      double acc = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double x =
            q.side == Side::kTail ? base[i] - cand[i] : (cand[i] + rel[i]) - anchor[i];
        acc += opts_.norm == Norm::kL2 ? x * x : std::abs(x);
      }
      out[c] = opts_.norm == Norm::kL2 ? -std::sqrt(acc) : -acc;
    }
  }

  void accumulate_gradient(const Triple& t, double coeff, SparseGradient& grad) const override {
    const auto emb = embeddings();
    const std::size_t d = emb.dim();
    const auto h = emb.entity(t.head), r = emb.relation(t.relation), tl = emb.entity(t.tail);
    std::vector<double> x(d);
    double norm = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = h[i] + r[i] - tl[i];
      norm += x[i] * x[i];
    }
    norm = std::sqrt(norm);
    const std::size_t ho = shape_.entity_offset(t.head), ro = shape_.relation_offset(t.relation),
                      to = shape_.entity_offset(t.tail);
    for (std::size_t i = 0; i < d; ++i) {
      // d score / d x_i
      double g;
      if (opts_.norm == Norm::kL2) {
        g = norm > 0.0 ? -x[i] / norm : 0.0;
      } else {
        g = x[i] > 0.0 ? -1.0 : (x[i] < 0.0 ? 1.0 : 0.0);
      }
      grad.add(ho + i, coeff * g);
      grad.add(ro + i, coeff * g);
      grad.add(to + i, -coeff * g);
    }
  }

  void after_update(std::span<const std::size_t> touched) override {
    if (!opts_.unit_norm_entities) return;
    const std::size_t entity_block = shape_.entities * shape_.dim;
    std::vector<EntityId> rows;
    for (std::size_t idx : touched) {
      if (idx < entity_block) rows.push_back(static_cast<EntityId>(idx / shape_.dim));
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    for (EntityId e : rows) normalize_entity(e);
  }

  nlohmann::json to_json() const override;

 private:
  void normalize_entity(EntityId e) {
    auto row = embeddings().entity(e);
    double n = 0.0;
    for (double v : row) n += v * v;
    n = std::sqrt(n);
    if (n > 0.0) {
      for (double& v : row) v /= n;
    }
  }

  Options opts_;
};

// ---------------------------------------------------------------------------

// score = sum_i e_h[i] * e_r[i] * e_t[i]
class DistMultScorer final : public DifferentiableScorer {
 public:
  DistMultScorer(std::size_t entities, std::size_t relations, std::size_t dim,
                 std::uint64_t seed)
      : DifferentiableScorer({entities, relations, dim}, 0, seed) {
    Rng rng(seed);
    init_embeddings(embeddings(), rng);
  }

  std::string_view kind() const override { return "distmult"; }

  using Scorer::score_batch;
  void score_batch(const ScoreQuery& q, std::span<const EntityId> candidates,
                   std::span<double> out) const override {
    const auto emb = embeddings();
    const std::size_t d = emb.dim();
    const auto anchor = emb.entity(q.anchor);
    const auto rel = emb.relation(q.relation);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const auto cand = emb.entity(candidates[c]);
      const auto h = q.side == Side::kTail ? anchor : cand;
      const auto t = q.side == Side::kTail ? cand : anchor;
      double acc = 0.0;
      // h*t first so (h, r, t) and (t, r, h) score bitwise alike.
      for (std::size_t i = 0; i < d; ++i) acc += rel[i] * (h[i] * t[i]);
      out[c] = acc;
    }
  }

  void accumulate_gradient(const Triple& t, double coeff, SparseGradient& grad) const override {
    const auto emb = embeddings();
    const std::size_t d = emb.dim();
    const auto h = emb.entity(t.head), r = emb.relation(t.relation), tl = emb.entity(t.tail);
    const std::size_t ho = shape_.entity_offset(t.head), ro = shape_.relation_offset(t.relation),
                      to = shape_.entity_offset(t.tail);
    for (std::size_t i = 0; i < d; ++i) {
      grad.add(ho + i, coeff * r[i] * tl[i]);
      grad.add(ro + i, coeff * h[i] * tl[i]);
      grad.add(to + i, coeff * h[i] * r[i]);
    }
  }

  nlohmann::json to_json() const override;
};

// ---------------------------------------------------------------------------

// Two-layer scorer over concatenated embeddings:
//   z = ReLU(W [e_h; e_r; e_t] + b),  score = w . z + b2.
// With a strongly negative hidden bias most units are dead for most inputs,
// many candidates collapse onto z = 0 and therefore onto the score b2.
class TiedReluScorer final : public DifferentiableScorer, public ActivationProbe {
 public:
  struct Options {
    std::size_t hidden = 16;
    double weight_range = 0.1;         // W ~ U[-range, range]
    double hidden_bias = -0.75;        // initial value of every b[j]
    double output_weight_range = 0.1;  // w ~ U[-range, range]
    double output_bias = 0.0;
  };

  TiedReluScorer(std::size_t entities, std::size_t relations, std::size_t dim,
                 std::uint64_t seed, Options opts)
      : DifferentiableScorer({entities, relations, dim},
                             opts.hidden * 3 * dim + 2 * opts.hidden + 1, seed),
        opts_(opts) {
    Rng rng(seed);
    init_embeddings(embeddings(), rng);
    for (double& v : hidden_weights()) v = rng.uniform(-opts.weight_range, opts.weight_range);
    for (double& v : hidden_bias()) v = opts.hidden_bias;
    for (double& v : output_weights())
      v = rng.uniform(-opts.output_weight_range, opts.output_weight_range);
    output_bias() = opts.output_bias;
  }
  TiedReluScorer(std::size_t entities, std::size_t relations, std::size_t dim,
                 std::uint64_t seed)
      : TiedReluScorer(entities, relations, dim, seed, Options{}) {}

  std::string_view kind() const override { return "tied-relu"; }
  const Options& options() const { return opts_; }
  std::size_t hidden() const { return opts_.hidden; }

  // Parameter blocks after the embeddings.
  std::span<double> hidden_weights() { return block(w_offset(), opts_.hidden * 3 * dim()); }
  std::span<double> hidden_bias() { return block(b_offset(), opts_.hidden); }
  std::span<double> output_weights() { return block(v_offset(), opts_.hidden); }
  double& output_bias() { return params_[b2_offset()]; }
  std::span<const double> hidden_weights() const {
    return cblock(w_offset(), opts_.hidden * 3 * dim());
  }
  std::span<const double> hidden_bias() const { return cblock(b_offset(), opts_.hidden); }
  std::span<const double> output_weights() const { return cblock(v_offset(), opts_.hidden); }
  double output_bias() const { return params_[b2_offset()]; }

  // Hidden pre-activations W [h; r; t] + b for one triple.
  std::vector<double> preactivations(const Triple& t) const {
    std::vector<double> pre(opts_.hidden);
    preactivations(t, pre);
    return pre;
  }

  // Post-ReLU hidden activations for one triple.
  std::vector<double> activations(const Triple& t) const {
    auto z = preactivations(t);
    for (double& v : z) v = v > 0.0 ? v : 0.0;
    return z;
  }

  ProbedScore score_probed(const Triple& t) const override {
    const auto z = activations(t);
    return {readout(z), zero_ratio(z)};
  }

  const ActivationProbe* probe() const override { return this; }

  using Scorer::score_batch;
  void score_batch(const ScoreQuery& q, std::span<const EntityId> candidates,
                   std::span<double> out) const override {
    const std::size_t d = dim(), H = opts_.hidden;
    const auto emb = embeddings();
    const auto W = hidden_weights();
    const auto b = hidden_bias();
    std::vector<double> z(H);
    if (q.side == Side::kHead) {
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        preactivations(q.with_candidate(candidates[c]), z);
        for (double& v : z) v = v > 0.0 ? v : 0.0;
        out[c] = readout(z);
      }
      return;
    }
    // Tail side: the head and relation terms form a shared prefix of the
    // per-unit sum. Accumulation order matches preactivations() exactly.
    const auto head = emb.entity(q.anchor);
    const auto rel = emb.relation(q.relation);
    std::vector<double> prefix(H);
    for (std::size_t j = 0; j < H; ++j) {
      const double* row = W.data() + j * 3 * d;
      double acc = b[j];
      for (std::size_t i = 0; i < d; ++i) acc += row[i] * head[i];
      for (std::size_t i = 0; i < d; ++i) acc += row[d + i] * rel[i];
      prefix[j] = acc;
    }
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const auto cand = emb.entity(candidates[c]);
      for (std::size_t j = 0; j < H; ++j) {
        const double* row = W.data() + j * 3 * d + 2 * d;
        double acc = prefix[j];
        for (std::size_t i = 0; i < d; ++i) acc += row[i] * cand[i];
        z[j] = acc > 0.0 ? acc : 0.0;
      }
      out[c] = readout(z);
    }
  }

  void accumulate_gradient(const Triple& t, double coeff, SparseGradient& grad) const override {
    const std::size_t d = dim(), H = opts_.hidden;
    const auto emb = embeddings();
    const auto W = hidden_weights();
    const auto v = output_weights();
    std::vector<double> pre(H);
    preactivations(t, pre);
    const std::size_t offsets[3] = {shape_.entity_offset(t.head),
                                    shape_.relation_offset(t.relation),
                                    shape_.entity_offset(t.tail)};
    const std::span<const double> parts[3] = {emb.entity(t.head), emb.relation(t.relation),
                                              emb.entity(t.tail)};
    grad.add(b2_offset(), coeff);
    for (std::size_t j = 0; j < H; ++j) {
      const double z = pre[j] > 0.0 ? pre[j] : 0.0;
      grad.add(v_offset() + j, coeff * z);
      if (pre[j] <= 0.0) continue;
      const double delta = coeff * v[j];
      grad.add(b_offset() + j, delta);
      const std::size_t row = j * 3 * d;
      for (std::size_t p = 0; p < 3; ++p) {
        for (std::size_t i = 0; i < d; ++i) {
          grad.add(w_offset() + row + p * d + i, delta * parts[p][i]);
          grad.add(offsets[p] + i, delta * W[row + p * d + i]);
        }
      }
    }
  }

  nlohmann::json to_json() const override;

 private:
  std::size_t dim() const { return shape_.dim; }
  std::size_t w_offset() const { return shape_.size(); }
  std::size_t b_offset() const { return w_offset() + opts_.hidden * 3 * dim(); }
  std::size_t v_offset() const { return b_offset() + opts_.hidden; }
  std::size_t b2_offset() const { return v_offset() + opts_.hidden; }
  std::span<double> block(std::size_t off, std::size_t n) {
    return std::span<double>(params_).subspan(off, n);
  }
  std::span<const double> cblock(std::size_t off, std::size_t n) const {
    return std::span<const double>(params_).subspan(off, n);
  }

  void preactivations(const Triple& t, std::span<double> out) const {
    const std::size_t d = dim();
    const auto emb = embeddings();
    const auto W = hidden_weights();
    const auto b = hidden_bias();
    const std::span<const double> parts[3] = {emb.entity(t.head), emb.relation(t.relation),
                                              emb.entity(t.tail)};
    for (std::size_t j = 0; j < opts_.hidden; ++j) {
      const double* row = W.data() + j * 3 * d;
      double acc = b[j];
      for (std::size_t p = 0; p < 3; ++p) {
        for (std::size_t i = 0; i < d; ++i) acc += row[p * d + i] * parts[p][i];
      }
      out[j] = acc;
    }
  }

  double readout(std::span<const double> z) const {
    const auto v = output_weights();
    double acc = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) acc += v[j] * z[j];
    return acc + output_bias();
  }

  Options opts_;
};

// ---------------------------------------------------------------------------
// Checkpoints: versioned JSON with kind, dimension, seed and every parameter
// array. Doubles are written in shortest round-trip form, so a reloaded
// scorer reproduces scores bitwise.

inline constexpr int kCheckpointFormatVersion = 1;

namespace detail {

inline nlohmann::json checkpoint_header(std::string_view kind, std::size_t entities,
                                        std::size_t relations) {
  nlohmann::json j;
  j["format"] = "kgeval-checkpoint";
  j["format_version"] = kCheckpointFormatVersion;
  j["kind"] = std::string(kind);
  j["entity_count"] = entities;
  j["relation_count"] = relations;
  return j;
}

inline std::vector<double> slice(std::span<const double> s) { return {s.begin(), s.end()}; }

inline void copy_array(const nlohmann::json& j, const char* name, std::span<double> dst) {
  const auto& arr = j.at(name);
  if (!arr.is_array() || arr.size() != dst.size())
    throw FormatError(std::string("checkpoint: array '") + name + "' has wrong length");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = arr[i].get<double>();
}

inline void add_embeddings(nlohmann::json& j, const DifferentiableScorer& s) {
  const auto& sh = s.shape();
  const auto data = s.parameters();
  j["dim"] = sh.dim;
  j["seed"] = s.seed();
  j["entity_embeddings"] = slice(data.subspan(0, sh.entities * sh.dim));
  j["relation_embeddings"] = slice(data.subspan(sh.entities * sh.dim, sh.relations * sh.dim));
}

inline void load_embeddings(const nlohmann::json& j, DifferentiableScorer& s) {
  const auto& sh = s.shape();
  auto data = s.parameters();
  copy_array(j, "entity_embeddings", data.subspan(0, sh.entities * sh.dim));
  copy_array(j, "relation_embeddings", data.subspan(sh.entities * sh.dim, sh.relations * sh.dim));
}

}  // namespace detail

inline nlohmann::json ConstantScorer::to_json() const {
  auto j = detail::checkpoint_header(kind(), entities_, relations_);
  j["constant"] = value_;
  return j;
}

inline nlohmann::json TransEScorer::to_json() const {
  auto j = detail::checkpoint_header(kind(), shape_.entities, shape_.relations);
  j["norm"] = opts_.norm == Norm::kL2 ? "l2" : "l1";
  j["unit_norm_entities"] = opts_.unit_norm_entities;
  detail::add_embeddings(j, *this);
  return j;
}

inline nlohmann::json DistMultScorer::to_json() const {
  auto j = detail::checkpoint_header(kind(), shape_.entities, shape_.relations);
  detail::add_embeddings(j, *this);
  return j;
}

inline nlohmann::json TiedReluScorer::to_json() const {
  auto j = detail::checkpoint_header(kind(), shape_.entities, shape_.relations);
  j["hidden"] = opts_.hidden;
  j["init"] = {{"weight_range", opts_.weight_range},
               {"hidden_bias", opts_.hidden_bias},
               {"output_weight_range", opts_.output_weight_range},
               {"output_bias", opts_.output_bias}};
  detail::add_embeddings(j, *this);
  j["hidden_weights"] = detail::slice(hidden_weights());
  j["hidden_bias"] = detail::slice(hidden_bias());
  j["output_weights"] = detail::slice(output_weights());
  j["output_bias"] = output_bias();
  return j;
}

inline std::string checkpoint_to_string(const Scorer& s) { return s.to_json().dump() + "\n"; }

inline std::unique_ptr<Scorer> scorer_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "kgeval-checkpoint") throw FormatError("not a checkpoint");
  if (j.value("format_version", -1) != kCheckpointFormatVersion)
    throw FormatError("checkpoint: unsupported format_version");
  const std::string kind = j.at("kind").get<std::string>();
  const auto ne = j.at("entity_count").get<std::size_t>();
  const auto nr = j.at("relation_count").get<std::size_t>();
  if (kind == "constant") return std::make_unique<ConstantScorer>(j.at("constant").get<double>(), ne, nr);
  const auto dim = j.at("dim").get<std::size_t>();
  const auto seed = j.at("seed").get<std::uint64_t>();
  if (kind == "transe") {
    TransEScorer::Options o;
    o.norm = j.at("norm").get<std::string>() == "l1" ? Norm::kL1 : Norm::kL2;
    o.unit_norm_entities = j.at("unit_norm_entities").get<bool>();
    auto s = std::make_unique<TransEScorer>(ne, nr, dim, seed, o);
    detail::load_embeddings(j, *s);
    return s;
  }
  if (kind == "distmult") {
    auto s = std::make_unique<DistMultScorer>(ne, nr, dim, seed);
    detail::load_embeddings(j, *s);
    return s;
  }
  if (kind == "tied-relu") {
    TiedReluScorer::Options o;
    o.hidden = j.at("hidden").get<std::size_t>();
    const auto& init = j.at("init");
    o.weight_range = init.at("weight_range").get<double>();
    o.hidden_bias = init.at("hidden_bias").get<double>();
    o.output_weight_range = init.at("output_weight_range").get<double>();
    o.output_bias = init.at("output_bias").get<double>();
    auto s = std::make_unique<TiedReluScorer>(ne, nr, dim, seed, o);
    detail::load_embeddings(j, *s);
    detail::copy_array(j, "hidden_weights", s->hidden_weights());
    detail::copy_array(j, "hidden_bias", s->hidden_bias());
    detail::copy_array(j, "output_weights", s->output_weights());
    s->output_bias() = j.at("output_bias").get<double>();
    return s;
  }
  throw FormatError("checkpoint: unknown scorer kind '" + kind + "'");
}

inline std::unique_ptr<Scorer> scorer_from_string(std::string_view text) {
  try {
    return scorer_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

// Builds a freshly initialized trainable scorer by name.
inline std::unique_ptr<DifferentiableScorer> make_trainable_scorer(std::string_view kind,
                                                                   std::size_t entities,
                                                                   std::size_t relations,
                                                                   std::size_t dim,
                                                                   std::uint64_t seed) {
  if (kind == "transe") return std::make_unique<TransEScorer>(entities, relations, dim, seed);
  if (kind == "distmult") return std::make_unique<DistMultScorer>(entities, relations, dim, seed);
  if (kind == "tied-relu") return std::make_unique<TiedReluScorer>(entities, relations, dim, seed);
  throw Error("unknown trainable scorer kind '" + std::string(kind) + "'");
}

}  // namespace kgeval
