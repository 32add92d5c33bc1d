#pragma once

// Plain-SGD training of the differentiable scorers with a margin ranking
// loss over filtered negative samples.

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgeval/dataset.hpp"
#include "kgeval/error.hpp"
#include "kgeval/rng.hpp"
#include "kgeval/scoring.hpp"

namespace kgeval {

struct TrainConfig {
  std::size_t epochs = 100;
  double learning_rate = 0.01;
  double margin = 1.0;
  std::size_t negatives = 1;  // per positive and side
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  bool filtered_negatives = true;
  // Which sides get corrupted. Both: an unbiased coin per positive.
  bool corrupt_head = true;
  bool corrupt_tail = true;

  void validate() const {
    if (learning_rate <= 0.0 || margin <= 0.0 || negatives == 0 || batch_size == 0)
      throw Error("train config: learning rate, margin, negatives and batch size must be positive");
    if (!corrupt_head && !corrupt_tail) throw Error("train config: no side to corrupt");
  }
};

inline double margin_loss(double pos_score, double neg_score, double margin) {
  return std::max(0.0, margin - pos_score + neg_score);
}

// Up to k corruptions of `side` drawn uniformly by rejection. A corruption
// equal to a known fact (or to the triple itself) is rejected. When fewer
// than k valid corruptions exist, every one of them is returned.
inline std::vector<Triple> sample_negatives(Rng& rng, const Triple& triple, const Dataset& ds,
                                            std::size_t k, Side side, bool filtered = true) {
  const std::size_t n = ds.entity_count();
  const Query q{triple, side};
  const auto known = filtered ? ds.filter.known_answers(q) : std::span<const EntityId>{};
  auto is_excluded = [&](EntityId e) {
    if (e == q.answer()) return true;
    return std::binary_search(known.begin(), known.end(), e);
  };
  std::size_t excluded = known.size();
  if (!std::binary_search(known.begin(), known.end(), q.answer())) ++excluded;
  const std::size_t available = n > excluded ? n - excluded : 0;

  std::vector<Triple> out;
  if (available == 0) return out;
  if (available <= k) {
    for (EntityId e = 0; e < n; ++e) {
      if (!is_excluded(e)) out.push_back(q.with_candidate(e));
    }
    return out;
  }
  out.reserve(k);
  while (out.size() < k) {
    const auto e = static_cast<EntityId>(rng.below(n));
    if (!is_excluded(e)) out.push_back(q.with_candidate(e));
  }
  return out;
}

// Adds d margin_loss / d params for one (positive, negative) pair into grad.
// Returns the loss value.
inline double accumulate_pair_gradient(const DifferentiableScorer& scorer, const Triple& pos,
                                       const Triple& neg, double margin, double coeff,
                                       SparseGradient& grad) {
  const double loss = margin_loss(scorer.score(pos), scorer.score(neg), margin);
  if (loss > 0.0) {
    scorer.accumulate_gradient(pos, -coeff, grad);
    scorer.accumulate_gradient(neg, coeff, grad);
  }
  return loss;
}

struct TrainResult {
  std::vector<double> loss_trace;  // mean pair loss per epoch
  std::size_t steps = 0;
};

// Trains `scorer` in place. Bit-reproducible for a fixed (seed, config,
// dataset).
inline TrainResult train(DifferentiableScorer& scorer, const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  if (!scorer.covers(ds)) throw UnknownIdError("scorer does not cover the dataset vocabulary");
  TrainResult result;
  if (cfg.epochs == 0 || ds.train.empty()) return result;

  Rng rng(mix_key({cfg.seed, 0x747261696eULL}));
  std::vector<std::size_t> order(ds.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SparseGradient grad(scorer.parameters().size());
  auto params = scorer.parameters();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    std::size_t pairs = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double coeff = 1.0 / static_cast<double>(end - start);
      for (std::size_t b = start; b < end; ++b) {
        const Triple& pos = ds.train[order[b]];
        Side side = cfg.corrupt_tail ? Side::kTail : Side::kHead;
        if (cfg.corrupt_head && cfg.corrupt_tail) side = rng.below(2) ? Side::kTail : Side::kHead;
        for (const Triple& neg : sample_negatives(rng, pos, ds, cfg.negatives, side,
                                                  cfg.filtered_negatives)) {
          const double loss = accumulate_pair_gradient(scorer, pos, neg, cfg.margin, coeff, grad);
          if (!std::isfinite(loss)) {
            throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", triple " +
                               std::to_string(order[b]));
          }
          epoch_loss += loss;
          ++pairs;
        }
      }
      for (std::size_t i : grad.touched()) params[i] -= cfg.learning_rate * grad[i];
      scorer.after_update(grad.touched());
      for (std::size_t i : grad.touched()) {
        if (!std::isfinite(params[i]))
          throw NumericError("non-finite parameter after step at epoch " + std::to_string(epoch));
      }
      grad.clear();
      ++result.steps;
    }
    result.loss_trace.push_back(pairs ? epoch_loss / static_cast<double>(pairs) : 0.0);
  }
  return result;
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},         {"learning_rate", c.learning_rate},
          {"margin", c.margin},         {"negatives", c.negatives},
          {"batch_size", c.batch_size}, {"seed", c.seed},
          {"filtered_negatives", c.filtered_negatives}};
}

inline nlohmann::json loss_trace_to_json(const TrainConfig& c, const TrainResult& r) {
  return {{"format", "kgeval-loss-trace"},
          {"format_version", 1},
          {"config", train_config_to_json(c)},
          {"steps", r.steps},
          {"loss", r.loss_trace}};
}

}  // namespace kgeval
