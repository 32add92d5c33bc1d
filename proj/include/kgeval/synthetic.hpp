#pragma once

// Deterministic synthetic knowledge graph with planted translational
// structure: every entity and relation gets a hidden latent vector, and
// (h, r, t) is a fact when t is among the nearest neighbours of h + r.
// Translation-based scorers can learn it at desk scale.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "kgeval/dataset.hpp"
#include "kgeval/rng.hpp"

namespace kgeval {

struct SyntheticConfig {
  std::size_t entities = 50;
  std::size_t relations = 5;
  std::size_t latent_dim = 8;
  std::size_t tails_per_head = 2;
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 7;
};

inline Dataset synthetic_kg(const SyntheticConfig& cfg = {}) {
  Rng rng(mix_key({cfg.seed, 0x73796e7468ULL}));
  const std::size_t d = cfg.latent_dim;
  std::vector<double> ent(cfg.entities * d), rel(cfg.relations * d);
  for (double& v : ent) v = rng.uniform(-1.0, 1.0);
  for (double& v : rel) v = rng.uniform(-1.0, 1.0);

  Vocab entities, relations;
  for (std::size_t i = 0; i < cfg.entities; ++i) entities.intern("ent_" + std::to_string(i));
  for (std::size_t i = 0; i < cfg.relations; ++i) relations.intern("rel_" + std::to_string(i));

  std::vector<Triple> facts;
  std::vector<std::pair<double, EntityId>> dist(cfg.entities);
  for (std::size_t h = 0; h < cfg.entities; ++h) {
    for (std::size_t r = 0; r < cfg.relations; ++r) {
      for (std::size_t t = 0; t < cfg.entities; ++t) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          const double x = ent[h * d + i] + rel[r * d + i] - ent[t * d + i];
          s += x * x;
        }
        dist[t] = {t == h ? 1e300 : s, static_cast<EntityId>(t)};
      }
      std::sort(dist.begin(), dist.end());
      for (std::size_t k = 0; k < cfg.tails_per_head && k + 1 < cfg.entities; ++k) {
        facts.push_back({static_cast<EntityId>(h), static_cast<RelationId>(r), dist[k].second});
      }
    }
  }

  rng.shuffle(std::span<Triple>(facts));
  const auto n = facts.size();
  const auto n_test = static_cast<std::size_t>(static_cast<double>(n) * cfg.test_fraction);
  const auto n_valid = static_cast<std::size_t>(static_cast<double>(n) * cfg.valid_fraction);
  std::vector<Triple> test(facts.begin(), facts.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<Triple> valid(facts.begin() + static_cast<std::ptrdiff_t>(n_test),
                            facts.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid));
  std::vector<Triple> train(facts.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid),
                            facts.end());
  return build_dataset(std::move(train), std::move(valid), std::move(test), std::move(entities),
                       std::move(relations));
}

}  // namespace kgeval
