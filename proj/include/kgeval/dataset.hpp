#pragma once

// Triples, vocabularies, the known-fact filter index and filtered candidate
// sets.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <span>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "kgeval/error.hpp"

namespace kgeval {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

// Which entity of a test triple is being predicted.
enum class Side : std::uint8_t { kHead = 0, kTail = 1 };

inline const char* to_string(Side side) {
  return side == Side::kHead ? "head" : "tail";
}

// A test triple together with the side whose entity is hidden.
struct Query {
  Triple triple;
  Side side = Side::kTail;

  EntityId answer() const {
    return side == Side::kTail ? triple.tail : triple.head;
  }
  // The entity that stays fixed while candidates are enumerated.
  EntityId anchor() const {
    return side == Side::kTail ? triple.head : triple.tail;
  }
  // Candidate entity substituted into the hidden side.
  Triple with_candidate(EntityId candidate) const {
    Triple t = triple;
    (side == Side::kTail ? t.tail : t.head) = candidate;
    return t;
  }
};

// Dense bijection between surface strings and ids 0..size()-1.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> names) {
    for (auto& n : names) {
      if (index_.contains(n)) throw FormatError("duplicate vocabulary entry: " + n);
      index_.emplace(n, static_cast<std::uint32_t>(names_.size()));
      names_.push_back(std::move(n));
    }
  }

  // Returns the id of `name`, appending it if unseen.
  std::uint32_t intern(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it != index_.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
  }

  const std::uint32_t* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &it->second;
  }

  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Reads tab-separated (head, relation, tail) lines. Empty lines are skipped;
// a trailing CR is stripped so CRLF files load unchanged.
inline std::vector<Triple> parse_triples(std::istream& in, Vocab& entities,
                                         Vocab& relations) {
  std::vector<Triple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto first = line.find('\t');
    const auto second =
        first == std::string::npos ? std::string::npos : line.find('\t', first + 1);
    if (second == std::string::npos || line.find('\t', second + 1) != std::string::npos) {
      throw ParseError(line_no, "expected exactly three tab-separated fields");
    }
    const std::string_view view(line);
    Triple t;
    t.head = entities.intern(view.substr(0, first));
    t.relation = relations.intern(view.substr(first + 1, second - first - 1));
    t.tail = entities.intern(view.substr(second + 1));
    out.push_back(t);
  }
  return out;
}

inline std::vector<Triple> parse_triples(std::string_view text, Vocab& entities,
                                         Vocab& relations) {
  std::istringstream in{std::string(text)};
  return parse_triples(in, entities, relations);
}

// Known-true answers per (head, relation) and per (relation, tail).
class FilterIndex {
 public:
  void insert(const Triple& t) {
    tails_[key(t.head, t.relation)].push_back(t.tail);
    heads_[key(t.relation, t.tail)].push_back(t.head);
    sorted_ = false;
  }

  // Sorts and deduplicates every answer set. Called once after all inserts.
  void finalize() {
    for (auto* m : {&tails_, &heads_}) {
      for (auto& [k, v] : *m) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
      }
    }
    sorted_ = true;
  }

  std::span<const EntityId> tails_of(EntityId head, RelationId relation) const {
    return lookup(tails_, key(head, relation));
  }
  std::span<const EntityId> heads_of(RelationId relation, EntityId tail) const {
    return lookup(heads_, key(relation, tail));
  }

  // Known answers for the hidden side of `q`.
  std::span<const EntityId> known_answers(const Query& q) const {
    return q.side == Side::kTail ? tails_of(q.triple.head, q.triple.relation)
                                 : heads_of(q.triple.relation, q.triple.tail);
  }

  bool contains(const Triple& t) const {
    auto tails = tails_of(t.head, t.relation);
    return std::binary_search(tails.begin(), tails.end(), t.tail);
  }

  bool empty() const { return tails_.empty(); }
  std::size_t key_count() const { return tails_.size() + heads_.size(); }
  bool finalized() const { return sorted_; }

 private:
  using Map = std::unordered_map<std::uint64_t, std::vector<EntityId>>;

  static std::uint64_t key(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }
  static std::span<const EntityId> lookup(const Map& m, std::uint64_t k) {
    auto it = m.find(k);
    if (it == m.end()) return {};
    return it->second;
  }

  Map tails_;
  Map heads_;
  bool sorted_ = true;
};

enum class Split : std::uint8_t { kTrain = 0, kValid = 1, kTest = 2 };

struct Dataset {
  Vocab entities;
  Vocab relations;
  std::vector<Triple> train;
  std::vector<Triple> valid;
  std::vector<Triple> test;
  FilterIndex filter;

  const std::vector<Triple>& split(Split s) const {
    switch (s) {
      case Split::kTrain: return train;
      case Split::kValid: return valid;
      default: return test;
    }
  }

  std::size_t entity_count() const { return entities.size(); }
  std::size_t relation_count() const { return relations.size(); }

  void check(const Triple& t) const {
    if (t.head >= entity_count() || t.tail >= entity_count() ||
        t.relation >= relation_count()) {
      throw UnknownIdError("triple (" + std::to_string(t.head) + ", " +
                           std::to_string(t.relation) + ", " + std::to_string(t.tail) +
                           ") references an id outside the vocabulary");
    }
  }
};

inline Dataset build_dataset(std::vector<Triple> train, std::vector<Triple> valid,
                             std::vector<Triple> test, Vocab entities, Vocab relations) {
  Dataset ds;
  ds.entities = std::move(entities);
  ds.relations = std::move(relations);
  ds.train = std::move(train);
  ds.valid = std::move(valid);
  ds.test = std::move(test);
  for (const auto* split : {&ds.train, &ds.valid, &ds.test}) {
    for (const Triple& t : *split) {
      ds.check(t);
      ds.filter.insert(t);
    }
  }
  ds.filter.finalize();
  return ds;
}

// Loads the three split files into one shared id space, in train, valid,
// test order. An empty path yields an empty split.
inline Dataset load_dataset(const std::string& train_path, const std::string& valid_path,
                            const std::string& test_path) {
  Vocab entities, relations;
  auto read = [&](const std::string& path) -> std::vector<Triple> {
    if (path.empty()) return {};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    try {
      return parse_triples(in, entities, relations);
    } catch (const ParseError& e) {
      throw ParseError(e.line(), path + ": expected exactly three tab-separated fields");
    }
  };
  auto train = read(train_path);
  auto valid = read(valid_path);
  auto test = read(test_path);
  return build_dataset(std::move(train), std::move(valid), std::move(test),
                       std::move(entities), std::move(relations));
}

// Writes triples back as TSV using the vocabulary surface strings.
inline void write_triples(std::ostream& out, const std::vector<Triple>& triples,
                          const Vocab& entities, const Vocab& relations) {
  for (const Triple& t : triples) {
    out << entities.name(t.head) << '\t' << relations.name(t.relation) << '\t'
        << entities.name(t.tail) << '\n';
  }
}

// Filtered candidate set for one query: every entity except known-true
// answers, with the evaluated answer kept. `ids` is ascending.
struct CandidateSet {
  std::vector<EntityId> ids;
  std::size_t evaluated_pos = 0;

  EntityId evaluated() const { return ids[evaluated_pos]; }
  std::size_t size() const { return ids.size(); }
};

inline void check_query(const Dataset& ds, const Query& q) { ds.check(q.triple); }

inline CandidateSet filtered_candidates(const Dataset& ds, const Query& q,
                                        bool filtered = true) {
  check_query(ds, q);
  const EntityId answer = q.answer();
  const auto known = filtered ? ds.filter.known_answers(q) : std::span<const EntityId>{};
  CandidateSet out;
  out.ids.reserve(ds.entity_count() - known.size() + 1);
  auto k = known.begin();
  for (EntityId e = 0; e < ds.entity_count(); ++e) {
    while (k != known.end() && *k < e) ++k;
    const bool is_known = k != known.end() && *k == e;
    if (e == answer) {
      out.evaluated_pos = out.ids.size();
      out.ids.push_back(e);
    } else if (!is_known) {
      out.ids.push_back(e);
    }
  }
  return out;
}

// Test (or other split) queries in the canonical order: triple index major,
// head side before tail side.
inline std::vector<Query> make_queries(const std::vector<Triple>& triples, bool head,
                                       bool tail) {
  std::vector<Query> out;
  out.reserve(triples.size() * 2);
  for (const Triple& t : triples) {
    if (head) out.push_back({t, Side::kHead});
    if (tail) out.push_back({t, Side::kTail});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset cache. JSON with a format version; dumping a loaded cache
// reproduces the input bytes.

inline constexpr int kDatasetFormatVersion = 1;

inline nlohmann::json triples_to_json(const std::vector<Triple>& triples) {
  auto arr = nlohmann::json::array();
  for (const Triple& t : triples) arr.push_back({t.head, t.relation, t.tail});
  return arr;
}

inline std::vector<Triple> triples_from_json(const nlohmann::json& arr) {
  std::vector<Triple> out;
  out.reserve(arr.size());
  for (const auto& row : arr) {
    if (!row.is_array() || row.size() != 3) throw FormatError("triple must be [h, r, t]");
    out.push_back({row[0].get<EntityId>(), row[1].get<RelationId>(), row[2].get<EntityId>()});
  }
  return out;
}

inline std::string dataset_to_json(const Dataset& ds) {
  nlohmann::json j;
  j["format"] = "kgeval-dataset";
  j["format_version"] = kDatasetFormatVersion;
  j["entities"] = ds.entities.names();
  j["relations"] = ds.relations.names();
  j["train"] = triples_to_json(ds.train);
  j["valid"] = triples_to_json(ds.valid);
  j["test"] = triples_to_json(ds.test);
  return j.dump() + "\n";
}

inline Dataset dataset_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("dataset cache: ") + e.what());
  }
  if (j.value("format", "") != "kgeval-dataset")
    throw FormatError("not a dataset cache");
  if (j.value("format_version", -1) != kDatasetFormatVersion)
    throw FormatError("dataset cache: unsupported format_version");
  return build_dataset(triples_from_json(j.at("train")), triples_from_json(j.at("valid")),
                       triples_from_json(j.at("test")),
                       Vocab(j.at("entities").get<std::vector<std::string>>()),
                       Vocab(j.at("relations").get<std::vector<std::string>>()));
}

}  // namespace kgeval
