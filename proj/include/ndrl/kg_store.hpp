#pragma once

// Knowledge-graph storage: vocabularies, the deduplicated triple list with
// by-head / by-tail indices, dataset splitting and entity structure richness.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ndrl/errors.hpp"

namespace ndrl {

template <typename Tag>
struct Handle {
  std::uint32_t value = 0;

  constexpr Handle() = default;
  constexpr explicit Handle(std::size_t v) : value(static_cast<std::uint32_t>(v)) {}

  constexpr std::size_t index() const noexcept { return value; }
  constexpr auto operator<=>(const Handle&) const = default;
};

using EntityId = Handle<struct EntityTag>;
using RelationId = Handle<struct RelationTag>;

struct Triple {
  EntityId head;
  RelationId relation;
  EntityId tail;

  constexpr auto operator<=>(const Triple&) const = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::uint64_t x = (static_cast<std::uint64_t>(t.head.value) << 32) ^ t.tail.value;
    x ^= static_cast<std::uint64_t>(t.relation.value) * 0x9E3779B97F4A7C15ull;
    x ^= x >> 31;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 29;
    return static_cast<std::size_t>(x);
  }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

/// Bijection between dense handles and UTF-8 labels; handles follow insertion order.
class Vocabulary {
public:
  std::size_t intern(std::string_view label) {
    auto it = index_.find(std::string(label));
    if (it != index_.end()) return it->second;
    const std::size_t id = labels_.size();
    labels_.emplace_back(label);
    index_.emplace(labels_.back(), id);
    return id;
  }

  std::optional<std::size_t> find(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& label(std::size_t id) const {
    if (id >= labels_.size()) throw LookupError("handle " + std::to_string(id) + " out of range");
    return labels_[id];
  }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class Direction { in, out };

struct Neighbor {
  EntityId entity;
  RelationId relation;
  Direction direction;

  bool operator==(const Neighbor&) const = default;
};

/// Immutable, indexed triple store.
class KnowledgeGraph {
public:
  KnowledgeGraph() = default;

  KnowledgeGraph(Vocabulary entities, Vocabulary relations, std::span<const Triple> triples)
      : entities_(std::move(entities)), relations_(std::move(relations)) {
    triples_.reserve(triples.size());
    for (const Triple& t : triples) {
      if (t.head.index() >= entities_.size() || t.tail.index() >= entities_.size() ||
          t.relation.index() >= relations_.size()) {
        throw LookupError("triple references an unknown handle");
      }
      if (set_.insert(t).second) {
        triples_.push_back(t);
      } else {
        ++duplicates_;
      }
    }
    by_head_.assign(entities_.size(), {});
    by_tail_.assign(entities_.size(), {});
    degree_.assign(entities_.size(), 0);
    for (std::size_t i = 0; i < triples_.size(); ++i) {
      by_head_[triples_[i].head.index()].push_back(i);
      by_tail_[triples_[i].tail.index()].push_back(i);
      ++degree_[triples_[i].head.index()];
      ++degree_[triples_[i].tail.index()];
    }
  }

  /// Same vocabularies, different triple subset (used for the training graph).
  KnowledgeGraph with_triples(std::span<const Triple> triples) const {
    return KnowledgeGraph(entities_, relations_, triples);
  }

  std::size_t num_entities() const noexcept { return entities_.size(); }
  std::size_t num_relations() const noexcept { return relations_.size(); }
  std::size_t size() const noexcept { return triples_.size(); }
  bool empty() const noexcept { return triples_.empty(); }
  std::size_t duplicate_count() const noexcept { return duplicates_; }

  const std::vector<Triple>& triples() const noexcept { return triples_; }
  const TripleSet& triple_set() const noexcept { return set_; }
  bool contains(const Triple& t) const { return set_.contains(t); }

  const Vocabulary& entities() const noexcept { return entities_; }
  const Vocabulary& relations() const noexcept { return relations_; }

  std::span<const std::size_t> by_head(EntityId e) const { return by_head_[check(e)]; }
  std::span<const std::size_t> by_tail(EntityId e) const { return by_tail_[check(e)]; }
  std::size_t degree(EntityId e) const { return degree_[check(e)]; }

  std::optional<EntityId> entity(std::string_view label) const {
    if (auto id = entities_.find(label)) return EntityId(*id);
    return std::nullopt;
  }
  std::optional<RelationId> relation(std::string_view label) const {
    if (auto id = relations_.find(label)) return RelationId(*id);
    return std::nullopt;
  }

  std::size_t check(EntityId e) const {
    if (e.index() >= entities_.size()) {
      throw LookupError("entity handle " + std::to_string(e.index()) + " out of range");
    }
    return e.index();
  }

private:
  Vocabulary entities_;
  Vocabulary relations_;
  std::vector<Triple> triples_;
  TripleSet set_;
  std::vector<std::vector<std::size_t>> by_head_;
  std::vector<std::vector<std::size_t>> by_tail_;
  std::vector<std::size_t> degree_;
  std::size_t duplicates_ = 0;
};

// ---------------------------------------------------------------------------
// Triple files

inline std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline KnowledgeGraph read_triples(std::istream& in) {
  Vocabulary entities;
  Vocabulary relations;
  std::vector<Triple> triples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_fields(line, '\t');
    if (fields.size() != 3) {
      throw ParseError("expected head<TAB>relation<TAB>tail, got " + std::to_string(fields.size()) +
                           " field(s): \"" + line + "\"",
                       lineno);
    }
    for (auto f : fields) {
      if (f.empty()) throw ParseError("empty field: \"" + line + "\"", lineno);
    }
    const EntityId h(entities.intern(fields[0]));
    const RelationId r(relations.intern(fields[1]));
    const EntityId t(entities.intern(fields[2]));
    triples.push_back({h, r, t});
  }
  if (triples.empty()) throw EmptyGraphError("triple file contains no triples");
  return KnowledgeGraph(std::move(entities), std::move(relations), triples);
}

inline KnowledgeGraph load_triples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open triple file: " + path);
  return read_triples(in);
}

inline void write_triples(std::ostream& out, const KnowledgeGraph& kg, std::span<const Triple> triples) {
  for (const Triple& t : triples) {
    out << kg.entities().label(t.head.index()) << '\t' << kg.relations().label(t.relation.index())
        << '\t' << kg.entities().label(t.tail.index()) << '\n';
  }
}

inline void save_triples(const std::string& path, const KnowledgeGraph& kg, std::span<const Triple> triples) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write triple file: " + path);
  write_triples(out, kg, triples);
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitRatios {
  double train = 7.0;
  double valid = 1.5;
  double test = 1.5;
};

struct DatasetSplit {
  std::vector<Triple> train;
  std::vector<Triple> valid;
  std::vector<Triple> test;
};

/// Deterministic shuffle-and-partition. Valid and test sizes are floored;
/// the remainder goes to train.
inline DatasetSplit split_dataset(const KnowledgeGraph& kg, const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0) {
    throw ConfigError("split ratios must be non-negative");
  }
  const double total = ratios.train + ratios.valid + ratios.test;
  if (!(total > 0)) throw ConfigError("split ratios must sum to a positive value");
  if (kg.empty()) throw EmptyGraphError("cannot split an empty graph");

  std::vector<Triple> shuffled = kg.triples();
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  const double n = static_cast<double>(shuffled.size());
  const auto n_valid = static_cast<std::size_t>(std::floor(n * ratios.valid / total + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test / total + 1e-9));
  const std::size_t n_train = shuffled.size() - n_valid - n_test;

  DatasetSplit split;
  split.train.assign(shuffled.begin(), shuffled.begin() + n_train);
  split.valid.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_valid);
  split.test.assign(shuffled.begin() + n_train + n_valid, shuffled.end());
  return split;
}

/// Writes train/valid/test triple files plus a manifest into `prefix`.*
inline void save_split(const std::string& prefix, const KnowledgeGraph& kg, const DatasetSplit& split,
                       const SplitRatios& ratios, std::uint64_t seed) {
  save_triples(prefix + ".train.tsv", kg, split.train);
  save_triples(prefix + ".valid.tsv", kg, split.valid);
  save_triples(prefix + ".test.tsv", kg, split.test);
  std::ofstream manifest(prefix + ".manifest");
  if (!manifest) throw IoError("cannot write split manifest: " + prefix + ".manifest");
  manifest << "seed=" << seed << '\n'
           << "ratios=" << ratios.train << ':' << ratios.valid << ':' << ratios.test << '\n'
           << "train=" << split.train.size() << '\n'
           << "valid=" << split.valid.size() << '\n'
           << "test=" << split.test.size() << '\n';
}

// ---------------------------------------------------------------------------
// Neighborhoods and richness

/// Incident triples of `e`, ordered by triple index. With `include_inverse`
/// false only triples where `e` is the tail are returned. A self-loop yields
/// an `out` entry followed by an `in` entry.
inline std::vector<Neighbor> neighborhood(const KnowledgeGraph& kg, EntityId e, bool include_inverse) {
  const auto heads = kg.by_head(e);
  const auto tails = kg.by_tail(e);
  const auto& triples = kg.triples();
  std::vector<Neighbor> out;
  out.reserve(heads.size() + tails.size());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < heads.size() || j < tails.size()) {
    const bool take_head =
        include_inverse && i < heads.size() && (j >= tails.size() || heads[i] <= tails[j]);
    if (take_head) {
      const Triple& t = triples[heads[i++]];
      out.push_back({t.tail, t.relation, Direction::out});
    } else if (j < tails.size()) {
      const Triple& t = triples[tails[j++]];
      out.push_back({t.head, t.relation, Direction::in});
    } else {
      break;
    }
  }
  return out;
}

struct RichnessConfig {
  double k = 0.5;
  double threshold = 12.0;

  void validate() const {
    if (!(k >= 0.0 && k <= 1.0)) throw ConfigError("richness.k must lie in [0,1]");
    if (!(threshold >= 0.0)) throw ConfigError("richness.threshold must be non-negative");
  }
};

/// N(e) = degree(e) + k * (sum of degrees of e's distinct neighbor entities).
inline double structure_richness(const KnowledgeGraph& kg, EntityId e, const RichnessConfig& cfg) {
  const std::size_t degree = kg.degree(e);
  if (degree == 0) return 0.0;
  std::vector<std::uint32_t> neighbors;
  for (std::size_t idx : kg.by_head(e)) neighbors.push_back(kg.triples()[idx].tail.value);
  for (std::size_t idx : kg.by_tail(e)) neighbors.push_back(kg.triples()[idx].head.value);
  std::sort(neighbors.begin(), neighbors.end());
  neighbors.erase(std::unique(neighbors.begin(), neighbors.end()), neighbors.end());
  std::size_t neighbor_degree = 0;
  for (std::uint32_t n : neighbors) {
    if (n != e.value) neighbor_degree += kg.degree(EntityId(n));
  }
  return static_cast<double>(degree) + cfg.k * static_cast<double>(neighbor_degree);
}

inline std::vector<double> structure_richness_all(const KnowledgeGraph& kg, const RichnessConfig& cfg) {
  std::vector<double> out(kg.num_entities());
  for (std::size_t e = 0; e < out.size(); ++e) out[e] = structure_richness(kg, EntityId(e), cfg);
  return out;
}

}  // namespace ndrl
