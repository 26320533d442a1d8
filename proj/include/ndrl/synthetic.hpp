#pragma once

// Seeded synthetic course-style graphs and description vectors.
//
// The mixed pattern grows an "include" tree with bounded fan-out, adds
// "require" edges from a child back to its parent, and links pairs of
// siblings by "relate" (optionally in both directions). Siblings are paired
// disjointly, so the only one-relation circles present are the planted
// symmetric relate pairs.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ndrl/desc_attention.hpp"
#include "ndrl/errors.hpp"
#include "ndrl/kg_store.hpp"
#include "ndrl/linalg.hpp"

namespace ndrl {

enum class GraphPattern { tree, mixed };

struct SyntheticSpec {
  std::size_t entities = 300;
  std::size_t relations = 3;
  GraphPattern pattern = GraphPattern::mixed;
  std::size_t max_children = 4;
  double require_fraction = 0.5;
  double relate_fraction = 0.6;
  double symmetric_fraction = 0.5;
  std::uint64_t seed = 7;

  void validate() const {
    if (entities < 2) throw ConfigError("synthetic graph needs at least 2 entities");
    if (relations < 1) throw ConfigError("synthetic graph needs at least 1 relation");
    if (max_children < 1) throw ConfigError("max_children must be at least 1");
    for (double f : {require_fraction, relate_fraction, symmetric_fraction}) {
      if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("synthetic fractions must lie in [0,1]");
    }
  }
};

struct SyntheticGraph {
  KnowledgeGraph graph;
  std::size_t planted_symmetric_pairs = 0;
  std::size_t relate_triples = 0;
  std::vector<std::size_t> parent;  // parent[0] == 0 for the root
};

inline std::string synthetic_relation_name(std::size_t r) {
  switch (r) {
    case 0: return "include";
    case 1: return "require";
    case 2: return "relate";
    default: return "link" + std::to_string(r);
  }
}

inline SyntheticGraph generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  Vocabulary entities;
  for (std::size_t i = 0; i < spec.entities; ++i) entities.intern("e" + std::to_string(i));
  Vocabulary relations;
  const bool mixed = spec.pattern == GraphPattern::mixed;
  const std::size_t used_relations = mixed ? spec.relations : 1;
  for (std::size_t r = 0; r < used_relations; ++r) relations.intern(synthetic_relation_name(r));

  SyntheticGraph out;
  out.parent.assign(spec.entities, 0);
  std::vector<std::vector<std::size_t>> children(spec.entities);
  std::vector<std::size_t> open{0};
  std::vector<Triple> triples;
  const RelationId include(0);
  for (std::size_t node = 1; node < spec.entities; ++node) {
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    const std::size_t slot = pick(rng);
    const std::size_t parent = open[slot];
    out.parent[node] = parent;
    children[parent].push_back(node);
    if (children[parent].size() >= spec.max_children) {
      open[slot] = open.back();
      open.pop_back();
    }
    open.push_back(node);
    triples.push_back({EntityId(parent), include, EntityId(node)});
  }

  if (mixed && spec.relations >= 2) {
    const RelationId require(1);
    for (std::size_t node = 1; node < spec.entities; ++node) {
      if (coin(rng) < spec.require_fraction) triples.push_back({EntityId(node), require, EntityId(out.parent[node])});
    }
  }
  if (mixed && spec.relations >= 3) {
    const RelationId relate(2);
    for (std::size_t p = 0; p < spec.entities; ++p) {
      const auto& kids = children[p];
      for (std::size_t i = 0; i + 1 < kids.size(); i += 2) {
        if (coin(rng) >= spec.relate_fraction) continue;
        triples.push_back({EntityId(kids[i]), relate, EntityId(kids[i + 1])});
        ++out.relate_triples;
        if (coin(rng) < spec.symmetric_fraction) {
          triples.push_back({EntityId(kids[i + 1]), relate, EntityId(kids[i])});
          ++out.relate_triples;
          ++out.planted_symmetric_pairs;
        }
      }
    }
  }
  if (mixed && spec.relations >= 4) {
    std::uniform_int_distribution<std::size_t> pick_extra(3, spec.relations - 1);
    for (std::size_t node = 1; node < spec.entities; ++node) {
      const std::size_t parent = out.parent[node];
      if (parent == 0) continue;  // root children have no grandparent
      if (coin(rng) < 0.5) {
        triples.push_back({EntityId(node), RelationId(pick_extra(rng)), EntityId(out.parent[parent])});
      }
    }
  }
  out.graph = KnowledgeGraph(std::move(entities), std::move(relations), triples);
  return out;
}

// ---------------------------------------------------------------------------

struct DescriptionSpec {
  double coverage = 0.6;  // fraction of entities that receive descriptions
  std::size_t dim = 32;
  std::size_t min_sentences = 1;
  std::size_t max_sentences = 3;
  std::size_t smoothing_rounds = 3;
  double noise = 0.3;
  std::uint64_t seed = 11;

  void validate() const {
    if (!(coverage >= 0.0 && coverage <= 1.0)) throw ConfigError("description coverage must lie in [0,1]");
    if (dim == 0) throw ConfigError("description dimension must be positive");
    if (min_sentences == 0 || max_sentences < min_sentences) throw ConfigError("invalid sentence count range");
    if (!(noise >= 0.0)) throw ConfigError("description noise must be non-negative");
  }
};

/// Sentence vectors that carry graph structure: a Gaussian latent per entity
/// is smoothed over neighborhoods, and every sentence is that latent plus
/// independent noise.
inline DescriptionBank generate_descriptions(const KnowledgeGraph& kg, const DescriptionSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(kg.num_entities());
  const auto d = static_cast<Eigen::Index>(spec.dim);
  Matrix latent(n, d);
  for (Eigen::Index i = 0; i < latent.size(); ++i) latent.data()[i] = gauss(rng);
  for (std::size_t round = 0; round < spec.smoothing_rounds; ++round) {
    Matrix next = latent;
    for (Eigen::Index e = 0; e < n; ++e) {
      const auto nbrs = neighborhood(kg, EntityId(static_cast<std::size_t>(e)), true);
      if (nbrs.empty()) continue;
      RowVector mean = RowVector::Zero(d);
      for (const auto& nb : nbrs) mean += latent.row(nb.entity.index());
      next.row(e) = 0.5 * latent.row(e) + 0.5 * mean / static_cast<double>(nbrs.size());
    }
    latent = std::move(next);
  }
  for (Eigen::Index e = 0; e < n; ++e) {
    const double norm = latent.row(e).norm();
    if (norm > 0.0) latent.row(e) /= norm;
  }

  std::vector<std::size_t> order(kg.num_entities());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto covered = static_cast<std::size_t>(std::llround(spec.coverage * static_cast<double>(order.size())));
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(covered));

  DescriptionBank bank(kg.num_entities(), spec.dim);
  std::uniform_int_distribution<std::size_t> count(spec.min_sentences, spec.max_sentences);
  const double scale = spec.noise / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < covered; ++i) {
    const std::size_t e = order[i];
    Matrix s(static_cast<Eigen::Index>(count(rng)), d);
    for (Eigen::Index j = 0; j < s.rows(); ++j) {
      for (Eigen::Index c = 0; c < d; ++c) s(j, c) = latent(static_cast<Eigen::Index>(e), c) + scale * gauss(rng);
    }
    bank.set(EntityId(e), std::move(s));
  }
  return bank;
}

}  // namespace ndrl
