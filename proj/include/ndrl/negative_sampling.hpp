#pragma once

#include <random>
#include <vector>

#include "ndrl/errors.hpp"
#include "ndrl/kg_store.hpp"
#include "ndrl/linalg.hpp"

namespace ndrl {

enum class Side { head, tail, relation };

struct NegativeSample {
  Triple triple;
  Side replaced;
};

/// Corrupts the head or tail (fair coin) with a uniformly drawn entity,
/// redrawing until it differs from the original. With `corrupt_relation` the
/// relation is a third, equally likely choice.
inline std::vector<NegativeSample> sample_negatives(const KnowledgeGraph& kg, const Triple& positive,
                                                    std::size_t count, Rng& rng, bool corrupt_relation = false) {
  const std::size_t n = kg.num_entities();
  if (n < 2) throw SamplingError("negative sampling needs at least two entities");
  const bool relations_ok = corrupt_relation && kg.num_relations() >= 2;
  std::uniform_int_distribution<std::size_t> pick_entity(0, n - 1);
  std::uniform_int_distribution<int> pick_side(0, relations_ok ? 2 : 1);
  std::vector<NegativeSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    NegativeSample s{positive, Side::head};
    const int side = pick_side(rng);
    if (side == 2) {
      std::uniform_int_distribution<std::size_t> pick_relation(0, kg.num_relations() - 1);
      s.replaced = Side::relation;
      do {
        s.triple.relation = RelationId(pick_relation(rng));
      } while (s.triple.relation == positive.relation);
    } else if (side == 0) {
      do {
        s.triple.head = EntityId(pick_entity(rng));
      } while (s.triple.head == positive.head);
    } else {
      s.replaced = Side::tail;
      do {
        s.triple.tail = EntityId(pick_entity(rng));
      } while (s.triple.tail == positive.tail);
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace ndrl
