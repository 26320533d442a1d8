#pragma once

// One-relation-circle detection: symmetric pairs, self-loops and transitive
// triangles that a pure translation model cannot fit.

#include <cstdio>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "ndrl/kg_store.hpp"

namespace ndrl {

struct OrcReport {
  std::size_t symmetric_pairs = 0;
  std::size_t self_loops = 0;
  std::size_t triangles = 0;
  std::size_t participating = 0;
  std::size_t total = 0;

  double fraction() const { return total == 0 ? 0.0 : static_cast<double>(participating) / static_cast<double>(total); }
};

/// Symmetric pair: (h,r,t) and (t,r,h), h != t, counted once per unordered pair.
/// Triangle: (a,r,b), (b,r,c), (a,r,c) with a, b, c distinct.
inline OrcReport orc_scan(const KnowledgeGraph& kg) {
  OrcReport report;
  report.total = kg.size();
  std::vector<bool> participates(kg.size(), false);
  const auto& triples = kg.triples();

  // (head, relation, tail) -> index lookups through the by-head index.
  auto find = [&](EntityId h, RelationId r, EntityId t) -> std::ptrdiff_t {
    for (std::size_t idx : kg.by_head(h)) {
      if (triples[idx].relation == r && triples[idx].tail == t) return static_cast<std::ptrdiff_t>(idx);
    }
    return -1;
  };

  for (std::size_t i = 0; i < triples.size(); ++i) {
    const Triple& t = triples[i];
    if (t.head == t.tail) {
      ++report.self_loops;
      participates[i] = true;
      continue;
    }
    const std::ptrdiff_t rev = find(t.tail, t.relation, t.head);
    if (rev >= 0) {
      participates[i] = true;
      if (t.head < t.tail) ++report.symmetric_pairs;
    }
    // t is the (a,r,b) edge; close through b's out-edges under the same relation.
    for (std::size_t j : kg.by_head(t.tail)) {
      const Triple& bc = triples[j];
      if (bc.relation != t.relation || bc.tail == t.head || bc.tail == t.tail) continue;
      const std::ptrdiff_t ac = find(t.head, t.relation, bc.tail);
      if (ac < 0) continue;
      ++report.triangles;
      participates[i] = participates[j] = participates[static_cast<std::size_t>(ac)] = true;
    }
  }
  for (bool p : participates) report.participating += p;
  return report;
}

inline std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * fraction);
  return buf;
}

inline std::string format_orc_report(const OrcReport& r) {
  std::ostringstream os;
  os << "symmetric_pairs=" << r.symmetric_pairs << '\n'
     << "self_loops=" << r.self_loops << '\n'
     << "triangles=" << r.triangles << '\n'
     << "participating=" << r.participating << '\n'
     << "total=" << r.total << '\n'
     << "fraction=" << format_percent(r.fraction()) << '\n';
  return os.str();
}

}  // namespace ndrl
