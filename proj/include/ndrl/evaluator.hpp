#pragma once

// Link-prediction ranking under the raw and filtered protocols.
//
// A scorer is any callable `double(const Triple&)`; lower scores rank first.
// Ties use the average rank: 1 + #strictly-better + #tied / 2.

#include <concepts>
#include <initializer_list>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ndrl/errors.hpp"
#include "ndrl/kg_store.hpp"
#include "ndrl/negative_sampling.hpp"
#include "ndrl/text_io.hpp"

namespace ndrl {

template <typename Scorer>
concept TripleScoring = requires(const Scorer& s, const Triple& t) {
  { s(t) } -> std::convertible_to<double>;
};

struct QueryRanks {
  double raw = 0.0;
  double filtered = 0.0;
};

inline Triple substitute(const Triple& t, Side side, std::size_t entity) {
  Triple c = t;
  if (side == Side::head) c.head = EntityId(entity);
  else c.tail = EntityId(entity);
  return c;
}

inline void require_entity_side(Side side) {
  if (side != Side::head && side != Side::tail) throw ConfigError("ranking side must be head or tail");
}

/// Raw and filtered rank of the true entity in one sweep over candidates.
/// `known` may be null (no filtering); the test triple itself is never filtered.
template <TripleScoring Scorer>
QueryRanks rank_query(const Scorer& score, std::size_t num_entities, const Triple& triple, Side side,
                      const TripleSet* known) {
  require_entity_side(side);
  const double truth = score(triple);
  const std::size_t true_entity = side == Side::head ? triple.head.index() : triple.tail.index();
  std::size_t better_raw = 0, tied_raw = 0, better_filtered = 0, tied_filtered = 0;
  for (std::size_t e = 0; e < num_entities; ++e) {
    if (e == true_entity) continue;
    const Triple candidate = substitute(triple, side, e);
    const double s = score(candidate);
    const bool filtered_out = known && known->contains(candidate);
    if (s < truth) {
      ++better_raw;
      if (!filtered_out) ++better_filtered;
    } else if (s == truth) {
      ++tied_raw;
      if (!filtered_out) ++tied_filtered;
    }
  }
  return {1.0 + static_cast<double>(better_raw) + 0.5 * static_cast<double>(tied_raw),
          1.0 + static_cast<double>(better_filtered) + 0.5 * static_cast<double>(tied_filtered)};
}

template <TripleScoring Scorer>
double rank_entity_side(const Scorer& score, const KnowledgeGraph& kg, const Triple& triple, Side side,
                        const TripleSet* known) {
  kg.check(triple.head);
  kg.check(triple.tail);
  const QueryRanks r = rank_query(score, kg.num_entities(), triple, side, known);
  return known ? r.filtered : r.raw;
}

struct Metrics {
  double mr = 0.0;
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits10 = 0.0;
};

struct EvalReport {
  Metrics raw;
  Metrics filter;
  std::size_t queries = 0;
};

inline Metrics summarize_ranks(std::span<const double> ranks) {
  Metrics m;
  if (ranks.empty()) return m;
  for (double r : ranks) {
    m.mr += r;
    m.mrr += 1.0 / r;
    m.hits1 += r <= 1.0 ? 1.0 : 0.0;
    m.hits10 += r <= 10.0 ? 1.0 : 0.0;
  }
  const auto n = static_cast<double>(ranks.size());
  m.mr /= n;
  m.mrr /= n;
  m.hits1 /= n;
  m.hits10 /= n;
  return m;
}

/// Ranks head and tail of every test triple (2 |test| queries), raw and filtered.
template <TripleScoring Scorer>
EvalReport evaluate(const Scorer& score, const KnowledgeGraph& kg, std::span<const Triple> test,
                    const TripleSet& known, std::vector<QueryRanks>* per_query = nullptr) {
  if (test.empty()) throw ConfigError("evaluation needs a non-empty test set");
  std::vector<double> raw;
  std::vector<double> filtered;
  raw.reserve(2 * test.size());
  filtered.reserve(2 * test.size());
  for (const Triple& t : test) {
    kg.check(t.head);
    kg.check(t.tail);
    for (Side side : {Side::head, Side::tail}) {
      const QueryRanks r = rank_query(score, kg.num_entities(), t, side, &known);
      raw.push_back(r.raw);
      filtered.push_back(r.filtered);
      if (per_query) per_query->push_back(r);
    }
  }
  EvalReport report;
  report.raw = summarize_ranks(raw);
  report.filter = summarize_ranks(filtered);
  report.queries = raw.size();
  return report;
}

inline TripleSet union_of(std::initializer_list<std::span<const Triple>> parts) {
  TripleSet out;
  for (auto part : parts) out.insert(part.begin(), part.end());
  return out;
}

// ---------------------------------------------------------------------------
// Formatting

/// Metric x {filter, raw} table; hits as percentages.
inline std::string format_report_table(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed;
  os << std::left << std::setw(10) << "metric" << std::right << std::setw(12) << "filter" << std::setw(12) << "raw"
     << '\n';
  auto row = [&](const char* name, double f, double raw, int precision) {
    os << std::left << std::setw(10) << name << std::right << std::setprecision(precision) << std::setw(12) << f
       << std::setw(12) << raw << '\n';
  };
  row("hits@1/%", 100.0 * r.filter.hits1, 100.0 * r.raw.hits1, 2);
  row("hits@10/%", 100.0 * r.filter.hits10, 100.0 * r.raw.hits10, 2);
  row("MR", r.filter.mr, r.raw.mr, 2);
  row("MRR", r.filter.mrr, r.raw.mrr, 3);
  return os.str();
}

inline std::string format_report_kv(const EvalReport& r) {
  std::ostringstream os;
  os << "queries=" << r.queries << '\n';
  for (const auto& [prefix, m] : {std::pair{"filter", r.filter}, std::pair{"raw", r.raw}}) {
    os << prefix << ".mr=" << format_double(m.mr) << '\n'
       << prefix << ".mrr=" << format_double(m.mrr) << '\n'
       << prefix << ".hits1=" << format_double(m.hits1) << '\n'
       << prefix << ".hits10=" << format_double(m.hits10) << '\n';
  }
  return os.str();
}

}  // namespace ndrl
