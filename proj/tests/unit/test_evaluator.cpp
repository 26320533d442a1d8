#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "ndrl/evaluator.hpp"
#include "ndrl/synthetic.hpp"
#include "ndrl/transe.hpp"
#include "test_util.hpp"

using namespace ndrl;
using ndrl::testing::graph_of;

namespace {

// Scores the tail of (h, r, t) from a fixed table keyed by entity index.
struct TableScorer {
  std::map<std::size_t, double> tail_score;
  double operator()(const Triple& t) const { return tail_score.at(t.tail.index()); }
};

struct ConstantScorer {
  double operator()(const Triple&) const { return 0.25; }
};

// Exhaustive oracle: materialise every candidate's score, sort, and read the
// average position of the true entity's tie group.
double oracle_rank(const TransEScorer& s, const KnowledgeGraph& kg, const Triple& t, Side side, const TripleSet* known) {
  std::vector<std::pair<double, bool>> scored;  // (score, is_truth)
  for (std::size_t e = 0; e < kg.num_entities(); ++e) {
    Triple c = t;
    (side == Side::head ? c.head : c.tail) = EntityId(e);
    const bool truth = c == t;
    if (!truth && known && known->contains(c)) continue;
    scored.emplace_back(s(c), truth);
  }
  std::sort(scored.begin(), scored.end());
  double truth_score = 0;
  for (auto& [v, is_truth] : scored) {
    if (is_truth) truth_score = v;
  }
  std::size_t first = scored.size(), last = 0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (scored[i].first == truth_score) {
      first = std::min(first, i);
      last = i;
    }
  }
  return 1.0 + (static_cast<double>(first) + static_cast<double>(last)) / 2.0;
}

}  // namespace

TEST(RankQuery, StrictMinimumAndAllTies) {
  const auto kg = graph_of("e0\tr\te1\ne1\tr\te2\n");
  const Triple t{EntityId(0), RelationId(0), EntityId(0)};
  TableScorer s{{{0, 0.1}, {1, 0.5}, {2, 0.9}}};
  EXPECT_EQ(rank_query(s, 3, t, Side::tail, nullptr).raw, 1.0);
  TableScorer tie{{{0, 0.5}, {1, 0.5}, {2, 0.5}}};
  EXPECT_EQ(rank_query(tie, 3, t, Side::tail, nullptr).raw, 2.0);
  EXPECT_THROW(rank_query(s, 3, t, Side::relation, nullptr), ConfigError);
}

TEST(RankQuery, FilteringRemovesKnownCompetitors) {
  const auto kg = graph_of("e0\tr\te1\ne0\tr\te2\n");
  const Triple test{EntityId(0), RelationId(0), EntityId(2)};
  TableScorer s{{{0, 0.9}, {1, 0.1}, {2, 0.5}}};
  const TripleSet known = kg.triple_set();
  const auto r = rank_query(s, 3, test, Side::tail, &known);
  EXPECT_EQ(r.raw, 2.0);
  EXPECT_EQ(r.filtered, 1.0);
  EXPECT_EQ(rank_entity_side(s, kg, test, Side::tail, &known), 1.0);
  EXPECT_EQ(rank_entity_side(s, kg, test, Side::tail, nullptr), 2.0);
}

TEST(Summarize, Arithmetic) {
  const double ranks[] = {1, 2, 4};
  const Metrics m = summarize_ranks(ranks);
  EXPECT_NEAR(m.mr, 7.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.mrr, (1 + 0.5 + 0.25) / 3.0, 1e-15);
  EXPECT_NEAR(m.hits1, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(m.hits10, 1.0);
}

TEST(Evaluate, UniformScoresGiveMidRank) {
  SyntheticSpec spec;
  spec.entities = 17;
  const auto kg = generate_synthetic(spec).graph;
  const TripleSet none;
  const auto r = evaluate(ConstantScorer{}, kg, kg.triples(), none);
  EXPECT_EQ(r.raw.mr, (17.0 + 1.0) / 2.0);
  EXPECT_EQ(r.queries, 2 * kg.size());
  EXPECT_THROW(evaluate(ConstantScorer{}, kg, std::span<const Triple>{}, none), ConfigError);
}

TEST(Evaluate, MatchesExhaustiveOracle) {
  SyntheticSpec spec;
  spec.entities = 30;
  const auto kg = generate_synthetic(spec).graph;
  Rng rng(11);
  EmbeddingTable table = xavier_embeddings(kg.num_entities(), kg.num_relations(), 3, rng);
  // Quantise so that exact ties occur.
  table.entities = (table.entities * 4.0).array().round() / 4.0;
  table.relations = (table.relations * 4.0).array().round() / 4.0;
  const TransEScorer s{&table};
  const TripleSet known = kg.triple_set();
  std::uniform_int_distribution<std::size_t> pick(0, kg.size() - 1);
  for (int q = 0; q < 100; ++q) {
    const Triple t = kg.triples()[pick(rng)];
    const Side side = q % 2 ? Side::head : Side::tail;
    const auto r = rank_query(s, kg.num_entities(), t, side, &known);
    EXPECT_EQ(r.raw, oracle_rank(s, kg, t, side, nullptr));
    EXPECT_EQ(r.filtered, oracle_rank(s, kg, t, side, &known));
    EXPECT_LE(r.filtered, r.raw);
  }
}

TEST(Evaluate, FilteredNeverWorseThanRaw) {
  SyntheticSpec spec;
  spec.entities = 60;
  const auto kg = generate_synthetic(spec).graph;
  Rng rng(5);
  const EmbeddingTable table = xavier_embeddings(kg.num_entities(), kg.num_relations(), 4, rng);
  std::vector<QueryRanks> per;
  const auto r = evaluate(TransEScorer{&table}, kg, kg.triples(), kg.triple_set(), &per);
  for (const auto& q : per) EXPECT_LE(q.filtered, q.raw);
  EXPECT_LE(r.filter.mr, r.raw.mr);
  EXPECT_GE(r.filter.mrr, r.raw.mrr);
}

TEST(Format, ReportContainsEveryMetric) {
  EvalReport r;
  r.filter = {2.5, 0.5, 0.25, 1.0};
  r.raw = {3.0, 0.4, 0.2, 0.9};
  r.queries = 4;
  const std::string table = format_report_table(r);
  for (const char* s : {"hits@1", "hits@10", "MR", "MRR", "filter", "raw", "25.00", "90.00"}) {
    EXPECT_NE(table.find(s), std::string::npos) << s;
  }
  EXPECT_NE(format_report_kv(r).find("filter.mr=2.5\n"), std::string::npos);
}
