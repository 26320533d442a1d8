#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "ndrl/kg_store.hpp"
#include "ndrl/synthetic.hpp"
#include "test_util.hpp"

using namespace ndrl;
using ndrl::testing::ent;
using ndrl::testing::graph_of;
using ndrl::testing::rel;

TEST(ReadTriples, BuildsVocabulariesAndTriples) {
  const auto kg = graph_of("a\tinclude\tb\na\trequire\tc\n");
  EXPECT_EQ(kg.num_entities(), 3u);
  EXPECT_EQ(kg.num_relations(), 2u);
  EXPECT_EQ(kg.size(), 2u);
  EXPECT_TRUE(kg.contains(ndrl::testing::triple(kg, "a", "require", "c")));
}

TEST(ReadTriples, DeduplicatesAndCounts) {
  const auto kg = graph_of("a\tinclude\tb\na\tinclude\tb\n");
  EXPECT_EQ(kg.size(), 1u);
  EXPECT_EQ(kg.duplicate_count(), 1u);
}

TEST(ReadTriples, ArityErrorNamesTheLine) {
  try {
    graph_of("a\tinclude\tb\n\na\tinclude\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ReadTriples, RejectsEmptyFieldsAndEmptyFiles) {
  EXPECT_THROW(graph_of("a\t\tb\n"), ParseError);
  EXPECT_THROW(graph_of("# only a comment\n\n"), EmptyGraphError);
}

TEST(ReadTriples, SkipsCommentsAndCarriageReturns) {
  const auto kg = graph_of("# header\r\na\tr\tb\r\n");
  EXPECT_EQ(kg.size(), 1u);
  EXPECT_TRUE(kg.entity("b").has_value());
}

TEST(ReadTriples, MissingFileIsIoError) { EXPECT_THROW(load_triples("/nonexistent/file.tsv"), IoError); }

TEST(WriteTriples, RoundTrips) {
  const auto kg = graph_of("a\tr\tb\nb\ts\tc\nc\tr\ta\n");
  std::ostringstream out;
  write_triples(out, kg, kg.triples());
  const auto again = graph_of(out.str());
  ASSERT_EQ(again.size(), kg.size());
  for (std::size_t i = 0; i < kg.size(); ++i) EXPECT_EQ(again.triples()[i], kg.triples()[i]);
}

TEST(Graph, RejectsOutOfRangeHandles) {
  Vocabulary e;
  e.intern("a");
  Vocabulary r;
  r.intern("r");
  const std::vector<Triple> bad{{EntityId(0), RelationId(0), EntityId(1)}};
  EXPECT_THROW(KnowledgeGraph(e, r, bad), LookupError);
  const auto kg = graph_of("a\tr\tb\n");
  EXPECT_THROW(kg.degree(EntityId(7)), LookupError);
}

// ---------------------------------------------------------------------------

TEST(Split, ExactDivision) {
  std::string text;
  for (int i = 0; i < 1000; ++i) text += "h" + std::to_string(i) + "\tr\tt" + std::to_string(i) + "\n";
  const auto kg = graph_of(text);
  const auto s = split_dataset(kg, {}, 42);
  EXPECT_EQ(s.train.size(), 700u);
  EXPECT_EQ(s.valid.size(), 150u);
  EXPECT_EQ(s.test.size(), 150u);
}

TEST(Split, RemainderGoesToTrain) {
  const std::size_t n = 9869;
  // Integer oracle: valid and test are floor(n * 15 / 100).
  const std::size_t held_out = n * 15 / 100;
  std::string text;
  for (std::size_t i = 0; i < n; ++i) text += "h" + std::to_string(i) + "\tr\tt" + std::to_string(i) + "\n";
  const auto kg = graph_of(text);
  const auto s = split_dataset(kg, {}, 1);
  EXPECT_EQ(s.valid.size(), held_out);
  EXPECT_EQ(s.test.size(), held_out);
  EXPECT_EQ(s.train.size(), n - 2 * held_out);
  EXPECT_EQ(s.train.size(), 6909u);
  EXPECT_EQ(s.test.size(), 1480u);
}

TEST(Split, DeterministicAndPartitioning) {
  const auto kg = generate_synthetic({}).graph;
  const auto a = split_dataset(kg, {}, 9);
  const auto b = split_dataset(kg, {}, 9);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.valid, b.valid);
  EXPECT_EQ(a.test, b.test);
  std::set<Triple> all;
  for (const auto* part : {&a.train, &a.valid, &a.test}) all.insert(part->begin(), part->end());
  EXPECT_EQ(all.size(), kg.size());
  const auto c = split_dataset(kg, {}, 10);
  EXPECT_NE(a.test, c.test);
}

TEST(Split, RejectsDegenerateRatios) {
  const auto kg = graph_of("a\tr\tb\n");
  EXPECT_THROW(split_dataset(kg, {0.0, 0.0, 0.0}, 1), ConfigError);
  EXPECT_THROW(split_dataset(kg, {-1.0, 1.0, 1.0}, 1), ConfigError);
}

// ---------------------------------------------------------------------------

TEST(Neighborhood, IncomingOnly) {
  const auto kg = graph_of("a\tr\tb\n");
  const auto nb = neighborhood(kg, ent(kg, "b"), false);
  ASSERT_EQ(nb.size(), 1u);
  EXPECT_EQ(nb[0], (Neighbor{ent(kg, "a"), rel(kg, "r"), Direction::in}));
  EXPECT_TRUE(neighborhood(kg, ent(kg, "a"), false).empty());
}

TEST(Neighborhood, WithInverseFollowsTripleOrder) {
  const auto kg = graph_of("a\tr\tb\nb\ts\ta\n");
  const auto nb = neighborhood(kg, ent(kg, "a"), true);
  ASSERT_EQ(nb.size(), 2u);
  EXPECT_EQ(nb[0], (Neighbor{ent(kg, "b"), rel(kg, "r"), Direction::out}));
  EXPECT_EQ(nb[1], (Neighbor{ent(kg, "b"), rel(kg, "s"), Direction::in}));
}

TEST(Neighborhood, SizesMatchDegreeOnRandomGraphs) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::string text;
    std::uniform_int_distribution<int> pick(0, 9);
    for (int i = 0; i < 30; ++i) {
      text += "e" + std::to_string(pick(rng)) + "\tr" + std::to_string(pick(rng) % 3) + "\te" +
              std::to_string(pick(rng)) + "\n";
    }
    const auto kg = graph_of(text);
    std::size_t degree_sum = 0;
    for (std::size_t e = 0; e < kg.num_entities(); ++e) {
      const EntityId id(e);
      EXPECT_EQ(neighborhood(kg, id, true).size(), kg.degree(id));
      EXPECT_EQ(neighborhood(kg, id, false).size(), kg.by_tail(id).size());
      degree_sum += kg.degree(id);
    }
    EXPECT_EQ(degree_sum, 2 * kg.size());
  }
}

// ---------------------------------------------------------------------------

namespace {
const char* kStar = "c\tr\tl1\nc\tr\tl2\nc\tr\tl3\nc\tr\tl4\n";

// Brute force: scan every triple for incidence, collect neighbor set, sum degrees.
double richness_oracle(const KnowledgeGraph& kg, std::size_t e, double k) {
  auto degree = [&](std::size_t x) {
    std::size_t d = 0;
    for (const auto& t : kg.triples()) d += (t.head.index() == x) + (t.tail.index() == x);
    return d;
  };
  std::set<std::size_t> nbrs;
  for (const auto& t : kg.triples()) {
    if (t.head.index() == e && t.tail.index() != e) nbrs.insert(t.tail.index());
    if (t.tail.index() == e && t.head.index() != e) nbrs.insert(t.head.index());
  }
  double sum = 0;
  for (auto n : nbrs) sum += static_cast<double>(degree(n));
  return static_cast<double>(degree(e)) + k * sum;
}
}  // namespace

TEST(Richness, StarGraph) {
  const auto kg = graph_of(kStar);
  EXPECT_EQ(structure_richness(kg, ent(kg, "c"), {0.5, 12}), 6.0);
  EXPECT_EQ(richness_oracle(kg, ent(kg, "c").index(), 0.5), 6.0);
  for (const char* leaf : {"l1", "l2", "l3", "l4"}) {
    EXPECT_EQ(structure_richness(kg, ent(kg, leaf), {0.5, 12}), 3.0);
  }
}

TEST(Richness, IsolatedEntityIsZero) {
  Vocabulary e;
  e.intern("a");
  e.intern("b");
  e.intern("lonely");
  Vocabulary r;
  r.intern("r");
  const std::vector<Triple> ts{{EntityId(0), RelationId(0), EntityId(1)}};
  const KnowledgeGraph kg(e, r, ts);
  for (double k : {0.0, 0.5, 1.0}) EXPECT_EQ(structure_richness(kg, EntityId(2), {k, 1}), 0.0);
}

TEST(Richness, MatchesBruteForceOnSyntheticGraph) {
  SyntheticSpec spec;
  spec.entities = 80;
  const auto kg = generate_synthetic(spec).graph;
  for (double k : {0.0, 0.25, 1.0}) {
    const auto all = structure_richness_all(kg, {k, 12});
    for (std::size_t e = 0; e < kg.num_entities(); ++e) {
      EXPECT_DOUBLE_EQ(all[e], richness_oracle(kg, e, k)) << "entity " << e;
      EXPECT_GE(all[e], static_cast<double>(kg.degree(EntityId(e))));
    }
  }
}

TEST(Richness, ValidatesK) {
  const auto kg = graph_of(kStar);
  RichnessConfig bad{1.5, 12};
  EXPECT_THROW(bad.validate(), ConfigError);
}
