#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ndrl/desc_attention.hpp"
#include "ndrl/synthetic.hpp"
#include "test_util.hpp"

using namespace ndrl;
using ndrl::testing::ent;
using ndrl::testing::graph_of;

namespace {

DescAttentionParams identity_params(Eigen::Index d, Vector z) {
  DescAttentionParams p;
  p.projection = Matrix::Identity(d, d);
  p.attention = Matrix::Identity(d, d);
  p.attention_vector = std::move(z);
  return p;
}

}  // namespace

TEST(DescAggregate, OneSentenceIsItsProjection) {
  Rng rng(1);
  const auto p = DescAttentionParams::xavier(3, 2, rng);
  const Matrix s = Matrix::Random(1, 3);
  const auto agg = aggregate_description(RowVector::Random(2), s, p);
  ASSERT_TRUE(agg);
  EXPECT_EQ(agg->weights[0], 1.0);
  EXPECT_TRUE(agg->value.isApprox(s * p.projection, 1e-15));
}

TEST(DescAggregate, IdenticalSentencesMatchOne) {
  Rng rng(2);
  const auto p = DescAttentionParams::xavier(3, 2, rng);
  const RowVector row = RowVector::Random(3);
  Matrix two(2, 3);
  two << row, row;
  const RowVector h = RowVector::Random(2);
  const auto a = aggregate_description(h, two, p);
  const auto b = aggregate_description(h, Matrix(row), p);
  EXPECT_NEAR(a->weights[0], 0.5, 1e-15);
  EXPECT_TRUE(a->value.isApprox(b->value, 1e-14));
  const auto m = mean_description(two, p);
  EXPECT_TRUE(a->value.isApprox(*m, 1e-14));
}

TEST(DescAggregate, HandComputedWeights) {
  Vector z(4);
  z << 0.5, -1.0, 2.0, 1.0;
  const auto p = identity_params(2, z);
  RowVector h(2);
  h << 1.0, 1.0;
  Matrix s(2, 2);
  s << 1.0, 0.0,   // logit 0.5 - 1 + 2 = 1.5
      -1.0, 0.5;   // raw -0.5 - 2 + 0.5 = -2.0 -> LeakyReLU -0.4
  const auto agg = aggregate_description(h, s, p);
  const double e0 = std::exp(1.5), e1 = std::exp(-0.4);
  const double a0 = e0 / (e0 + e1), a1 = e1 / (e0 + e1);
  EXPECT_NEAR(agg->weights[0], a0, 1e-15);
  EXPECT_NEAR(agg->value[0], a0 * 1.0 + a1 * -1.0, 1e-15);
  EXPECT_NEAR(agg->value[1], a1 * 0.5, 1e-15);
}

TEST(DescAggregate, EmptyIsAbsent) {
  Rng rng(3);
  const auto p = DescAttentionParams::xavier(3, 2, rng);
  EXPECT_FALSE(aggregate_description(RowVector::Zero(2), Matrix(0, 3), p));
  EXPECT_FALSE(mean_description(Matrix(0, 3), p));
  EXPECT_THROW(aggregate_description(RowVector::Zero(2), Matrix::Zero(1, 4), p), ShapeError);
}

TEST(MeanDescription, Examples) {
  const auto p = identity_params(2, Vector::Zero(4));
  Matrix s(2, 2);
  s << 2, 0, 0, 2;
  const auto m = mean_description(s, p);
  EXPECT_EQ((*m)[0], 1.0);
  EXPECT_EQ((*m)[1], 1.0);
  EXPECT_EQ(*mean_description(s.topRows(1), p), s.row(0));
}

TEST(DescribeAll, AbsentEntitiesAreFlaggedAndZero) {
  const auto kg = graph_of("a\tr\tb\nb\tr\tc\n");
  DescriptionBank bank(3, 2);
  bank.set(ent(kg, "b"), Matrix::Random(2, 2));
  Rng rng(4);
  const auto p = DescAttentionParams::xavier(2, 3, rng);
  const Matrix h = Matrix::Random(3, 3);
  const auto fwd = describe_all(h, bank, p, DescMode::attention);
  EXPECT_FALSE(fwd.present[0]);
  EXPECT_TRUE(fwd.present[1]);
  EXPECT_EQ(fwd.values.row(0), RowVector::Zero(3));
  const auto direct = aggregate_description(h.row(1), bank.sentences(EntityId(1)), p);
  EXPECT_TRUE(fwd.values.row(1).isApprox(direct->value, 1e-14));
  const auto mean = describe_all(h, bank, p, DescMode::mean);
  EXPECT_TRUE(mean.values.row(1).isApprox(*mean_description(bank.sentences(EntityId(1)), p), 1e-14));
}

TEST(DescriptionBank, RejectsWrongDimensionAndUnknownEntity) {
  DescriptionBank bank(2, 3);
  EXPECT_THROW(bank.set(EntityId(0), Matrix::Zero(1, 2)), ShapeError);
  EXPECT_THROW(bank.set(EntityId(5), Matrix::Zero(1, 3)), LookupError);
  EXPECT_FALSE(bank.has(EntityId(0)));
}

// ---------------------------------------------------------------------------

TEST(SentenceFile, RoundTripsBitExactly) {
  SyntheticSpec spec;
  spec.entities = 25;
  const auto kg = generate_synthetic(spec).graph;
  DescriptionSpec ds;
  ds.dim = 5;
  const auto bank = generate_descriptions(kg, ds);
  std::stringstream io;
  write_sentence_vectors(io, kg, bank);
  const auto back = read_sentence_vectors(io, kg);
  ASSERT_EQ(back.dim(), 5u);
  EXPECT_EQ(back.covered(), bank.covered());
  for (std::size_t e = 0; e < kg.num_entities(); ++e) {
    EXPECT_EQ(back.sentences(EntityId(e)), bank.sentences(EntityId(e)));
  }
}

TEST(SentenceFile, SkipsAndCountsUnknownLabels) {
  const auto kg = graph_of("a\tr\tb\n");
  std::istringstream in("#dim 2\na\t0\t1,2\nzz\t0\t3,4\nzz\t1\t5,6\nb\t0\t0,1\n");
  SentenceFileStats stats;
  const auto bank = read_sentence_vectors(in, kg, &stats);
  EXPECT_EQ(stats.lines, 4u);
  EXPECT_EQ(stats.unknown_entities, 1u);
  EXPECT_EQ(bank.covered(), 2u);
}

TEST(SentenceFile, Errors) {
  const auto kg = graph_of("a\tr\tb\n");
  auto parse = [&](const std::string& text) {
    std::istringstream in(text);
    return read_sentence_vectors(in, kg);
  };
  EXPECT_THROW(parse("a\t0\t1,2\n"), ParseError);          // no header
  EXPECT_THROW(parse("#dim 2\na\t0\t1,2,3\n"), ParseError);  // wrong width
  EXPECT_THROW(parse("#dim 2\na\t1\t1,2\n"), ParseError);    // index gap
  EXPECT_THROW(parse("#dim 0\n"), ParseError);
  try {
    parse("#dim 2\na\t0\t1,2\nb\t0\t1,x\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(load_sentence_vectors("/nonexistent/vectors.txt", kg), IoError);
}

TEST(SyntheticDescriptions, CoverageIsRounded) {
  SyntheticSpec spec;
  spec.entities = 300;
  const auto kg = generate_synthetic(spec).graph;
  DescriptionSpec ds;
  ds.coverage = 0.6;
  const auto bank = generate_descriptions(kg, ds);
  EXPECT_EQ(bank.covered(), 180u);
  for (std::size_t e = 0; e < kg.num_entities(); ++e) {
    const auto& s = bank.sentences(EntityId(e));
    if (s.rows() == 0) continue;
    EXPECT_GE(s.rows(), 1);
    EXPECT_LE(s.rows(), 3);
  }
}
