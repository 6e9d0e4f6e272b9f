#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "pragsynth/domain.hpp"

namespace pragsynth {
namespace {

std::string csv(const MeaningMatrix& m) {
  std::ostringstream os;
  write_csv(os, m);
  return os.str();
}

TEST(UtteranceUniverse, SizesAndOrder) {
  EXPECT_EQ(utterance_universe(10).size(), 2047u);
  const auto one = utterance_universe(1);
  ASSERT_EQ(one.size(), 3u);
  EXPECT_EQ(one[0].str(), "");
  EXPECT_EQ(one[1].str(), "0");
  EXPECT_EQ(one[2].str(), "1");
  const auto zero = utterance_universe(0);
  ASSERT_EQ(zero.size(), 1u);
  EXPECT_EQ(zero[0].str(), "");
  const auto three = utterance_universe(3);
  EXPECT_EQ(three[3].str(), "00");
  EXPECT_EQ(three[6].str(), "11");
  EXPECT_EQ(three.back().str(), "111");
}

TEST(BuildMatrix, ReproducesDemoMatrix) {
  EXPECT_EQ(csv(fixtures::demo()), fixtures::read_file("demo_matrix.csv"));
}

TEST(BuildMatrix, UniversalConceptHasFullColumn) {
  const auto m = build_matrix({parse("[01]*")}, utterance_universe(4));
  for (const auto& row : m.rows()) EXPECT_TRUE(row.test(0));
}

TEST(BuildMatrix, ColumnMatchesOracle) {
  const auto strings = std::vector{BinaryString::parse(""), BinaryString::parse("00"),
                                   BinaryString::parse("01")};
  const auto m = build_matrix({parse("0{2}")}, strings);
  const auto atoms = oracle::parse("0{2}");
  for (std::size_t i = 0; i < strings.size(); ++i) {
    EXPECT_EQ(m.consistent(i, 0), oracle::matches(atoms, strings[i].str()));
  }
  EXPECT_FALSE(m.consistent(0, 0));
  EXPECT_TRUE(m.consistent(1, 0));
  EXPECT_FALSE(m.consistent(2, 0));
}

TEST(SignExtend, ReproducesSignedDemoMatrix) {
  const auto signed_m = sign_extend(fixtures::demo());
  EXPECT_TRUE(signed_m.is_signed());
  EXPECT_EQ(signed_m.num_utterances(), 8u);
  EXPECT_EQ(csv(signed_m), fixtures::read_file("demo_signed_matrix.csv"));
  EXPECT_THROW(sign_extend(signed_m), Error);
}

TEST(SignExtend, ComplementRows) {
  const auto m = build_domain({parse("[01]*"), parse("1+0{1}"), parse("0{2}")},
                              utterance_universe(5));
  const auto& s = m.signed_matrix;
  for (std::size_t i = 0; i < s.num_utterances(); i += 2) {
    EXPECT_EQ(s.utterance(i).sign, Sign::Positive);
    EXPECT_EQ(s.utterance(i + 1).sign, Sign::Negative);
    EXPECT_EQ(s.utterance(i).text, s.utterance(i + 1).text);
    EXPECT_EQ(s.row(i) ^ s.row(i + 1), ConceptSet(3, true));
    EXPECT_FALSE(s.consistent(i + 1, 0));  // [01]* rejects nothing
  }
}

TEST(ConsistentSet, DemoCases) {
  const auto m = fixtures::demo();
  const auto cs = consistent_set(m, ExampleSequence{1, 2});
  EXPECT_EQ(cs.indices(), (std::vector<std::size_t>{0, 3}));
  EXPECT_EQ(consistent_set(m, ExampleSequence{}).count(), 4u);

  const auto s = sign_extend(m);
  const auto none = consistent_set(s, std::vector<Utterance>{{"1100", Sign::Negative}});
  EXPECT_TRUE(none.none());

  try {
    consistent_set(m, std::vector<Utterance>{{"1111", Sign::Unsigned}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownUtterance);
  }
  EXPECT_THROW(consistent_set(m, ExampleSequence{4}), Error);
}

// Monotonicity, repeat idempotence and signed complement over seeded cases.
TEST(ConsistentSet, Properties) {
  const auto pool = enumerate_grammar(3);
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto concepts = sample_concepts(pool, 1 + uniform_index(rng, 20), rng());
    const auto m = sign_extend(build_matrix(concepts, utterance_universe(4)));
    ExampleSequence d;
    const std::size_t k = uniform_index(rng, 5);
    for (std::size_t i = 0; i < k; ++i) d.push_back(uniform_index(rng, m.num_utterances()));
    const auto base = consistent_set(m, d);
    const std::size_t u = uniform_index(rng, m.num_utterances());
    auto more = d;
    more.push_back(u);
    EXPECT_TRUE(consistent_set(m, more).is_subset_of(base));
    if (!d.empty()) {
      auto repeated = d;
      repeated.push_back(d[uniform_index(rng, d.size())]);
      EXPECT_EQ(consistent_set(m, repeated), base);
    }
    const std::size_t pos = u - (u % 2);
    for (std::size_t j = 0; j < m.num_concepts(); ++j) {
      EXPECT_NE(m.consistent(pos, j), m.consistent(pos + 1, j));
    }
  }
}

TEST(BuildMatrix, OrderEquivariant) {
  auto concepts = fixtures::demo_concepts();
  auto strings = fixtures::demo_strings();
  const auto m = build_matrix(concepts, strings);
  std::vector<std::size_t> cperm{2, 0, 3, 1}, sperm{3, 1, 0, 2};
  std::vector<RegexAst> pc;
  std::vector<BinaryString> ps;
  for (auto j : cperm) pc.push_back(concepts[j]);
  for (auto i : sperm) ps.push_back(strings[i]);
  const auto p = build_matrix(pc, ps);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(p.consistent(i, j), m.consistent(sperm[i], cperm[j]));
    }
  }
}

TEST(MatrixArtifact, RoundTrip) {
  const auto d = build_domain({parse("0{2}"), parse("[01]+0+"), parse("1*")},
                              utterance_universe(3));
  for (const auto* m : {&d.unsigned_matrix, &d.signed_matrix}) {
    std::stringstream ss;
    write_matrix(ss, *m);
    const auto text = ss.str();
    const auto back = read_matrix(ss);
    EXPECT_EQ(back.concepts(), m->concepts());
    EXPECT_EQ(back.utterances(), m->utterances());
    EXPECT_EQ(back.rows(), m->rows());
    EXPECT_EQ(back.is_signed(), m->is_signed());
    EXPECT_EQ(back.max_len(), 3u);
    std::ostringstream again;
    write_matrix(again, back);
    EXPECT_EQ(again.str(), text);
  }
}

TEST(MatrixArtifact, RejectsCorruptInput) {
  std::stringstream bad_version("pragsynth-matrix 9\n");
  EXPECT_THROW(read_matrix(bad_version), Error);
  std::stringstream truncated(
      "pragsynth-matrix 1\nmax_len 1\nsigned 0\nconcepts 1\n0*\nutterances 2\n"
      ". 0000000000000001 \n");
  EXPECT_THROW(read_matrix(truncated), Error);
  std::stringstream stray_bits(
      "pragsynth-matrix 1\nmax_len 1\nsigned 0\nconcepts 1\n0*\nutterances 1\n"
      ". 0000000000000003 \n");
  EXPECT_THROW(read_matrix(stray_bits), Error);
}

TEST(DefaultDomain, FullScale) {
  const auto d = build_domain(DomainConfig{});
  EXPECT_EQ(d.unsigned_matrix.num_concepts(), 350u);
  EXPECT_EQ(d.unsigned_matrix.num_utterances(), 2047u);
  EXPECT_EQ(d.signed_matrix.num_utterances(), 4094u);
  const auto again = build_domain(DomainConfig{});
  EXPECT_EQ(again.unsigned_matrix.concepts(), d.unsigned_matrix.concepts());
}

}  // namespace
}  // namespace pragsynth
