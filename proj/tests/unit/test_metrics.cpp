#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

#include "completest/metrics.hpp"

namespace m = completest::metrics;

namespace {

std::string random_string(std::mt19937& rng, std::size_t max_len, std::string_view alphabet) {
  std::string s(rng() % (max_len + 1), ' ');
  for (auto& c : s) c = alphabet[rng() % alphabet.size()];
  return s;
}

}  // namespace

TEST(EditSimilarity, KittenSitting) {
  EXPECT_EQ(m::levenshtein("kitten", "sitting"), 3u);
  EXPECT_NEAR(m::edit_similarity("kitten", "sitting"), 1.0 - 3.0 / 7.0, 1e-12);
}

TEST(EditSimilarity, IdentityAndTotalDeletion) {
  for (const char* s : {"", "a", "hello world", "\xc3\xa9t\xc3\xa9"}) EXPECT_EQ(m::edit_similarity(s, s), 1.0);
  EXPECT_EQ(m::edit_similarity("abc", ""), 0.0);
  EXPECT_EQ(m::edit_similarity("", "abc"), 0.0);
}

TEST(EditSimilarity, CountsCodePointsNotBytes) {
  // "é" is two bytes but one scalar value.
  EXPECT_EQ(m::levenshtein("\xc3\xa9", "e"), 1u);
  EXPECT_NEAR(m::edit_similarity("caf\xc3\xa9", "cafe"), 0.75, 1e-12);
}

TEST(EditSimilarity, MalformedUtf8DecodesToReplacement) {
  EXPECT_EQ(m::decode_utf8("a\xff"), (std::u32string{U'a', 0xFFFD}));
  EXPECT_EQ(m::decode_utf8("\xe2\x82"), (std::u32string{0xFFFD, 0xFFFD}));
}

TEST(EditSimilarity, AgreesWithRecursiveOracleOnRandomPairs) {
  std::mt19937 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_string(rng, 20, "abcd");
    const auto b = random_string(rng, 20, "abcd");
    EXPECT_EQ(m::levenshtein(a, b), oracle::edit_distance(oracle::widen(a), oracle::widen(b)));
    EXPECT_DOUBLE_EQ(m::edit_similarity(a, b), oracle::edit_similarity(a, b));
  }
}

TEST(EditSimilarity, SymmetricAndTriangleInequality) {
  std::mt19937 rng(13);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_string(rng, 15, "abc");
    const auto b = random_string(rng, 15, "abc");
    const auto c = random_string(rng, 15, "abc");
    EXPECT_EQ(m::edit_similarity(a, b), m::edit_similarity(b, a));
    EXPECT_LE(m::levenshtein(a, c), m::levenshtein(a, b) + m::levenshtein(b, c));
  }
}

TEST(Bleu, PerfectMatchIsOne) {
  EXPECT_DOUBLE_EQ(m::bleu("a b c d", "a b c d"), 1.0);
  EXPECT_DOUBLE_EQ(m::bleu("return x + y", "return  x\n+ y"), 1.0);
}

TEST(Bleu, ZeroOverlapHitsSmoothingFloor) {
  // Four candidate tokens, none shared: precisions 1/5, 1/4, 1/3, 1/2; lengths equal.
  const double expected = std::pow((1.0 / 5) * (1.0 / 4) * (1.0 / 3) * (1.0 / 2), 0.25);
  EXPECT_NEAR(m::bleu("a b c d", "e f g h"), expected, 1e-12);
}

TEST(Bleu, HalfLengthPrefixAppliesBrevityPenalty) {
  // Candidate = first 4 of 8 reference tokens: every precision (k+1)/(k+1) = 1.
  EXPECT_NEAR(m::bleu("a b c d", "a b c d e f g h"), std::exp(1.0 - 2.0), 1e-12);
}

TEST(Bleu, EmptyInputsScoreZero) {
  EXPECT_EQ(m::bleu("", "a b"), 0.0);
  EXPECT_EQ(m::bleu("a b", ""), 0.0);
  EXPECT_EQ(m::bleu("  ", "\n"), 0.0);
}

TEST(Bleu, ClipsRepeatedNgrams) {
  // "the the the the" vs "the cat": unigram matches clipped to 1.
  const double p1 = (1.0 + 1) / (4 + 1);
  const double p2 = (0.0 + 1) / (3 + 1);
  const double p3 = (0.0 + 1) / (2 + 1);
  const double p4 = (0.0 + 1) / (1 + 1);
  EXPECT_NEAR(m::bleu("the the the the", "the cat"), std::pow(p1 * p2 * p3 * p4, 0.25), 1e-12);
}

TEST(Bleu, AlwaysInUnitInterval) {
  std::mt19937 rng(17);
  for (int i = 0; i < 500; ++i) {
    std::string a, b;
    for (std::size_t k = rng() % 12; k > 0; --k) a += std::string(1, static_cast<char>('a' + rng() % 4)) + " ";
    for (std::size_t k = rng() % 12; k > 0; --k) b += std::string(1, static_cast<char>('a' + rng() % 4)) + " ";
    const double v = m::bleu(a, b);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    if (m::whitespace_tokens(a).size() >= 4) EXPECT_NEAR(m::bleu(a, a), 1.0, 1e-12);
  }
}

TEST(ImprovementRatio, Arithmetic) {
  EXPECT_NEAR(*m::improvement_ratio(0.5, 0.7), 0.4, 1e-12);
  EXPECT_EQ(*m::improvement_ratio(0.3, 0.3), 0.0);
  EXPECT_FALSE(m::improvement_ratio(0.0, 0.3).has_value());
}
