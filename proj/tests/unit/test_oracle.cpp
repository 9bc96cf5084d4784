#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"

#include "completest/oracle.hpp"

using namespace completest;

namespace {

std::vector<std::vector<double>> dense(const SimilarityMatrix& m) {
  std::vector<std::vector<double>> out(m.size(), std::vector<double>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) out[i][j] = m.at(i, j);
  }
  return out;
}

std::vector<std::size_t> flagged(const OutlierVerdict& v) {
  std::vector<std::size_t> out;
  for (const auto& f : v.flagged) out.push_back(f.index);
  return out;
}

SimilarityMatrix random_matrix(std::mt19937& rng, std::size_t k) {
  // Coarse values so ties with the median occur often.
  SimilarityMatrix m(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) m.set(i, j, static_cast<double>(rng() % 5) / 4.0);
  }
  return m;
}

std::vector<std::string> random_outputs(std::mt19937& rng, std::size_t k) {
  // A shared stem with small perturbations, plus the occasional unrelated output.
  const std::string stem = "return sum(x for x in xs)";
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) {
    std::string s = stem;
    if (rng() % 4 == 0) {
      s = std::string(8 + rng() % 20, 'q');
    } else {
      for (int e = static_cast<int>(rng() % 4); e > 0; --e) s[rng() % s.size()] = static_cast<char>('a' + rng() % 3);
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(BuildMatrix, IdenticalOutputsGiveAllOnes) {
  const std::vector<std::string> outs(5, "return x");
  const auto m = build_matrix(outs);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(m.at(i, j), 1.0);
  }
}

TEST(BuildMatrix, TwoClustersMatchEditOracle) {
  const std::vector<std::string> outs{"aaaa", "aaaa", "bbbb"};
  const auto m = build_matrix(outs, metrics::edit_similarity, 3);
  EXPECT_EQ(m.at(0, 1), 1.0);
  EXPECT_EQ(m.at(0, 2), 0.0);
  EXPECT_EQ(m.at(1, 2), 0.0);
  EXPECT_EQ(m.at(0, 2), oracle::edit_similarity("aaaa", "bbbb"));
}

TEST(BuildMatrix, SymmetricWithUnitDiagonal) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto outs = random_outputs(rng, 4 + rng() % 6);
    const auto m = build_matrix(outs);
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_EQ(m.at(i, i), 1.0);
      for (std::size_t j = 0; j < m.size(); ++j) {
        EXPECT_EQ(m.at(i, j), m.at(j, i));
        if (i != j) EXPECT_DOUBLE_EQ(m.at(i, j), oracle::edit_similarity(outs[i], outs[j]));
      }
    }
  }
}

TEST(BuildMatrix, RejectsSmallGroups) {
  const std::vector<std::string> outs{"a", "b", "c"};
  EXPECT_THROW((void)build_matrix(outs), GroupTooSmall);
}

TEST(PairMedian, ExcludesDiagonalAndAveragesEvenCounts) {
  SimilarityMatrix m(4);
  // Six pair scores: 0.1 .. 0.6, so the median is (0.3 + 0.4) / 2.
  m.set(0, 1, 0.1);
  m.set(0, 2, 0.2);
  m.set(0, 3, 0.3);
  m.set(1, 2, 0.4);
  m.set(1, 3, 0.5);
  m.set(2, 3, 0.6);
  EXPECT_DOUBLE_EQ(pair_median(m), 0.35);
}

TEST(SelectOutliers, AllIdenticalFlagsNothing) {
  const auto m = build_matrix(std::vector<std::string>(9, "same"));
  for (int T = 1; T <= 8; ++T) EXPECT_TRUE(select_outliers(m, T).flagged.empty());
}

TEST(SelectOutliers, SingleDeviantAmongNine) {
  std::vector<std::string> outs(8, "aaaaaaaa");
  outs.push_back("zzzzzzzz");
  const auto m = build_matrix(outs);
  for (int T = 1; T <= 8; ++T) {
    const auto v = select_outliers(m, T);
    EXPECT_EQ(v.median, 1.0);
    if (T == 1) {
      EXPECT_EQ(v.flagged.size(), 9u);
    } else {
      ASSERT_EQ(flagged(v), std::vector<std::size_t>{8});
      EXPECT_EQ(v.flagged[0].below_median_count, 8u);
    }
    EXPECT_EQ(v.below_median_counts, (std::vector<std::size_t>{1, 1, 1, 1, 1, 1, 1, 1, 8}));
  }
}

TEST(SelectOutliers, LabelsFlaggedRowsWithSchemes) {
  std::vector<std::string> outs(4, "abcd");
  outs[2] = "wxyz";
  const std::vector<SchemeId> labels{SchemeId::Original, SchemeId::RepR, SchemeId::GraC, SchemeId::Ini};
  const auto v = select_outliers(build_matrix(outs), 3, labels);
  ASSERT_EQ(v.flagged.size(), 1u);
  EXPECT_EQ(v.flagged[0].scheme, SchemeId::GraC);
}

TEST(SelectOutliers, ThresholdBounds) {
  const auto m = build_matrix(std::vector<std::string>(4, "x"));
  EXPECT_THROW((void)select_outliers(m, 0), InvalidThreshold);
  EXPECT_THROW((void)select_outliers(m, 4), InvalidThreshold);
  EXPECT_NO_THROW((void)select_outliers(m, 3));
  EXPECT_TRUE(select_outliers_clamped(m, 9).flagged.empty());
  EXPECT_THROW((void)select_outliers_clamped(m, 0), InvalidThreshold);
}

TEST(SelectOutliers, ClampedKeepsRowCountsWhenThresholdIsUnreachable) {
  std::vector<std::string> outs(4, "aaaa");
  outs[0] = "bbbb";
  const auto v = select_outliers_clamped(build_matrix(outs), 9);
  EXPECT_EQ(v.below_median_counts, (std::vector<std::size_t>{3, 1, 1, 1}));
}

TEST(SelectOutliersProperty, AgreesWithBruteForceTrace) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const auto m = random_matrix(rng, 4 + rng() % 7);
    for (int T = 1; T < static_cast<int>(m.size()); ++T) {
      EXPECT_EQ(flagged(select_outliers(m, T)), oracle::flagged_rows(dense(m), T));
    }
  }
}

TEST(SelectOutliersProperty, NestedSetsInThreshold) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto m = random_matrix(rng, 4 + rng() % 7);
    auto previous = flagged(select_outliers(m, 1));
    for (int T = 2; T < static_cast<int>(m.size()); ++T) {
      const auto current = flagged(select_outliers(m, T));
      EXPECT_TRUE(std::includes(previous.begin(), previous.end(), current.begin(), current.end()));
      previous = current;
    }
  }
}

TEST(SelectOutliersProperty, PermutationEquivariance) {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    const auto m = random_matrix(rng, 4 + rng() % 7);
    std::vector<std::size_t> perm(m.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    SimilarityMatrix p(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = i + 1; j < m.size(); ++j) p.set(i, j, m.at(perm[i], perm[j]));
    }
    const int T = 1 + static_cast<int>(rng() % (m.size() - 1));
    std::vector<std::size_t> mapped;
    for (std::size_t i : flagged(select_outliers(p, T))) mapped.push_back(perm[i]);
    std::sort(mapped.begin(), mapped.end());
    EXPECT_EQ(mapped, flagged(select_outliers(m, T)));
  }
}

TEST(SelectOutliersProperty, PureFunctionOfInputs) {
  std::mt19937 rng(11);
  const auto m = random_matrix(rng, 8);
  const auto a = select_outliers(m, 2);
  const auto b = select_outliers(m, 2);
  EXPECT_EQ(flagged(a), flagged(b));
  EXPECT_EQ(a.below_median_counts, b.below_median_counts);
}

TEST(SelectOutliersProperty, DuplicateInsertionCanShiftTheMedian) {
  // Duplicating "ba" adds a 1.0 pair and lifts the median from 1/3 to 5/12,
  // which pushes its 1/3 score against "bbb" below the median.
  std::vector<std::string> outs{"b", "ba", "a", "bbb"};
  const auto before = select_outliers(build_matrix(outs), 1);
  EXPECT_FALSE(before.is_flagged(1));
  EXPECT_NEAR(before.median, 1.0 / 3.0, 1e-12);
  outs.push_back("ba");
  const auto after = select_outliers(build_matrix(outs), 1);
  EXPECT_NEAR(after.median, 5.0 / 12.0, 1e-12);
  EXPECT_TRUE(after.is_flagged(1));
}

TEST(SelectOutliersProperty, DuplicateInsertionIsStableWhenTheMedianHolds) {
  std::mt19937 rng(13);
  int checked = 0;
  int median_moved = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    auto outs = random_outputs(rng, 4 + rng() % 5);
    const int T = 1 + static_cast<int>(rng() % (outs.size() - 1));
    const auto before = select_outliers(build_matrix(outs), T);
    const std::size_t i = rng() % outs.size();
    if (before.is_flagged(i)) continue;
    outs.push_back(outs[i]);
    const auto m = build_matrix(outs);
    const auto after = select_outliers(m, T);
    EXPECT_EQ(flagged(after), oracle::flagged_rows(dense(m), T));
    if (after.median != before.median) {
      ++median_moved;
      continue;
    }
    EXPECT_FALSE(after.is_flagged(i)) << "trial " << trial;
    ++checked;
  }
  EXPECT_GT(checked, 200);
  EXPECT_GT(median_moved, 0);
}
