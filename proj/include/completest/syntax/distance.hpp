#pragma once

#include <algorithm>
#include <span>
#include <string_view>
#include <vector>

#include "completest/syntax/tree.hpp"

namespace completest::syntax {

/// Length of the longest common subsequence of two label sequences.
template <typename T>
[[nodiscard]] std::size_t lcs_length(std::span<const T> a, std::span<const T> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      row[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], row[j - 1]);
    }
    std::swap(prev, row);
  }
  return prev[b.size()];
}

/// 1 - m/n, where n is the length of the seed's preorder label sequence
/// (identifier and literal text erased) and m the LCS length against the
/// mutant's sequence.
[[nodiscard]] inline double structural_distance(const SyntaxTree& seed, const SyntaxTree& mutant) {
  const auto a = seed.erased_labels();
  const auto b = mutant.erased_labels();
  if (a.empty()) return b.empty() ? 0.0 : 1.0;
  const auto m = lcs_length<std::string_view>(a, b);
  return 1.0 - static_cast<double>(m) / static_cast<double>(a.size());
}

}  // namespace completest::syntax
