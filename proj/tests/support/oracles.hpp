#pragma once

// Reference implementations kept independent of the library code: plain
// memoized recursions written straight from the definitions.

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace oracle {

/// Levenshtein distance by memoized recursion on suffixes.
inline std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  std::vector<std::vector<long>> memo(a.size() + 1, std::vector<long>(b.size() + 1, -1));
  auto rec = [&](auto&& self, std::size_t i, std::size_t j) -> long {
    if (i == a.size()) return static_cast<long>(b.size() - j);
    if (j == b.size()) return static_cast<long>(a.size() - i);
    long& m = memo[i][j];
    if (m >= 0) return m;
    if (a[i] == b[j]) return m = self(self, i + 1, j + 1);
    return m = 1 + std::min({self(self, i + 1, j), self(self, i, j + 1), self(self, i + 1, j + 1)});
  };
  return static_cast<std::size_t>(rec(rec, 0, 0));
}

inline std::u32string widen(std::string_view ascii) { return std::u32string(ascii.begin(), ascii.end()); }

inline double edit_similarity(std::string_view a, std::string_view b) {
  const auto wa = widen(a);
  const auto wb = widen(b);
  const std::size_t longest = std::max(wa.size(), wb.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(edit_distance(wa, wb)) / static_cast<double>(longest);
}

/// LCS length by memoized recursion.
template <typename T>
std::size_t lcs(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<std::vector<long>> memo(a.size() + 1, std::vector<long>(b.size() + 1, -1));
  auto rec = [&](auto&& self, std::size_t i, std::size_t j) -> long {
    if (i == a.size() || j == b.size()) return 0;
    long& m = memo[i][j];
    if (m >= 0) return m;
    if (a[i] == b[j]) return m = 1 + self(self, i + 1, j + 1);
    return m = std::max(self(self, i + 1, j), self(self, i, j + 1));
  };
  return static_cast<std::size_t>(rec(rec, 0, 0));
}

/// Median of a list, averaging the middle pair for even sizes.
inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

/// Rows of a full similarity matrix flagged at threshold T, following the
/// outlier algorithm literally: median over pairs i < j, strict comparison.
inline std::vector<std::size_t> flagged_rows(const std::vector<std::vector<double>>& s, int T) {
  std::vector<double> pairs;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) pairs.push_back(s[i][j]);
  }
  const double med = median(pairs);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    int count = 0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j != i && s[i][j] < med) ++count;
    }
    if (count >= T) out.push_back(i);
  }
  return out;
}

}  // namespace oracle
