#pragma once

// String similarity and translation-quality metrics used by the oracle,
// the repair step and campaign scoring.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace completest::metrics {

/// Decodes UTF-8 into Unicode scalar values. Malformed bytes decode as
/// U+FFFD so every input has a defined length.
[[nodiscard]] inline std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto lead = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = lead;
    if (lead >= 0xF0 && lead < 0xF8) {
      len = 4;
      cp = lead & 0x07;
    } else if (lead >= 0xE0) {
      len = 3;
      cp = lead & 0x0F;
    } else if (lead >= 0xC0) {
      len = 2;
      cp = lead & 0x1F;
    } else if (lead >= 0x80) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto c = static_cast<unsigned char>(s[i + k]);
      if ((c & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (c & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

/// Levenshtein distance with unit insert/delete/substitute costs.
template <typename CharT>
[[nodiscard]] std::size_t levenshtein(std::basic_string_view<CharT> a,
                                      std::basic_string_view<CharT> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t subst = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, subst});
      diag = up;
    }
  }
  return row[b.size()];
}

[[nodiscard]] inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  const auto ua = decode_utf8(a);
  const auto ub = decode_utf8(b);
  return levenshtein<char32_t>(ua, ub);
}

/// 1 - levenshtein(a, b) / max(|a|, |b|) over code points; 1 for two empty strings.
[[nodiscard]] inline double edit_similarity(std::string_view a, std::string_view b) {
  const auto ua = decode_utf8(a);
  const auto ub = decode_utf8(b);
  const std::size_t longest = std::max(ua.size(), ub.size());
  if (longest == 0) return 1.0;
  const auto dist = levenshtein<char32_t>(ua, ub);
  return 1.0 - static_cast<double>(dist) / static_cast<double>(longest);
}

[[nodiscard]] inline std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

inline constexpr int kBleuOrder = 4;

/// Sentence-level BLEU-4 over whitespace tokens. Every n-gram precision is
/// smoothed as (matches + 1) / (candidate n-grams + 1); the geometric mean is
/// scaled by the brevity penalty. Empty candidate or reference scores 0.
[[nodiscard]] inline double bleu(std::string_view candidate, std::string_view reference) {
  const auto cand = whitespace_tokens(candidate);
  const auto ref = whitespace_tokens(reference);
  if (cand.empty() || ref.empty()) return 0.0;

  double log_precision_sum = 0.0;
  for (int n = 1; n <= kBleuOrder; ++n) {
    std::map<std::vector<std::string>, int> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i) {
      ++ref_counts[std::vector<std::string>(ref.begin() + i, ref.begin() + i + n)];
    }
    std::map<std::vector<std::string>, int> cand_counts;
    std::size_t total = 0;
    for (std::size_t i = 0; i + n <= cand.size(); ++i) {
      ++cand_counts[std::vector<std::string>(cand.begin() + i, cand.begin() + i + n)];
      ++total;
    }
    std::size_t clipped = 0;
    for (const auto& [gram, count] : cand_counts) {
      const auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) clipped += static_cast<std::size_t>(std::min(count, it->second));
    }
    log_precision_sum += std::log((static_cast<double>(clipped) + 1.0) /
                                  (static_cast<double>(total) + 1.0));
  }
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
  return brevity * std::exp(log_precision_sum / kBleuOrder);
}

/// (after - before) / before; nullopt when before is zero.
[[nodiscard]] inline std::optional<double> improvement_ratio(double before, double after) {
  if (before == 0.0) return std::nullopt;
  return (after - before) / before;
}

}  // namespace completest::metrics
