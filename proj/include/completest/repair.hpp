#pragma once

// Output selection among non-outliers: pick the output whose mean similarity
// to the rest of the group is closest to the group's mean pair similarity.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "completest/oracle.hpp"

namespace completest {

class RepairUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabeledOutput {
  SchemeId scheme;
  std::string text;
};

struct RepairResult {
  std::string seed_id;
  SchemeId selected_scheme = SchemeId::Original;
  std::string selected_output;
  double group_mean = 0.0;
  std::vector<std::pair<SchemeId, double>> per_output_means;
  bool degenerate = false;
};

/// Differences closer than this count as ties.
inline constexpr double kRepairTieEpsilon = 1e-12;

/// Selects from outputs not flagged in `verdict`. `matrix`, when given, must
/// score `outputs` in the same order and is reused instead of recomputing.
[[nodiscard]] inline RepairResult repair(const std::vector<LabeledOutput>& outputs,
                                         const OutlierVerdict& verdict,
                                         const SimilarityMatrix* matrix = nullptr,
                                         const SimilarityFn& sim = metrics::edit_similarity) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (!verdict.is_flagged(i)) kept.push_back(i);
  }
  RepairResult result;
  result.seed_id = verdict.seed_id;
  if (kept.empty()) throw RepairUnavailable("every output was flagged");
  if (kept.size() == 1) {
    const auto& only = outputs[kept.front()];
    result.selected_scheme = only.scheme;
    result.selected_output = only.text;
    result.group_mean = 1.0;
    result.per_output_means.emplace_back(only.scheme, 1.0);
    result.degenerate = true;
    return result;
  }

  auto score = [&](std::size_t a, std::size_t b) {
    return matrix != nullptr ? matrix->at(a, b) : sim(outputs[a].text, outputs[b].text);
  };
  const std::size_t n = kept.size();
  std::vector<std::vector<double>> s(n, std::vector<double>(n, 1.0));
  double pair_sum = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      s[a][b] = s[b][a] = score(kept[a], kept[b]);
      pair_sum += s[a][b];
    }
  }
  result.group_mean = pair_sum / static_cast<double>(n * (n - 1) / 2);

  std::optional<std::size_t> best;
  double best_gap = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      if (b != a) row += s[a][b];
    }
    const double mean = row / static_cast<double>(n - 1);
    const SchemeId scheme = outputs[kept[a]].scheme;
    result.per_output_means.emplace_back(scheme, mean);
    const double gap = std::abs(mean - result.group_mean);
    const bool better =
        !best || gap < best_gap - kRepairTieEpsilon ||
        (std::abs(gap - best_gap) <= kRepairTieEpsilon &&
         scheme_rank(scheme) < scheme_rank(outputs[kept[*best]].scheme));
    if (better) {
      best = a;
      best_gap = gap;
    }
  }
  result.selected_scheme = outputs[kept[*best]].scheme;
  result.selected_output = outputs[kept[*best]].text;
  return result;
}

}  // namespace completest
