#pragma once

// Outlier selection over one seed's completion outputs: pairwise similarity
// matrix, median of the pair scores, and a peer-count threshold T.

#include <algorithm>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "completest/metrics.hpp"
#include "completest/mutate.hpp"

namespace completest {

inline constexpr std::size_t kMinGroupSize = 4;

class GroupTooSmall : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidThreshold : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using SimilarityFn = std::function<double(std::string_view, std::string_view)>;

/// Symmetric k x k score matrix with unit diagonal, stored row-major.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  explicit SimilarityMatrix(std::size_t k) : k_(k), scores_(k * k, 0.0) {
    for (std::size_t i = 0; i < k; ++i) set(i, i, 1.0);
  }

  [[nodiscard]] std::size_t size() const { return k_; }
  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return scores_[i * k_ + j]; }

  /// Writes both (i, j) and (j, i).
  void set(std::size_t i, std::size_t j, double v) {
    scores_[i * k_ + j] = v;
    scores_[j * k_ + i] = v;
  }

  /// Strict upper-triangle entries in row order.
  [[nodiscard]] std::vector<double> pair_scores() const {
    std::vector<double> out;
    out.reserve(k_ * (k_ - (k_ > 0 ? 1 : 0)) / 2);
    for (std::size_t i = 0; i < k_; ++i) {
      for (std::size_t j = i + 1; j < k_; ++j) out.push_back(at(i, j));
    }
    return out;
  }

 private:
  std::size_t k_ = 0;
  std::vector<double> scores_;
};

/// Fills the upper triangle with `sim` and mirrors it. Scores are used as-is,
/// so `sim` must already be normalized to [0, 1].
[[nodiscard]] inline SimilarityMatrix build_matrix(std::span<const std::string> outputs,
                                                   const SimilarityFn& sim = metrics::edit_similarity,
                                                   std::size_t min_group_size = kMinGroupSize) {
  if (outputs.size() < min_group_size) {
    throw GroupTooSmall("need at least " + std::to_string(min_group_size) +
                        " completed outputs, got " + std::to_string(outputs.size()));
  }
  SimilarityMatrix m(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    for (std::size_t j = i + 1; j < outputs.size(); ++j) m.set(i, j, sim(outputs[i], outputs[j]));
  }
  return m;
}

/// Median of the strict upper-triangle scores; even counts average the two
/// middle values.
[[nodiscard]] inline double pair_median(const SimilarityMatrix& m) {
  auto v = m.pair_scores();
  if (v.empty()) return 1.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : (v[h - 1] + v[h]) / 2.0;
}

struct FlaggedOutput {
  std::size_t index = 0;
  SchemeId scheme = SchemeId::Original;
  std::size_t below_median_count = 0;
};

struct OutlierVerdict {
  std::string seed_id;
  std::vector<FlaggedOutput> flagged;
  /// Below-median peer count for every row, flagged or not.
  std::vector<std::size_t> below_median_counts;
  double median = 0.0;
  int threshold = 0;

  [[nodiscard]] bool is_flagged(std::size_t index) const {
    return std::any_of(flagged.begin(), flagged.end(),
                       [&](const FlaggedOutput& f) { return f.index == index; });
  }
};

namespace detail {

inline OutlierVerdict count_below_median(const SimilarityMatrix& m, int T,
                                         std::span<const SchemeId> schemes) {
  OutlierVerdict v;
  v.threshold = T;
  v.median = pair_median(m);
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::size_t below = 0;
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (j != i && m.at(i, j) < v.median) ++below;
    }
    v.below_median_counts.push_back(below);
    if (below >= static_cast<std::size_t>(T)) {
      v.flagged.push_back({i, i < schemes.size() ? schemes[i] : SchemeId::Original, below});
    }
  }
  return v;
}

}  // namespace detail

/// Flags row i iff at least T of its off-diagonal scores are strictly below
/// the pair median. Requires 1 <= T <= k - 1.
[[nodiscard]] inline OutlierVerdict select_outliers(const SimilarityMatrix& m, int T,
                                                    std::span<const SchemeId> schemes = {}) {
  if (T < 1 || static_cast<std::size_t>(T) > m.size() - 1 || m.size() == 0) {
    throw InvalidThreshold("threshold " + std::to_string(T) + " outside [1, " +
                           std::to_string(m.size() == 0 ? 0 : m.size() - 1) + "]");
  }
  return detail::count_below_median(m, T, schemes);
}

/// Campaign variant: a threshold above k - 1 cannot be met by any row, so it
/// yields an empty flagged set instead of an error.
[[nodiscard]] inline OutlierVerdict select_outliers_clamped(const SimilarityMatrix& m, int T,
                                                            std::span<const SchemeId> schemes = {}) {
  if (T < 1) throw InvalidThreshold("threshold must be at least 1");
  if (static_cast<std::size_t>(T) <= m.size() - 1) return select_outliers(m, T, schemes);
  OutlierVerdict v = detail::count_below_median(m, T, schemes);
  v.flagged.clear();
  return v;
}

}  // namespace completest
