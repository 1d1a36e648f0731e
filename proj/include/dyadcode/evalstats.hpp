#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "dyadcode/corpus.hpp"
#include "dyadcode/error.hpp"

namespace dyadcode {

constexpr std::size_t code_index(Code c) noexcept { return c == Code::Positive ? 0 : 1; }

// counts[true][predicted], index 0 = Positive, 1 = Negative.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, 2>, 2> counts{};

  void add(Code truth, Code predicted) { ++counts[code_index(truth)][code_index(predicted)]; }

  void merge(const ConfusionMatrix& other) {
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) counts[r][c] += other.counts[r][c];
  }

  std::size_t row_total(Code truth) const {
    const auto& row = counts[code_index(truth)];
    return row[0] + row[1];
  }
  std::size_t total() const { return row_total(Code::Positive) + row_total(Code::Negative); }

  // Rows and columns swapped jointly: the same predictions with labels renamed.
  ConfusionMatrix relabeled() const {
    ConfusionMatrix out;
    out.counts = {{{counts[1][1], counts[1][0]}, {counts[0][1], counts[0][0]}}};
    return out;
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion_matrix(std::span<const Code> truth, std::span<const Code> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("confusion_matrix: size mismatch");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

inline double recall(const ConfusionMatrix& cm, Code label) {
  const std::size_t total = cm.row_total(label);
  if (total == 0) throw DataError("recall undefined: label absent from the evaluation set");
  return static_cast<double>(cm.counts[code_index(label)][code_index(label)]) / static_cast<double>(total);
}

// Unweighted mean of the per-label recalls.
inline double balanced_accuracy(const ConfusionMatrix& cm) {
  return 0.5 * (recall(cm, Code::Positive) + recall(cm, Code::Negative));
}

struct RunScore {
  std::size_t run_index = 0;
  std::uint64_t seed = 0;
  double balanced_accuracy = 0.0;
  ConfusionMatrix confusion;
  std::vector<double> selected_c;  // per outer fold

  friend bool operator==(const RunScore&, const RunScore&) = default;
};

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw DataError("mean of an empty list");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Sample standard deviation (n - 1) divided by sqrt(n).
inline double standard_error(std::span<const double> scores) {
  if (scores.size() < 2) throw DataError("standard error needs at least 2 scores");
  // shifted by the first score so identical scores give exactly 0
  const double k = scores.front();
  double sum = 0.0, sq = 0.0;
  for (double s : scores) {
    sum += s - k;
    sq += (s - k) * (s - k);
  }
  const double n = static_cast<double>(scores.size());
  const double ss = std::max(0.0, sq - sum * sum / n);
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test
// ---------------------------------------------------------------------------

enum class WilcoxonMethod { Exact, NormalApprox };

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_value = 1.0;  // two-sided
  std::size_t n_effective = 0;
  bool has_ties = false;  // ties among |differences|
  WilcoxonMethod method = WilcoxonMethod::Exact;
};

inline constexpr std::size_t kWilcoxonMinPairs = 5;
inline constexpr std::size_t kWilcoxonExactMax = 25;

// Average ranks (1-based) of |d|, doubled so that tied ranks stay integral.
inline std::vector<std::int64_t> doubled_midranks(std::span<const double> abs_diffs) {
  const std::size_t n = abs_diffs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return abs_diffs[a] < abs_diffs[b]; });
  std::vector<std::int64_t> ranks(n);
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo;
    while (hi + 1 < n && abs_diffs[order[hi + 1]] == abs_diffs[order[lo]]) ++hi;
    // positions lo..hi share rank ((lo+1) + (hi+1)) / 2
    const auto doubled = static_cast<std::int64_t>(lo + hi + 2);
    for (std::size_t k = lo; k <= hi; ++k) ranks[order[k]] = doubled;
    lo = hi + 1;
  }
  return ranks;
}

// Two-sided paired test on d = a - b with zero differences dropped.
//
// For n_effective <= 25 the p-value is exact: the null distribution of the
// signed rank sum over all 2^n sign assignments is counted by dynamic
// programming over (doubled) midranks, which also covers tied |d|. Larger
// samples use the normal approximation with continuity and tie correction.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("wilcoxon: paired lists differ in length");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.size() < kWilcoxonMinPairs)
    throw InsufficientDataError("wilcoxon: " + std::to_string(diffs.size()) +
                                " non-zero paired differences (need at least 5)");

  const std::size_t n = diffs.size();
  std::vector<double> abs_d(n);
  for (std::size_t i = 0; i < n; ++i) abs_d[i] = std::fabs(diffs[i]);
  const auto ranks = doubled_midranks(abs_d);

  WilcoxonResult res;
  res.n_effective = n;
  std::int64_t plus2 = 0, minus2 = 0;
  for (std::size_t i = 0; i < n; ++i) (diffs[i] > 0 ? plus2 : minus2) += ranks[i];
  res.w_plus = static_cast<double>(plus2) / 2.0;
  res.w_minus = static_cast<double>(minus2) / 2.0;
  res.statistic = std::min(res.w_plus, res.w_minus);
  {
    auto sorted = abs_d;
    std::sort(sorted.begin(), sorted.end());
    res.has_ties = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
  }

  if (n <= kWilcoxonExactMax) {
    res.method = WilcoxonMethod::Exact;
    const std::int64_t total2 = plus2 + minus2;
    std::vector<double> ways(static_cast<std::size_t>(total2) + 1, 0.0);
    ways[0] = 1.0;
    std::int64_t reach = 0;
    for (auto r : ranks) {
      for (std::int64_t s = reach; s >= 0; --s) {
        if (ways[s] != 0.0) ways[s + r] += ways[s];
      }
      reach += r;
    }
    const std::int64_t stat2 = std::min(plus2, minus2);
    double tail = 0.0;
    for (std::int64_t s = 0; s <= stat2; ++s) tail += ways[s];
    res.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
  } else {
    res.method = WilcoxonMethod::NormalApprox;
    const double nn = static_cast<double>(n);
    const double mu = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    auto sorted = abs_d;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t lo = 0; lo < n;) {
      std::size_t hi = lo;
      while (hi + 1 < n && sorted[hi + 1] == sorted[lo]) ++hi;
      const double t = static_cast<double>(hi - lo + 1);
      var -= (t * t * t - t) / 48.0;
      lo = hi + 1;
    }
    const double z = std::min(0.0, (res.statistic - mu + 0.5) / std::sqrt(var));
    res.p_value = std::min(1.0, std::erfc(-z / std::sqrt(2.0)));
  }
  return res;
}

}  // namespace dyadcode
