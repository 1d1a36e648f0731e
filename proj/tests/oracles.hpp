// Reference implementations used only by tests. Each one takes a different
// route from the library code it checks: no hash indexing, no SMO, no
// dynamic programming.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dyadcode/lexicon.hpp"
#include "dyadcode/tokenizer.hpp"

namespace oracle {

// Scans every entry for every token: exact match first, else longest prefix.
inline std::vector<double> lexicon_features(const std::string& text, const dyadcode::Lexicon& lexicon) {
  const auto tokens = dyadcode::tokenize(text);
  std::vector<int> ids;
  for (const auto& [id, name] : lexicon.categories()) ids.push_back(id);
  std::vector<double> counts(ids.size(), 0.0);
  for (const auto& token : tokens) {
    const dyadcode::LexiconEntry* hit = nullptr;
    for (const auto& e : lexicon.entries()) {
      if (!e.is_prefix && e.pattern == token) hit = &e;
    }
    if (!hit) {
      for (const auto& e : lexicon.entries()) {
        if (e.is_prefix && token.compare(0, e.pattern.size(), e.pattern) == 0 &&
            (!hit || e.pattern.size() > hit->pattern.size()))
          hit = &e;
      }
    }
    if (!hit) continue;
    for (int id : hit->category_ids) {
      const auto col = std::find(ids.begin(), ids.end(), id) - ids.begin();
      counts[static_cast<std::size_t>(col)] += 1.0;
    }
  }
  for (auto& c : counts) c /= static_cast<double>(tokens.size());
  return counts;
}

// ---------------------------------------------------------------------------
// SVM dual by accelerated projected gradient
// ---------------------------------------------------------------------------

struct DualProblem {
  std::vector<std::vector<double>> K;  // kernel matrix
  std::vector<double> y;               // +1 / -1
  std::vector<double> upper;           // C * w_{y_i}
};

inline double dual_objective(const DualProblem& p, const std::vector<double>& a) {
  const std::size_t n = a.size();
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lin += a[i];
    for (std::size_t j = 0; j < n; ++j) quad += a[i] * a[j] * p.y[i] * p.y[j] * p.K[i][j];
  }
  return lin - 0.5 * quad;
}

// Euclidean projection onto {0 <= a <= u, y'a = 0}; bisection on the multiplier.
inline std::vector<double> project(const DualProblem& p, const std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto at = [&](double lambda) {
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = std::clamp(v[i] - lambda * p.y[i], 0.0, p.upper[i]);
    return a;
  };
  const auto residual = [&](double lambda) {
    const auto a = at(lambda);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += p.y[i] * a[i];
    return s;
  };
  double hi = 1.0;
  for (std::size_t i = 0; i < n; ++i) hi = std::max(hi, std::fabs(v[i]) + p.upper[i] + 1.0);
  double lo = -hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) > 0.0 ? lo : hi) = mid;
  }
  return at(0.5 * (lo + hi));
}

inline std::vector<double> solve_dual(const DualProblem& p, int iterations = 20000) {
  const std::size_t n = p.y.size();
  double lipschitz = 1e-12;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::fabs(p.K[i][j]);
    lipschitz = std::max(lipschitz, row);
  }
  const double step = 1.0 / lipschitz;
  std::vector<double> a(n, 0.0), z = a, prev = a;
  double t = 1.0;
  double best = dual_objective(p, a);
  auto best_a = a;
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      double g = -1.0;  // gradient of 1/2 a'Qa - e'a
      for (std::size_t j = 0; j < n; ++j) g += p.y[i] * p.y[j] * p.K[i][j] * z[j];
      v[i] = z[i] - step * g;
    }
    prev = a;
    a = project(p, v);
    const double obj = dual_objective(p, a);
    if (obj < best - 1e-15) {  // objective went down: restart momentum
      t = 1.0;
      z = best_a;
      a = best_a;
      continue;
    }
    if (obj > best) {
      best = obj;
      best_a = a;
    }
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) moved = std::max(moved, std::fabs(a[i] - prev[i]));
    if (moved < 1e-15 && t > 1.0) break;  // fixed point
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < n; ++i) z[i] = a[i] + ((t - 1.0) / t_next) * (a[i] - prev[i]);
    t = t_next;
  }
  return best_a;
}

// Range of biases consistent with the KKT conditions of a dual solution.
// A free multiplier pins the bias to a point; with none free it is only
// bracketed by the points at 0 and at the upper bound.
inline std::pair<double, double> kkt_bias_range(const DualProblem& p, const std::vector<double>& a, double eps = 1e-12) {
  const std::size_t n = a.size();
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double f = 0.0;
    for (std::size_t j = 0; j < n; ++j) f += a[j] * p.y[j] * p.K[i][j];
    const double b_i = p.y[i] - f;  // bias that puts point i exactly on its margin
    const bool at_zero = a[i] <= eps, at_upper = a[i] >= p.upper[i] - eps;
    const bool raises_lo = at_zero ? p.y[i] > 0 : (at_upper ? p.y[i] < 0 : true);
    const bool lowers_hi = at_zero ? p.y[i] < 0 : (at_upper ? p.y[i] > 0 : true);
    if (raises_lo) lo = std::max(lo, b_i);
    if (lowers_hi) hi = std::min(hi, b_i);
  }
  return {lo, hi};
}

// Largest KKT violation m(a) - M(a), recomputed from scratch.
inline double kkt_violation(const DualProblem& p, const std::vector<double>& a) {
  const std::size_t n = a.size();
  double m = -std::numeric_limits<double>::infinity(), M = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double g = -1.0;
    for (std::size_t j = 0; j < n; ++j) g += p.y[i] * p.y[j] * p.K[i][j] * a[j];
    const double v = -p.y[i] * g;
    const bool up = p.y[i] > 0 ? a[i] < p.upper[i] : a[i] > 0.0;
    const bool low = p.y[i] > 0 ? a[i] > 0.0 : a[i] < p.upper[i];
    if (up) m = std::max(m, v);
    if (low) M = std::min(M, v);
  }
  return (std::isfinite(m) && std::isfinite(M)) ? m - M : 0.0;
}

// ---------------------------------------------------------------------------
// Wilcoxon by full enumeration
// ---------------------------------------------------------------------------

// Two-sided p over all 2^n sign assignments of midranks of |d| (zeros removed).
inline double wilcoxon_exact_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] - b[i] != 0.0) d.push_back(a[i] - b[i]);
  }
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::fabs(d[j]) < std::fabs(d[i])) ++less;
      if (std::fabs(d[j]) == std::fabs(d[i])) ++equal;
    }
    rank[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1.0) / 2.0;
  }
  double w_plus = 0.0, total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += rank[i];
    if (d[i] > 0) w_plus += rank[i];
  }
  const double w = std::min(w_plus, total - w_plus);
  std::uint64_t at_or_below = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) t += rank[i];
    }
    if (t <= w + 1e-9) ++at_or_below;
  }
  return std::min(1.0, 2.0 * static_cast<double>(at_or_below) / std::ldexp(1.0, static_cast<int>(n)));
}

// ---------------------------------------------------------------------------
// Best achievable balanced accuracy of the synthetic generator
// ---------------------------------------------------------------------------

// Given a true label, a transcript's planted words follow a multinomial over
// (own, other, rest), so D = #positive-pool - #negative-pool is sufficient and
// the likelihood ratio is monotone in D. Thresholding D therefore covers every
// Bayes rule; the best threshold gives the best balanced accuracy against the
// noisy labels. Computed exactly by summing over all (n, p, q).
inline double synthetic_bayes_balanced_accuracy(double signal, double cross, double positive_fraction,
                                                double noise, int min_tokens, int max_tokens) {
  const auto binom = [](int n, int k) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
  };
  const int span = 2 * max_tokens + 1;
  const auto dist = [&](double a, double b) {
    std::vector<double> d(static_cast<std::size_t>(span), 0.0);
    for (int n = min_tokens; n <= max_tokens; ++n) {
      for (int p = 0; p <= n; ++p) {
        for (int q = 0; p + q <= n; ++q) {
          const double pr = binom(n, p) * binom(n - p, q) * std::pow(a, p) * std::pow(b, q) *
                            std::pow(1.0 - a - b, n - p - q) / (max_tokens - min_tokens + 1);
          d[static_cast<std::size_t>(p - q + max_tokens)] += pr;
        }
      }
    }
    return d;
  };
  const auto pos = dist(signal, cross), neg = dist(cross, signal);
  std::vector<double> lab_pos(pos.size()), lab_neg(pos.size());
  double zp = 0.0, zn = 0.0;
  for (std::size_t k = 0; k < pos.size(); ++k) {
    lab_pos[k] = (1 - noise) * positive_fraction * pos[k] + noise * (1 - positive_fraction) * neg[k];
    lab_neg[k] = noise * positive_fraction * pos[k] + (1 - noise) * (1 - positive_fraction) * neg[k];
    zp += lab_pos[k];
    zn += lab_neg[k];
  }
  double best = 0.0;
  for (std::size_t t = 0; t <= pos.size(); ++t) {  // predict Positive iff D index >= t
    double tp = 0.0, tn = 0.0;
    for (std::size_t k = 0; k < pos.size(); ++k) (k >= t ? tp : tn) += k >= t ? lab_pos[k] : lab_neg[k];
    best = std::max(best, 0.5 * (tp / zp + tn / zn));
  }
  return best;
}

}  // namespace oracle
