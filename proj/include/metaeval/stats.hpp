#pragma once

// Statistical primitives used by the consistency criteria and estimators:
// Wilcoxon signed-rank test, Pearson and Spearman correlation, descending
// ranks and trapezoid areas. Undefined correlations are reported as
// std::nullopt rather than NaN.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metaeval/error.hpp"

namespace metaeval::stats {

enum class WilcoxonMethod { kAuto, kExact, kNormal };

/// Largest number of non-zero differences handled by exact enumeration
/// under WilcoxonMethod::kAuto.
inline constexpr std::size_t kExactWilcoxonLimit = 25;

struct WilcoxonResult {
  double p_value = 1.0;
  double w_plus = 0.0;      // sum of ranks of positive differences
  std::size_t nonzero = 0;  // differences left after dropping zeros
  bool exact = true;
};

namespace detail {

inline void check_paired(std::span<const double> a, std::span<const double> b, const char* who) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(who) + ": paired vectors differ in length (" +
                     std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw InputError(std::string(who) + ": need at least 2 pairs");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
      throw InputError(std::string(who) + ": non-finite entry at index " + std::to_string(i));
    }
  }
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace detail

/// 1-based ascending ranks; tied values share the average of their ranks.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

/// Two-sided Wilcoxon signed-rank test on the paired differences a - b.
///
/// Zero differences are dropped; if nothing is left the samples are treated
/// as identical and p = 1. Tied magnitudes get average ranks. The exact null
/// distribution is obtained by counting all 2^m sign assignments (done with a
/// subset-sum recurrence over doubled ranks, which keeps ties exact). The
/// normal approximation applies tie and continuity corrections.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                           WilcoxonMethod method = WilcoxonMethod::kAuto) {
  detail::check_paired(a, b, "wilcoxon_signed_rank");
  std::vector<double> diffs;
  diffs.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult out;
  out.nonzero = diffs.size();
  if (diffs.empty()) return out;

  std::vector<double> mags(diffs.size());
  std::transform(diffs.begin(), diffs.end(), mags.begin(), [](double d) { return std::fabs(d); });
  const std::vector<double> ranks = average_ranks(mags);
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i] > 0) out.w_plus += ranks[i];
  }
  const std::size_t m = diffs.size();
  const bool exact = method == WilcoxonMethod::kExact ||
                     (method == WilcoxonMethod::kAuto && m <= kExactWilcoxonLimit);
  out.exact = exact;

  if (exact) {
    if (m > 62) throw InputError("wilcoxon_signed_rank: exact test limited to 62 differences");
    // Doubled ranks are integers even with average-rank ties.
    std::vector<std::size_t> doubled(m);
    std::size_t total = 0;
    for (std::size_t i = 0; i < m; ++i) {
      doubled[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
      total += doubled[i];
    }
    std::vector<std::uint64_t> counts(total + 1, 0);
    counts[0] = 1;
    std::size_t reach = 0;
    for (std::size_t r : doubled) {
      for (std::size_t s = reach + 1; s-- > 0;) {
        if (counts[s] != 0) counts[s + r] += counts[s];
      }
      reach += r;
    }
    const auto w2 = static_cast<std::size_t>(std::llround(2.0 * out.w_plus));
    std::uint64_t le = 0;
    std::uint64_t ge = 0;
    for (std::size_t s = 0; s <= total; ++s) {
      if (s <= w2) le += counts[s];
      if (s >= w2) ge += counts[s];
    }
    const double denom = std::ldexp(1.0, static_cast<int>(m));
    const double tail = static_cast<double>(std::min(le, ge)) / denom;
    out.p_value = std::min(1.0, 2.0 * tail);
    return out;
  }

  const double md = static_cast<double>(m);
  const double mean = md * (md + 1.0) / 4.0;
  double var = md * (md + 1.0) * (2.0 * md + 1.0) / 24.0;
  {
    std::vector<double> sorted = mags;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      var -= (t * t * t - t) / 48.0;
      i = j + 1;
    }
  }
  if (var <= 0.0) return out;
  double dev = out.w_plus - mean;
  if (dev > 0) {
    dev -= 0.5;
  } else if (dev < 0) {
    dev += 0.5;
  }
  const double z = std::fabs(dev) / std::sqrt(var);
  out.p_value = std::min(1.0, 2.0 * detail::normal_sf(z));
  return out;
}

/// Product-moment correlation; std::nullopt when either series has zero variance.
inline std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  detail::check_paired(a, b, "pearson");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
  const double r = sab / (std::sqrt(saa) * std::sqrt(sbb));
  return std::clamp(r, -1.0, 1.0);
}

/// Pearson correlation of average ranks.
inline std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  detail::check_paired(a, b, "spearman");
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  return pearson(ra, rb);
}

/// Rank 1 = largest value. Ties are broken by position (lower index ranks first).
inline std::vector<int> rank_descending(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return v[i] > v[j]; });
  std::vector<int> ranks(v.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) ranks[order[pos]] = static_cast<int>(pos) + 1;
  return ranks;
}

inline double trapezoid_auc(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ShapeError("trapezoid_auc: xs and ys differ in length");
  if (xs.size() < 2) throw InputError("trapezoid_auc: need at least 2 points");
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    if (!(xs[i + 1] > xs[i])) throw InputError("trapezoid_auc: xs must be strictly increasing");
    area += 0.5 * (ys[i] + ys[i + 1]) * (xs[i + 1] - xs[i]);
  }
  return area;
}

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace metaeval::stats
