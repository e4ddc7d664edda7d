#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace granvar {

/// Neumaier compensated accumulator.
template <typename Scalar>
class CompensatedSum {
 public:
  CompensatedSum& operator+=(Scalar x) {
    const Scalar t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
    return *this;
  }

  Scalar value() const { return sum_ + comp_; }

 private:
  Scalar sum_{0};
  Scalar comp_{0};
};

/// Stores a series and reports its mean, variance and the standard errors
/// of both. Sums are compensated and taken in insertion order.
class MomentAccumulator {
 public:
  void add(double x) {
    values_.push_back(x);
  }

  std::size_t count() const { return values_.size(); }

  double mean() const {
    if (values_.empty()) return 0.0;
    CompensatedSum<double> s;
    for (double v : values_) s += v;
    return s.value() / static_cast<double>(values_.size());
  }

  /// Unbiased sample variance (divisor n - 1).
  double variance() const {
    const std::size_t n = values_.size();
    if (n < 2) return 0.0;
    const double m = mean();
    CompensatedSum<double> s;
    for (double v : values_) s += (v - m) * (v - m);
    return s.value() / static_cast<double>(n - 1);
  }

  /// Standard error of the mean.
  double mean_se() const {
    const std::size_t n = values_.size();
    if (n < 2) return 0.0;
    return std::sqrt(variance() / static_cast<double>(n));
  }

  /// Large-sample standard error of the unbiased variance,
  /// sqrt((mu4 - (n-3)/(n-1) * sigma^4) / n).
  double variance_se() const {
    const std::size_t n = values_.size();
    if (n < 4) return 0.0;
    const double m = mean();
    CompensatedSum<double> s2;
    CompensatedSum<double> s4;
    for (double v : values_) {
      const double d2 = (v - m) * (v - m);
      s2 += d2;
      s4 += d2 * d2;
    }
    const double dn = static_cast<double>(n);
    const double mu2 = s2.value() / dn;
    const double mu4 = s4.value() / dn;
    const double var = mu4 - (dn - 3.0) / (dn - 1.0) * mu2 * mu2;
    return var > 0.0 ? std::sqrt(var / dn) : 0.0;
  }

  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// Average ranks (1-based), ties share their mean rank.
inline std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

/// Spearman rank correlation; NaN when either side is constant.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return std::nan("");
  const auto rx = average_ranks(x.first(n));
  const auto ry = average_ranks(y.first(n));
  const double mean = 0.5 * static_cast<double>(n + 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr double kZ95OneSided = 1.6448536269514722;

}  // namespace granvar
