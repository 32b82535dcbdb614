#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace cfsim {

// Survival probability z(s) of a Galton-Watson process with Poisson(s)
// offspring: 0 for s <= 1, otherwise the positive root of 1 - z = exp(-s z).
// Bisection on [1e-12, 1 - 1e-12] followed by a few Newton steps.
inline double survival_probability(double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("survival_probability: s must be nonnegative");
  if (s <= 1.0) return 0.0;
  const auto g = [s](double z) { return 1.0 - z - std::exp(-s * z); };
  double lo = 1e-12;
  double hi = 1.0 - 1e-12;
  if (g(lo) <= 0.0) return 0.0;  // s so close to 1 that the root is below the bracket
  if (g(hi) >= 0.0) {
    // Root above the bracket; z -> 1 - exp(-s z) contracts by s exp(-s z) < 1e-10 here.
    double z = hi;
    for (int i = 0; i < 3; ++i) z = 1.0 - std::exp(-s * z);
    return z;
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  double z = 0.5 * (lo + hi);
  for (int i = 0; i < 4; ++i) {
    const double slope = -1.0 + s * std::exp(-s * z);
    const double next = z - g(z) / slope;
    if (!(next > lo && next < hi)) break;
    z = next;
  }
  return z;
}

// P(Y_1 > x) for Y ~ PD(1). Only valid on [1/2, 1], where at most one entry
// can exceed x and the tail is ln(1/x).
inline double pd1_largest_tail(double x) {
  if (!(x >= 0.5 && x <= 1.0)) throw std::invalid_argument("pd1_largest_tail: x must lie in [1/2, 1]");
  return 0.0 - std::log(x);  // +0 rather than -0 at x = 1
}

// sup_x |F_sample(x) - cdf(x)|. `sample` must be sorted ascending.
template <std::invocable<double> Cdf>
double ks_statistic(std::span<const double> sample, Cdf&& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

// Two-sample statistic sup_x |F_a(x) - F_b(x)|. Both inputs sorted ascending.
inline double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// Asymptotic Kolmogorov critical coefficient c(alpha) = sqrt(-ln(alpha/2)/2).
inline double ks_coefficient(double alpha) { return std::sqrt(-std::log(alpha / 2.0) / 2.0); }

inline double ks_critical_one_sample(std::size_t n, double alpha) {
  return ks_coefficient(alpha) / std::sqrt(static_cast<double>(n));
}

inline double ks_critical_two_sample(std::size_t n, std::size_t m, double alpha) {
  const double a = static_cast<double>(n);
  const double b = static_cast<double>(m);
  return ks_coefficient(alpha) * std::sqrt((a + b) / (a * b));
}

// Streaming mean and standard error (Welford).
class RunningMean {
 public:
  void add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
  double standard_error() const { return count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0; }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace cfsim
