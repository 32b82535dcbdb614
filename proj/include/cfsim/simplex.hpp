#pragma once

// Points of the (possibly rescaled) infinite simplex and the PD(1) sampler.
//
// A SimplexVector stores finitely many entries; whatever was cut off by the
// sampler's truncation is kept as a single `residual` mass. Kernels never
// split or merge the residual, and a size-biased pick that lands in it is
// reported rather than resolved.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cfsim/rng.hpp"

namespace cfsim {

inline constexpr double kDefaultTruncation = 1e-9;

class SimplexVector {
 public:
  SimplexVector() : entries_{1.0} {}

  // `entries` must already be nonincreasing and positive.
  explicit SimplexVector(std::vector<double> entries, double residual = 0.0, double scale = 1.0, double truncation = 0.0)
      : entries_(std::move(entries)), residual_(residual), scale_(scale), truncation_(truncation) {
    validate();
  }

  // Sorts (stably, nonincreasing) before validating.
  static SimplexVector from_unsorted(std::vector<double> entries, double residual = 0.0, double scale = 1.0,
                                     double truncation = 0.0) {
    std::stable_sort(entries.begin(), entries.end(), std::greater<>());
    return SimplexVector(std::move(entries), residual, scale, truncation);
  }

  std::span<const double> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  double residual() const { return residual_; }
  double scale() const { return scale_; }
  double truncation() const { return truncation_; }
  double largest() const { return entries_.empty() ? 0.0 : entries_.front(); }
  double entry_sum() const { return std::accumulate(entries_.begin(), entries_.end(), 0.0); }

  friend bool operator==(const SimplexVector&, const SimplexVector&) = default;

 private:
  void validate() const {
    if (!(scale_ > 0.0) || !std::isfinite(scale_)) throw std::invalid_argument("SimplexVector: scale must be positive");
    if (!(residual_ >= 0.0)) throw std::invalid_argument("SimplexVector: residual must be nonnegative");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!(entries_[i] > 0.0)) throw std::invalid_argument("SimplexVector: entries must be positive");
      if (i > 0 && entries_[i] > entries_[i - 1])
        throw std::invalid_argument("SimplexVector: entries must be nonincreasing");
    }
    const double tolerance = 1e-12 * scale_ * static_cast<double>(std::max<std::size_t>(entries_.size(), 1));
    const double total = entry_sum() + residual_;
    if (std::abs(total - scale_) > tolerance)
      throw std::invalid_argument("SimplexVector: entries + residual = " + std::to_string(total) +
                                  " differs from scale " + std::to_string(scale_));
  }

  std::vector<double> entries_;
  double residual_ = 0.0;
  double scale_ = 1.0;
  double truncation_ = 0.0;
};

inline constexpr std::size_t kMaxSticks = 1'000'000;

// PD(1) by stick-breaking: x_j = U_j * (stick left), stopping once the stick
// left is below `truncation`; that remainder becomes the residual.
template <std::invocable Uniform01>
SimplexVector sample_pd1(Uniform01&& uniform01, double truncation = kDefaultTruncation) {
  if (!(truncation > 0.0 && truncation < 1.0)) throw std::invalid_argument("sample_pd1: truncation must lie in (0, 1)");
  std::vector<double> sticks;
  double remaining = 1.0;
  std::size_t drawn = 0;
  while (remaining >= truncation) {
    if (++drawn > kMaxSticks) throw std::runtime_error("sample_pd1: stick-breaking did not terminate");
    const double piece = static_cast<double>(uniform01()) * remaining;
    if (piece <= 0.0) continue;
    sticks.push_back(piece);
    remaining -= piece;
  }
  return SimplexVector::from_unsorted(std::move(sticks), remaining, 1.0, truncation);
}

inline SimplexVector sample_pd1(Rng& rng, double truncation = kDefaultTruncation) {
  return sample_pd1([&rng] { return rng.uniform(); }, truncation);
}

struct SmallMass {
  double value;
  bool residual_excluded;  // s is below the truncation level, so the tail could not be attributed
};

enum class Boundary { inclusive, exclusive };

// Total size of the entries <= s (or < s), plus the truncated tail whenever
// the tail is known to consist of entries that small.
inline SmallMass beta_small_mass(const SimplexVector& y, double s, Boundary boundary = Boundary::inclusive) {
  if (!(s >= 0.0)) throw std::invalid_argument("beta_small_mass: s must be nonnegative");
  double sum = 0.0;
  for (auto it = y.entries().rbegin(); it != y.entries().rend(); ++it) {
    const bool small = boundary == Boundary::inclusive ? *it <= s : *it < s;
    if (!small) break;
    sum += *it;
  }
  const bool tail_is_small = y.residual() == 0.0 || s >= y.truncation();
  if (tail_is_small) sum += y.residual();
  return {sum, !tail_is_small};
}

// Index of the entry whose interval contains u when the entries are laid end
// to end in index order with the residual last. nullopt means the residual.
// A point on a boundary belongs to the interval on its right.
inline std::optional<std::size_t> size_biased_pick(const SimplexVector& y, double u) {
  if (!(u >= 0.0 && u < y.scale())) throw std::invalid_argument("size_biased_pick: u must lie in [0, scale)");
  double end = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    end += y[i];
    if (u < end) return i;
  }
  if (y.residual() > 0.0 || y.size() == 0) return std::nullopt;
  return y.size() - 1;  // rounding gap at the far end
}

}  // namespace cfsim
