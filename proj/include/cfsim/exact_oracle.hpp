#pragma once

// Exact law of the cycle type of a transposition walk on small n.
//
// The walk's cycle type is itself a Markov chain on the integer partitions of
// n: from a permutation of type lambda a uniform transposition merges two
// parts p, q with probability 2pq / (n(n-1)) per pair of part instances and
// splits a part k into (m, k - m) with probability k / (n(n-1)) for each
// m in 1..k-1. Rows are sparse (O(#parts^2 + n) entries), so the kernel is
// stored row-wise.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cfsim {

using Partition = std::vector<std::uint32_t>;  // nonincreasing parts

inline constexpr std::uint32_t kMaxExactN = 40;

inline std::string to_string(const Partition& p) {
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) s += '+';
    s += std::to_string(p[i]);
  }
  return s;
}

// All partitions of n in reverse-lexicographic order: (n), (n-1,1), (n-2,2), ...
inline std::vector<Partition> enumerate_partitions(std::uint32_t n) {
  std::vector<Partition> out;
  Partition p{n};
  for (;;) {
    out.push_back(p);
    // Rightmost part larger than 1; everything after it is a run of 1s.
    std::size_t ones = 0;
    while (!p.empty() && p.back() == 1) {
      p.pop_back();
      ++ones;
    }
    if (p.empty()) break;
    const std::uint32_t k = --p.back();
    std::uint32_t rest = static_cast<std::uint32_t>(ones) + 1;
    while (rest > k) {
      p.push_back(k);
      rest -= k;
    }
    if (rest > 0) p.push_back(rest);
  }
  return out;
}

class PartitionSpace {
 public:
  explicit PartitionSpace(std::uint32_t n) : n_(n) {
    if (n < 1 || n > kMaxExactN)
      throw std::invalid_argument("partition space limited to 1 <= n <= " + std::to_string(kMaxExactN) +
                                  " (p(40) = 37338 partitions); got n = " + std::to_string(n));
    partitions_ = enumerate_partitions(n);
    for (std::size_t i = 0; i < partitions_.size(); ++i) index_.emplace(partitions_[i], i);
  }

  std::uint32_t n() const { return n_; }
  std::size_t size() const { return partitions_.size(); }
  const Partition& operator[](std::size_t i) const { return partitions_[i]; }
  std::span<const Partition> partitions() const { return partitions_; }

  std::size_t index_of(const Partition& p) const {
    const auto it = index_.find(p);
    if (it == index_.end()) throw std::invalid_argument("not a partition of " + std::to_string(n_) + ": " + to_string(p));
    return it->second;
  }

 private:
  std::uint32_t n_;
  std::vector<Partition> partitions_;
  std::map<Partition, std::size_t> index_;
};

struct PartitionDistribution {
  std::shared_ptr<const PartitionSpace> space;
  std::vector<double> probability;

  std::uint32_t n() const { return space->n(); }
  double operator()(const Partition& p) const { return probability[space->index_of(p)]; }
};

struct PartitionKernel {
  std::shared_ptr<const PartitionSpace> space;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;  // (target, probability)

  std::uint32_t n() const { return space->n(); }
};

inline PartitionDistribution point_mass(std::shared_ptr<const PartitionSpace> space, const Partition& p) {
  PartitionDistribution d{space, std::vector<double>(space->size(), 0.0)};
  d.probability[space->index_of(p)] = 1.0;
  return d;
}

// delta at the identity permutation's type (1, 1, ..., 1).
inline PartitionDistribution identity_start(std::shared_ptr<const PartitionSpace> space) {
  return point_mass(space, Partition(space->n(), 1));
}

namespace detail {

inline Partition replace_parts(const Partition& p, std::initializer_list<std::uint32_t> removed,
                               std::initializer_list<std::uint32_t> added) {
  Partition q = p;
  for (std::uint32_t r : removed) q.erase(std::find(q.begin(), q.end(), r));
  for (std::uint32_t a : added) q.insert(std::upper_bound(q.begin(), q.end(), a, std::greater<>()), a);
  return q;
}

}  // namespace detail

// With allow_identity, a and b are independent uniform vertices and a = b
// (probability 1/n) leaves the permutation unchanged.
inline PartitionKernel build_transition_matrix(std::uint32_t n, bool allow_identity = false) {
  if (n < 2) throw std::invalid_argument("build_transition_matrix: n must be at least 2");
  auto space = std::make_shared<const PartitionSpace>(n);
  PartitionKernel kernel{space, {}};
  kernel.rows.resize(space->size());
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1);
  const double lazy = allow_identity ? static_cast<double>(n - 1) / static_cast<double>(n) : 1.0;

  for (std::size_t row = 0; row < space->size(); ++row) {
    const Partition& p = (*space)[row];
    std::map<std::uint32_t, std::uint64_t> multiplicity;
    for (std::uint32_t part : p) ++multiplicity[part];
    std::map<std::size_t, double> out;

    for (auto i = multiplicity.begin(); i != multiplicity.end(); ++i) {
      const auto [x, cx] = *i;
      // merges of two distinct part instances
      if (cx >= 2) {
        const double ways = static_cast<double>(cx) * static_cast<double>(cx - 1) / 2.0;
        out[space->index_of(detail::replace_parts(p, {x, x}, {2 * x}))] += ways * 2.0 * x * x / pairs;
      }
      for (auto j = std::next(i); j != multiplicity.end(); ++j) {
        const auto [y, cy] = *j;
        const double ways = static_cast<double>(cx) * static_cast<double>(cy);
        out[space->index_of(detail::replace_parts(p, {x, y}, {x + y}))] += ways * 2.0 * x * y / pairs;
      }
      // splits
      for (std::uint32_t m = 1; m < x; ++m)
        out[space->index_of(detail::replace_parts(p, {x}, {m, x - m}))] += static_cast<double>(cx) * x / pairs;
    }
    auto& r = kernel.rows[row];
    r.reserve(out.size() + 1);
    for (const auto& [target, prob] : out) r.emplace_back(target, prob * lazy);
    if (allow_identity) {
      const auto it = std::find_if(r.begin(), r.end(), [row](const auto& e) { return e.first == row; });
      if (it != r.end()) {
        it->second += 1.0 / n;
      } else {
        r.emplace_back(row, 1.0 / n);
      }
    }
  }
  return kernel;
}

// Law of the cycle type of a uniform permutation: 1 / prod_j (j^{a_j} a_j!).
inline PartitionDistribution uniform_permutation_cycle_law(std::uint32_t n) {
  auto space = std::make_shared<const PartitionSpace>(n);
  PartitionDistribution d{space, std::vector<double>(space->size(), 0.0)};
  for (std::size_t i = 0; i < space->size(); ++i) {
    std::map<std::uint32_t, std::uint32_t> a;
    for (std::uint32_t part : (*space)[i]) ++a[part];
    double log_z = 0.0;
    for (const auto& [j, aj] : a) log_z += aj * std::log(static_cast<double>(j)) + std::lgamma(aj + 1.0);
    d.probability[i] = std::exp(-log_z);
  }
  return d;
}

inline void check_compatible(const PartitionDistribution& d, const PartitionKernel& k) {
  if (d.n() != k.n() || d.probability.size() != k.rows.size())
    throw std::invalid_argument("distribution over n = " + std::to_string(d.n()) + " does not match kernel over n = " +
                                std::to_string(k.n()));
}

// dist * kernel^t.
inline PartitionDistribution evolve(const PartitionDistribution& dist, const PartitionKernel& kernel, std::uint64_t t) {
  check_compatible(dist, kernel);
  PartitionDistribution cur{kernel.space, dist.probability};
  std::vector<double> next(cur.probability.size());
  for (std::uint64_t s = 0; s < t; ++s) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < kernel.rows.size(); ++i) {
      const double p = cur.probability[i];
      if (p == 0.0) continue;
      for (const auto& [j, k] : kernel.rows[i]) next[j] += p * k;
    }
    cur.probability.swap(next);
  }
  return cur;
}

inline double tv_distance(const PartitionDistribution& p, const PartitionDistribution& q) {
  if (p.n() != q.n() || p.probability.size() != q.probability.size())
    throw std::invalid_argument("tv_distance: distributions over different n");
  double s = 0.0;
  for (std::size_t i = 0; i < p.probability.size(); ++i) s += std::abs(p.probability[i] - q.probability[i]);
  return 0.5 * s;
}

// Empirical law from observed cycle types.
inline PartitionDistribution empirical_law(std::shared_ptr<const PartitionSpace> space,
                                           std::span<const std::uint64_t> counts) {
  if (counts.size() != space->size()) throw std::invalid_argument("empirical_law: count vector size mismatch");
  PartitionDistribution d{space, std::vector<double>(space->size(), 0.0)};
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total == 0.0) throw std::invalid_argument("empirical_law: no observations");
  for (std::size_t i = 0; i < counts.size(); ++i) d.probability[i] = static_cast<double>(counts[i]) / total;
  return d;
}

// Largest residual of pi K - pi.
inline double stationarity_residual(const PartitionDistribution& pi, const PartitionKernel& kernel) {
  const auto next = evolve(pi, kernel, 1);
  double r = 0.0;
  for (std::size_t i = 0; i < pi.probability.size(); ++i) r = std::max(r, std::abs(next.probability[i] - pi.probability[i]));
  return r;
}

// Probability, read off kernel row `row`, that the step splits a part and one
// of the two pieces has at most s elements. A split is recognized as a move
// to a partition with one more part; the multiset difference identifies the
// part that was cut and its two pieces.
inline double short_split_probability(const PartitionKernel& kernel, std::size_t row, std::uint32_t s) {
  const Partition& from = (*kernel.space)[row];
  double total = 0.0;
  for (const auto& [target, prob] : kernel.rows[row]) {
    const Partition& to = (*kernel.space)[target];
    if (to.size() != from.size() + 1) continue;
    std::map<std::uint32_t, int> diff;
    for (auto x : to) ++diff[x];
    for (auto x : from) --diff[x];
    std::uint32_t smallest_piece = UINT32_MAX;
    for (const auto& [value, count] : diff)
      if (count > 0) smallest_piece = std::min(smallest_piece, value);
    if (smallest_piece <= s) total += prob;
  }
  return total;
}

// (-1)^{n - #parts}: sign of any permutation with this cycle type.
inline int partition_sign(const Partition& p, std::uint32_t n) { return ((n - p.size()) % 2 == 0) ? 1 : -1; }

}  // namespace cfsim
