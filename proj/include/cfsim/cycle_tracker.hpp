#pragma once

// Cycle structure of a permutation of {1..n} under left composition with
// transpositions.
//
// Two interchangeable implementations share one interface:
//   TreapCycleTracker  each cycle is an implicit treap holding the cycle in
//                      successor order, so merge and split are a handful of
//                      O(log k) split/join operations.
//   NaiveCycleTracker  successor/predecessor arrays; every query walks the
//                      orbit. Used as the reference oracle.
//
// Composing T = (a b) on the left of pi changes exactly two successor links:
// the predecessors of a and b swap targets. With both cycles rotated to start
// at a (resp. b) that is a concatenation when the cycles differ, and a cut at
// orbit_distance(a, b) when they coincide.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "cfsim/rng.hpp"

namespace cfsim {

using Vertex = std::uint32_t;  // 1-based

struct Merged {
  std::uint64_t size_a;  // cycle of a before the merge
  std::uint64_t size_b;  // cycle of b before the merge
  friend bool operator==(const Merged&, const Merged&) = default;
};

struct Split {
  std::uint64_t size_a;  // new cycle through a, equals orbit_distance(a, b)
  std::uint64_t size_b;  // new cycle through b
  friend bool operator==(const Split&, const Split&) = default;
};

using TranspositionEffect = std::variant<Merged, Split>;

struct CycleRecord {
  std::uint64_t size;
  Vertex min_vertex;
  friend bool operator==(const CycleRecord&, const CycleRecord&) = default;
};

namespace detail {

// Multiset of cycle sizes.
class SizeHistogram {
 public:
  void add(std::uint64_t size, std::uint64_t times = 1) { counts_[size] += times; }

  void remove(std::uint64_t size) {
    auto it = counts_.find(size);
    if (--it->second == 0) counts_.erase(it);
  }

  std::vector<std::uint64_t> sorted_desc() const {
    std::vector<std::uint64_t> out;
    for (auto it = counts_.rbegin(); it != counts_.rend(); ++it) out.insert(out.end(), it->second, it->first);
    return out;
  }

  std::uint64_t largest() const { return counts_.empty() ? 0 : counts_.rbegin()->first; }

  std::size_t total_count() const {
    std::size_t c = 0;
    for (const auto& [size, count] : counts_) c += count;
    return c;
  }

 private:
  std::map<std::uint64_t, std::uint64_t> counts_;
};

inline void check_vertex(Vertex v, std::uint32_t n) {
  if (v < 1 || v > n) throw std::out_of_range("vertex " + std::to_string(v) + " outside 1.." + std::to_string(n));
}

inline void check_transposition(Vertex a, Vertex b, std::uint32_t n) {
  check_vertex(a, n);
  check_vertex(b, n);
  if (a == b) throw std::invalid_argument("identity transposition (a == b) is not allowed");
}

// Sort records by size descending, ties by smallest contained vertex.
inline void sort_cycles(std::vector<CycleRecord>& cycles) {
  std::sort(cycles.begin(), cycles.end(), [](const CycleRecord& x, const CycleRecord& y) {
    return x.size != y.size ? x.size > y.size : x.min_vertex < y.min_vertex;
  });
}

inline std::vector<CycleRecord> cycles_from_labels(const std::vector<Vertex>& labels) {
  std::vector<std::uint64_t> size(labels.size(), 0);
  for (std::size_t v = 1; v < labels.size(); ++v) ++size[labels[v]];
  std::vector<CycleRecord> out;
  for (std::size_t v = 1; v < labels.size(); ++v)
    if (labels[v] == v) out.push_back({size[v], static_cast<Vertex>(v)});
  sort_cycles(out);
  return out;
}

}  // namespace detail

class TreapCycleTracker {
 public:
  explicit TreapCycleTracker(std::uint32_t n) : n_(n), nodes_(static_cast<std::size_t>(n) + 1) {
    if (n < 1) throw std::invalid_argument("n must be positive");
    for (Vertex v = 1; v <= n; ++v) nodes_[v].size = 1;
    histogram_.add(1, n);
  }

  std::uint32_t n() const { return n_; }

  TranspositionEffect apply_transposition(Vertex a, Vertex b) {
    detail::check_transposition(a, b, n_);
    const auto [root_a, index_a] = locate(a);
    const auto [root_b, index_b] = locate(b);
    if (root_a != root_b) {
      const std::uint64_t p = nodes_[root_a].size;
      const std::uint64_t q = nodes_[root_b].size;
      const Vertex cycle_a = rotate(root_a, index_a);
      const Vertex cycle_b = rotate(root_b, index_b);
      nodes_[join(cycle_a, cycle_b)].parent = 0;
      histogram_.remove(p);
      histogram_.remove(q);
      histogram_.add(p + q);
      return Merged{p, q};
    }
    const std::uint64_t k = nodes_[root_a].size;
    const std::uint64_t m = (index_b + k - index_a) % k;
    const Vertex from_a = rotate(root_a, index_a);
    split(from_a, m);
    histogram_.remove(k);
    histogram_.add(m);
    histogram_.add(k - m);
    return Split{m, k - m};
  }

  std::vector<std::uint64_t> cycle_sizes_sorted() const { return histogram_.sorted_desc(); }
  std::uint64_t largest_cycle() const { return histogram_.largest(); }
  std::size_t cycle_count() const { return histogram_.total_count(); }

  std::uint64_t cycle_size_of(Vertex v) const {
    detail::check_vertex(v, n_);
    return nodes_[root(v)].size;
  }

  bool same_cycle(Vertex a, Vertex b) const {
    detail::check_vertex(a, n_);
    detail::check_vertex(b, n_);
    return root(a) == root(b);
  }

  // Least m >= 1 with pi^m(a) = b; nullopt when a and b lie in different cycles.
  std::optional<std::uint64_t> orbit_distance(Vertex a, Vertex b) const {
    detail::check_vertex(a, n_);
    detail::check_vertex(b, n_);
    const auto [root_a, index_a] = locate(a);
    const auto [root_b, index_b] = locate(b);
    if (root_a != root_b) return std::nullopt;
    const std::uint64_t k = nodes_[root_a].size;
    const std::uint64_t m = (index_b + k - index_a) % k;
    return m == 0 ? k : m;
  }

  Vertex successor(Vertex v) const { return advance(v, 1); }

  // pi^steps(v).
  Vertex advance(Vertex v, std::uint64_t steps) const {
    detail::check_vertex(v, n_);
    const auto [r, index] = locate(v);
    return select(r, (index + steps) % nodes_[r].size);
  }

  // labels[v] = smallest vertex of the cycle through v (labels[0] unused).
  std::vector<Vertex> cycle_labels() const {
    std::vector<Vertex> labels(nodes_.size(), 0);
    std::vector<Vertex> first_seen(nodes_.size(), 0);
    for (Vertex v = 1; v <= n_; ++v) {
      Vertex& label = first_seen[root(v)];
      if (label == 0) label = v;
      labels[v] = label;
    }
    return labels;
  }

  std::vector<CycleRecord> cycles() const { return detail::cycles_from_labels(cycle_labels()); }

 private:
  struct Node {
    Vertex left = 0;
    Vertex right = 0;
    Vertex parent = 0;
    std::uint32_t size = 0;
  };

  // Fixed pseudo-random heap priority; no RNG state involved.
  static std::uint32_t priority(Vertex v) {
    std::uint64_t z = v * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return static_cast<std::uint32_t>(z >> 32);
  }

  std::uint32_t size_of(Vertex t) const { return t ? nodes_[t].size : 0; }

  void pull(Vertex t) { nodes_[t].size = 1 + size_of(nodes_[t].left) + size_of(nodes_[t].right); }

  Vertex root(Vertex v) const {
    while (nodes_[v].parent) v = nodes_[v].parent;
    return v;
  }

  // Root of v's treap and v's 0-based position in the stored cycle order.
  std::pair<Vertex, std::uint64_t> locate(Vertex v) const {
    std::uint64_t index = size_of(nodes_[v].left);
    while (const Vertex p = nodes_[v].parent) {
      if (nodes_[p].right == v) index += size_of(nodes_[p].left) + 1;
      v = p;
    }
    return {v, index};
  }

  Vertex select(Vertex t, std::uint64_t index) const {
    for (;;) {
      const std::uint64_t left = size_of(nodes_[t].left);
      if (index < left) {
        t = nodes_[t].left;
      } else if (index == left) {
        return t;
      } else {
        index -= left + 1;
        t = nodes_[t].right;
      }
    }
  }

  Vertex join(Vertex a, Vertex b) {
    if (!a) return b;
    if (!b) return a;
    if (priority(a) > priority(b)) {
      const Vertex r = join(nodes_[a].right, b);
      nodes_[a].right = r;
      nodes_[r].parent = a;
      pull(a);
      return a;
    }
    const Vertex l = join(a, nodes_[b].left);
    nodes_[b].left = l;
    nodes_[l].parent = b;
    pull(b);
    return b;
  }

  // First `count` nodes of t and the rest; both returned roots have parent 0.
  std::pair<Vertex, Vertex> split(Vertex t, std::uint64_t count) {
    if (!t) return {0, 0};
    Node& node = nodes_[t];
    const std::uint64_t left = size_of(node.left);
    node.parent = 0;
    if (count <= left) {
      auto [l, r] = split(node.left, count);
      nodes_[t].left = r;
      if (r) nodes_[r].parent = t;
      pull(t);
      return {l, t};
    }
    auto [l, r] = split(node.right, count - left - 1);
    nodes_[t].right = l;
    if (l) nodes_[l].parent = t;
    pull(t);
    return {t, r};
  }

  // Rotate the cycle so that position `index` becomes the first element.
  Vertex rotate(Vertex t, std::uint64_t index) {
    if (index == 0) return t;
    auto [head, tail] = split(t, index);
    const Vertex r = join(tail, head);
    nodes_[r].parent = 0;
    return r;
  }

  std::uint32_t n_;
  std::vector<Node> nodes_;
  detail::SizeHistogram histogram_;
};

class NaiveCycleTracker {
 public:
  explicit NaiveCycleTracker(std::uint32_t n)
      : n_(n), succ_(static_cast<std::size_t>(n) + 1), pred_(static_cast<std::size_t>(n) + 1) {
    if (n < 1) throw std::invalid_argument("n must be positive");
    for (Vertex v = 0; v <= n; ++v) succ_[v] = pred_[v] = v;
    histogram_.add(1, n);
  }

  // Start from an explicit successor table succ[v] = pi(v), v = 1..n (succ[0] ignored).
  explicit NaiveCycleTracker(std::vector<Vertex> succ) : NaiveCycleTracker(static_cast<std::uint32_t>(succ.size() - 1)) {
    std::vector<bool> hit(succ.size(), false);
    for (Vertex v = 1; v <= n_; ++v) {
      detail::check_vertex(succ[v], n_);
      if (hit[succ[v]]) throw std::invalid_argument("successor table is not a bijection");
      hit[succ[v]] = true;
      succ_[v] = succ[v];
      pred_[succ[v]] = v;
    }
    histogram_ = {};
    for (const auto& c : cycles()) histogram_.add(c.size);
  }

  std::uint32_t n() const { return n_; }

  TranspositionEffect apply_transposition(Vertex a, Vertex b) {
    detail::check_transposition(a, b, n_);
    TranspositionEffect effect;
    if (const auto m = orbit_distance(a, b)) {
      const std::uint64_t k = cycle_size_of(a);
      histogram_.remove(k);
      histogram_.add(*m);
      histogram_.add(k - *m);
      effect = Split{*m, k - *m};
    } else {
      const std::uint64_t p = cycle_size_of(a);
      const std::uint64_t q = cycle_size_of(b);
      histogram_.remove(p);
      histogram_.remove(q);
      histogram_.add(p + q);
      effect = Merged{p, q};
    }
    const Vertex before_a = pred_[a];
    const Vertex before_b = pred_[b];
    succ_[before_a] = b;
    succ_[before_b] = a;
    pred_[b] = before_a;
    pred_[a] = before_b;
    return effect;
  }

  std::vector<std::uint64_t> cycle_sizes_sorted() const { return histogram_.sorted_desc(); }
  std::uint64_t largest_cycle() const { return histogram_.largest(); }
  std::size_t cycle_count() const { return histogram_.total_count(); }

  std::uint64_t cycle_size_of(Vertex v) const {
    detail::check_vertex(v, n_);
    std::uint64_t k = 1;
    for (Vertex w = succ_[v]; w != v; w = succ_[w]) ++k;
    return k;
  }

  bool same_cycle(Vertex a, Vertex b) const { return a == b || orbit_distance(a, b).has_value(); }

  std::optional<std::uint64_t> orbit_distance(Vertex a, Vertex b) const {
    detail::check_vertex(a, n_);
    detail::check_vertex(b, n_);
    std::uint64_t m = 1;
    for (Vertex w = succ_[a];; w = succ_[w], ++m) {
      if (w == b) return m;
      if (w == a) return std::nullopt;
    }
  }

  Vertex successor(Vertex v) const {
    detail::check_vertex(v, n_);
    return succ_[v];
  }

  Vertex advance(Vertex v, std::uint64_t steps) const {
    detail::check_vertex(v, n_);
    steps %= cycle_size_of(v);
    while (steps--) v = succ_[v];
    return v;
  }

  std::vector<Vertex> cycle_labels() const {
    std::vector<Vertex> labels(succ_.size(), 0);
    for (Vertex v = 1; v <= n_; ++v) {
      if (labels[v]) continue;
      for (Vertex w = v; labels[w] == 0; w = succ_[w]) labels[w] = v;
    }
    return labels;
  }

  std::vector<CycleRecord> cycles() const { return detail::cycles_from_labels(cycle_labels()); }

 private:
  std::uint32_t n_;
  std::vector<Vertex> succ_;
  std::vector<Vertex> pred_;
  detail::SizeHistogram histogram_;
};

template <class T>
concept CycleTracker = requires(T t, const T ct, Vertex v, std::uint64_t k) {
  { T(std::uint32_t{1}) };
  { ct.n() } -> std::convertible_to<std::uint32_t>;
  { t.apply_transposition(v, v) } -> std::same_as<TranspositionEffect>;
  { ct.cycle_sizes_sorted() } -> std::same_as<std::vector<std::uint64_t>>;
  { ct.largest_cycle() } -> std::same_as<std::uint64_t>;
  { ct.cycle_size_of(v) } -> std::same_as<std::uint64_t>;
  { ct.orbit_distance(v, v) } -> std::same_as<std::optional<std::uint64_t>>;
  { ct.advance(v, k) } -> std::same_as<Vertex>;
  { ct.cycle_labels() } -> std::same_as<std::vector<Vertex>>;
  { ct.cycles() } -> std::same_as<std::vector<CycleRecord>>;
};

// Uniform transposition on {1..n}: a uniform, b uniform among the other n - 1
// vertices. With allow_identity, a and b are independent and may coincide.
inline std::pair<Vertex, Vertex> uniform_transposition(Rng& rng, std::uint32_t n, bool allow_identity = false) {
  const auto a = static_cast<Vertex>(rng.uniform_index(n) + 1);
  if (allow_identity) return {a, static_cast<Vertex>(rng.uniform_index(n) + 1)};
  auto b = static_cast<Vertex>(rng.uniform_index(n - 1) + 1);
  if (b >= a) ++b;
  return {a, b};
}

static_assert(CycleTracker<TreapCycleTracker>);
static_assert(CycleTracker<NaiveCycleTracker>);

// Fewest cycles whose union covers at least fraction * |target| vertices of
// target. Taking cycles greedily by intersection size is optimal here.
template <CycleTracker Tracker>
std::uint64_t min_cycles_covering(const Tracker& state, std::span<const Vertex> target, double fraction) {
  if (target.empty()) throw std::invalid_argument("target set must be nonempty");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must lie in (0, 1]");
  std::vector<Vertex> members(target.begin(), target.end());
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  for (Vertex v : members) detail::check_vertex(v, state.n());

  const auto labels = state.cycle_labels();
  std::unordered_map<Vertex, std::uint64_t> hits;
  for (Vertex v : members) ++hits[labels[v]];
  std::vector<std::uint64_t> counts;
  counts.reserve(hits.size());
  for (const auto& [label, count] : hits) counts.push_back(count);
  std::sort(counts.begin(), counts.end(), std::greater<>());

  const double needed = fraction * static_cast<double>(members.size()) * (1.0 - 1e-12);
  std::uint64_t covered = 0;
  std::uint64_t used = 0;
  for (std::uint64_t c : counts) {
    if (static_cast<double>(covered) >= needed) break;
    covered += c;
    ++used;
  }
  return used;
}

}  // namespace cfsim
