#include "cfsim/cycle_tracker.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

namespace cfsim {
namespace {

// Independent oracle: a bare successor array, composed on the left by
// (a b), with orbits recomputed from scratch.
struct SuccessorArray {
  std::vector<Vertex> succ;

  explicit SuccessorArray(std::uint32_t n) : succ(n + 1) { std::iota(succ.begin(), succ.end(), 0); }

  void compose_left(Vertex a, Vertex b) {
    for (auto& s : succ) s = s == a ? b : s == b ? a : s;
  }

  std::vector<std::uint64_t> sorted_orbits() const {
    std::vector<bool> seen(succ.size(), false);
    std::vector<std::uint64_t> out;
    for (std::size_t v = 1; v < succ.size(); ++v) {
      if (seen[v]) continue;
      std::uint64_t k = 0;
      for (std::size_t w = v; !seen[w]; w = succ[w]) {
        seen[w] = true;
        ++k;
      }
      out.push_back(k);
    }
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
  }

  std::uint64_t orbit_of(Vertex v) const {
    std::uint64_t k = 1;
    for (Vertex w = succ[v]; w != v; w = succ[w]) ++k;
    return k;
  }
};

template <class T>
T five_cycle() {
  T t(5);
  // (1 2 3 4 5) as a product of transpositions applied on the left:
  // T4 T3 T2 T1 with T1=(4 5), T2=(3 4), T3=(2 3), T4=(1 2) gives 1->2->3->4->5->1.
  t.apply_transposition(4, 5);
  t.apply_transposition(3, 4);
  t.apply_transposition(2, 3);
  t.apply_transposition(1, 2);
  return t;
}

template <class T>
class CycleTrackerTest : public ::testing::Test {};

using Trackers = ::testing::Types<TreapCycleTracker, NaiveCycleTracker>;
TYPED_TEST_SUITE(CycleTrackerTest, Trackers);

TYPED_TEST(CycleTrackerTest, MergingTwoFixedPoints) {
  TypeParam t(3);
  const auto effect = t.apply_transposition(1, 2);
  EXPECT_EQ(std::get<Merged>(effect), (Merged{1, 1}));
  EXPECT_EQ(t.cycle_sizes_sorted(), (std::vector<std::uint64_t>{2, 1}));
}

TYPED_TEST(CycleTrackerTest, FiveCycleConstruction) {
  auto t = five_cycle<TypeParam>();
  for (Vertex v = 1; v <= 5; ++v) EXPECT_EQ(t.successor(v), v % 5 + 1);
  EXPECT_EQ(t.cycle_sizes_sorted(), (std::vector<std::uint64_t>{5}));
}

TYPED_TEST(CycleTrackerTest, SplittingTheFiveCycle) {
  auto t = five_cycle<TypeParam>();
  const auto effect = t.apply_transposition(1, 3);
  EXPECT_EQ(std::get<Split>(effect), (Split{2, 3}));
  EXPECT_EQ(t.cycle_sizes_sorted(), (std::vector<std::uint64_t>{3, 2}));
  EXPECT_EQ(t.cycle_size_of(4), 3u);
  EXPECT_EQ(t.cycle_size_of(2), 2u);
  EXPECT_EQ(t.successor(2), 1u);
  EXPECT_EQ(t.successor(5), 3u);
  EXPECT_EQ(t.cycles(), (std::vector<CycleRecord>{{3, 3}, {2, 1}}));
}

TYPED_TEST(CycleTrackerTest, TranspositionIsAnInvolution) {
  auto t = five_cycle<TypeParam>();
  t.apply_transposition(2, 4);
  const auto before = t.cycle_sizes_sorted();
  t.apply_transposition(1, 3);
  t.apply_transposition(1, 3);
  EXPECT_EQ(t.cycle_sizes_sorted(), before);
}

TYPED_TEST(CycleTrackerTest, SortedSizesOfSimpleStates) {
  TypeParam id(4);
  EXPECT_EQ(id.cycle_sizes_sorted(), (std::vector<std::uint64_t>{1, 1, 1, 1}));
  TypeParam full(6);
  for (Vertex v = 2; v <= 6; ++v) full.apply_transposition(1, v);
  EXPECT_EQ(full.cycle_sizes_sorted(), (std::vector<std::uint64_t>{6}));
  EXPECT_EQ(full.largest_cycle(), 6u);
}

TYPED_TEST(CycleTrackerTest, OrbitDistance) {
  auto t = five_cycle<TypeParam>();
  EXPECT_EQ(t.orbit_distance(1, 3), 2u);
  EXPECT_EQ(t.orbit_distance(3, 1), 3u);
  TypeParam id(3);
  EXPECT_FALSE(id.orbit_distance(1, 2).has_value());
  EXPECT_EQ(t.advance(4, 3), 2u);
}

TYPED_TEST(CycleTrackerTest, RejectsBadTranspositions) {
  TypeParam t(4);
  EXPECT_THROW(t.apply_transposition(2, 2), std::invalid_argument);
  EXPECT_THROW(t.apply_transposition(0, 2), std::out_of_range);
  EXPECT_THROW(t.apply_transposition(1, 5), std::out_of_range);
  EXPECT_THROW(t.cycle_size_of(5), std::out_of_range);
}

TYPED_TEST(CycleTrackerTest, MinCyclesCovering) {
  auto t = five_cycle<TypeParam>();
  const std::vector<Vertex> all{1, 2, 3, 4, 5};
  EXPECT_EQ(min_cycles_covering(t, all, 1.0), 1u);
  t.apply_transposition(1, 3);  // sizes [3, 2]
  // 0.6 * 5 = 3 vertices: the 3-cycle alone suffices; any single 2-cycle does not.
  EXPECT_EQ(min_cycles_covering(t, all, 0.6), 1u);
  EXPECT_EQ(min_cycles_covering(t, all, 0.61), 2u);
  const std::vector<Vertex> three{3, 4, 5};
  EXPECT_EQ(min_cycles_covering(t, three, 1.0), 1u);

  TypeParam id(10);
  const std::vector<Vertex> ten{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  EXPECT_EQ(min_cycles_covering(id, ten, 0.5), 5u);
  EXPECT_THROW(min_cycles_covering(id, std::span<const Vertex>{}, 0.5), std::invalid_argument);
}

TYPED_TEST(CycleTrackerTest, MatchesSuccessorArrayExhaustivelySmallN) {
  Rng rng(7);
  for (std::uint32_t n = 2; n <= 8; ++n) {
    for (int trial = 0; trial < 200; ++trial) {
      TypeParam t(n);
      SuccessorArray oracle(n);
      for (int step = 0; step < 30; ++step) {
        const auto [a, b] = uniform_transposition(rng, n);
        const bool same = oracle.orbit_of(a) == oracle.orbit_of(b) && t.same_cycle(a, b);
        const auto dist = t.orbit_distance(a, b);
        const auto effect = t.apply_transposition(a, b);
        oracle.compose_left(a, b);
        ASSERT_EQ(t.cycle_sizes_sorted(), oracle.sorted_orbits());
        if (const auto* s = std::get_if<Split>(&effect)) {
          ASSERT_TRUE(same);
          ASSERT_EQ(s->size_a, *dist);
          ASSERT_EQ(oracle.orbit_of(a), s->size_a);
          ASSERT_EQ(oracle.orbit_of(b), s->size_b);
        } else {
          ASSERT_FALSE(dist.has_value());
          ASSERT_EQ(oracle.orbit_of(a), std::get<Merged>(effect).size_a + std::get<Merged>(effect).size_b);
        }
        for (Vertex v = 1; v <= n; ++v) {
          ASSERT_EQ(t.successor(v), oracle.succ[v]);
          ASSERT_EQ(t.cycle_size_of(v), oracle.orbit_of(v));
        }
      }
    }
  }
}

TEST(CycleTrackerAgreement, TreapAndNaiveAgreeOnLargerN) {
  Rng rng(99);
  const std::uint32_t n = 300;
  TreapCycleTracker fast(n);
  NaiveCycleTracker slow(n);
  for (int step = 0; step < 5000; ++step) {
    const auto [a, b] = uniform_transposition(rng, n);
    ASSERT_EQ(fast.apply_transposition(a, b), slow.apply_transposition(a, b));
    if (step % 250 == 0) {
      ASSERT_EQ(fast.cycles(), slow.cycles());
      const Vertex v = static_cast<Vertex>(rng.uniform_index(n) + 1);
      const auto k = rng.uniform_index(n);
      ASSERT_EQ(fast.advance(v, k), slow.advance(v, k));
    }
  }
  EXPECT_EQ(fast.cycle_sizes_sorted(), slow.cycle_sizes_sorted());
  std::uint64_t total = 0;
  for (auto s : fast.cycle_sizes_sorted()) total += s;
  EXPECT_EQ(total, n);
}

// Exact probability over all n(n-1)/2 transpositions that some cycle splits
// with a piece of at most s elements, for one representative permutation of
// every cycle type.
TEST(CycleTrackerProperty, ShortSplitBoundHoldsExhaustively) {
  for (std::uint32_t n = 2; n <= 10; ++n) {
    // generate cycle types by brute force: every composition of n into parts
    std::vector<std::vector<std::uint32_t>> types;
    std::vector<std::uint32_t> cur;
    auto rec = [&](auto&& self, std::uint32_t left, std::uint32_t maxpart) -> void {
      if (left == 0) {
        types.push_back(cur);
        return;
      }
      for (std::uint32_t p = std::min(left, maxpart); p >= 1; --p) {
        cur.push_back(p);
        self(self, left - p, p);
        cur.pop_back();
      }
    };
    rec(rec, n, n);
    for (const auto& type : types) {
      NaiveCycleTracker base(n);
      Vertex first = 1;
      for (auto part : type) {
        for (Vertex v = first + 1; v < first + part; ++v) base.apply_transposition(first, v);
        first += part;
      }
      for (std::uint32_t s = 0; s <= n; ++s) {
        std::uint64_t hits = 0;
        std::uint64_t total = 0;
        for (Vertex a = 1; a <= n; ++a) {
          for (Vertex b = a + 1; b <= n; ++b) {
            ++total;
            NaiveCycleTracker t = base;
            const auto effect = t.apply_transposition(a, b);
            if (const auto* sp = std::get_if<Split>(&effect); sp && std::min(sp->size_a, sp->size_b) <= s) ++hits;
          }
        }
        const double p = static_cast<double>(hits) / static_cast<double>(total);
        ASSERT_LE(p, 2.0 * s / (n - 1.0) + 1e-15) << "n=" << n << " s=" << s;
      }
    }
  }
}

}  // namespace
}  // namespace cfsim
