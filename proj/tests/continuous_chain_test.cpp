#include "cfsim/continuous_chain.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "cfsim/stats.hpp"

namespace cfsim {
namespace {

// Replays a fixed list of uniforms.
struct Script {
  std::vector<double> values;
  std::size_t next = 0;
  double operator()() { return values.at(next++); }
};

TEST(StepM, SingleEntryAlwaysSplits) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto [y, rec] = step_m(SimplexVector({1.0}), rng);
    ASSERT_EQ(rec.kind, StepKind::split);
    ASSERT_EQ(y.size(), 2u);
    EXPECT_EQ(y[0], std::max(rec.piece, 1.0 - rec.piece));
  }
  Script s{{0.1, 0.7, 0.25}};
  const auto [y, rec] = step_m(SimplexVector({1.0}), s);
  EXPECT_EQ(y, SimplexVector({0.75, 0.25}));
}

TEST(StepM, TwoHalvesMergeWithProbabilityOneHalf) {
  // Enumerate the four (i, j) cells of the tiling.
  int merges = 0;
  for (double u1 : {0.25, 0.75})
    for (double u2 : {0.25, 0.75}) {
      Script s{{u1, u2, 0.5}};
      const auto [y, rec] = step_m(SimplexVector({0.5, 0.5}), s);
      if (rec.kind == StepKind::merge) {
        ++merges;
        EXPECT_EQ(y, SimplexVector({1.0}));
      }
    }
  EXPECT_EQ(merges, 2);
}

TEST(StepM, RedrawsDegenerateSplitPoints) {
  Script s{{0.2, 0.3, 0.0, 0.5}};
  const auto [y, rec] = step_m(SimplexVector({0.5, 0.5}), s);
  EXPECT_EQ(rec.piece, 0.25);
  EXPECT_EQ(s.next, 4u);
}

TEST(StepM, ResidualHitIsAFlaggedNoop) {
  const SimplexVector y({0.5, 0.3}, 0.2, 1.0, 0.25);
  Script s{{0.9, 0.1}};
  const auto [next, rec] = step_m(y, s);
  EXPECT_EQ(rec.kind, StepKind::residual_noop);
  EXPECT_TRUE(rec.sub_truncation_event);
  EXPECT_EQ(next, y);
}

TEST(StepM, RejectsRescaledStates) {
  Rng rng(1);
  EXPECT_THROW(step_m(SimplexVector({1.0, 0.25}, 0.0, 1.25), rng), std::invalid_argument);
}

TEST(StepM, SplitThenMergeRestoresTheMultiset) {
  const SimplexVector y({0.5, 0.3, 0.2});
  Script split{{0.6, 0.7, 0.25}};  // entry 1 twice, v = 0.075
  const auto [mid, r1] = step_m(y, split);
  ASSERT_EQ(r1.kind, StepKind::split);
  ASSERT_EQ(mid.size(), 4u);
  // pieces 0.225 and 0.075 now sit at indices 2 and 3 of (0.5, 0.225, 0.2, 0.075)
  Script merge{{0.55, 0.99}};
  const auto [back, r2] = step_m(mid, merge);
  ASSERT_EQ(r2.kind, StepKind::merge);
  EXPECT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(back[i], y[i], 1e-15);
}

TEST(StepM, MassAndCountInvariants) {
  Rng rng(8);
  auto y = sample_pd1(rng, 1e-6);
  const double mass = y.entry_sum() + y.residual();
  for (int step = 0; step < 20000; ++step) {
    const auto [next, rec] = step_m(y, rng);
    const auto diff = static_cast<long>(next.size()) - static_cast<long>(y.size());
    switch (rec.kind) {
      case StepKind::merge: ASSERT_EQ(diff, -1); break;
      case StepKind::split: ASSERT_EQ(diff, 1); break;
      case StepKind::residual_noop: ASSERT_EQ(diff, 0); break;
    }
    ASSERT_NEAR(next.entry_sum() + next.residual(), mass, 1e-12 * (step + 1));
    y = next;
  }
}

TEST(StepM, Pd1IsInvariantForTheLargestEntry) {
  Rng rng(31);
  std::vector<double> before;
  std::vector<double> after;
  for (int chain = 0; chain < 2000; ++chain) {
    auto y = sample_pd1(rng, 1e-9);
    before.push_back(y.largest());
    for (int step = 0; step < 300; ++step) y = step_m(y, rng).first;
    after.push_back(y.largest());
  }
  std::sort(before.begin(), before.end());
  std::sort(after.begin(), after.end());
  EXPECT_LT(ks_statistic(before, after), ks_critical_two_sample(before.size(), after.size(), 0.01));
}

}  // namespace
}  // namespace cfsim
