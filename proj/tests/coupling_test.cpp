#include "cfsim/coupling.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "cfsim/stats.hpp"

namespace cfsim {
namespace {

constexpr std::size_t U = kUnmatched;

void expect_matching_invariants(std::span<const double> y, std::span<const double> z, const Matching& m) {
  double qy = 0.0;
  double qz = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!m.matched_y(i)) continue;
    ASSERT_EQ(m.backward[m.forward[i]], i);
    ASSERT_EQ(z[m.forward[i]], y[i]);
    qy += y[i];
  }
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (!m.matched_z(j)) continue;
    ASSERT_EQ(m.forward[m.backward[j]], j);
    qz += z[j];
  }
  ASSERT_NEAR(qy, m.matched_mass, 1e-15);
  ASSERT_NEAR(qz, m.matched_mass, 1e-12);
}

TEST(ComputeMatching, Examples) {
  const SimplexVector y({0.5, 0.3, 0.2});
  const auto diag = compute_matching(y, y);
  EXPECT_EQ(diag.forward, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_DOUBLE_EQ(diag.matched_mass, 1.0);

  const auto one = compute_matching(y, SimplexVector({0.5, 0.25, 0.25}));
  EXPECT_EQ(one.forward, (std::vector<std::size_t>{0, U, U}));
  EXPECT_EQ(one.backward, (std::vector<std::size_t>{0, U, U}));
  EXPECT_DOUBLE_EQ(one.matched_mass, 0.5);

  const auto mult = compute_matching(SimplexVector({0.4, 0.3, 0.3}), SimplexVector({0.3, 0.3, 0.2, 0.2}));
  EXPECT_EQ(mult.forward, (std::vector<std::size_t>{U, 0, 1}));
  EXPECT_EQ(mult.backward, (std::vector<std::size_t>{1, 2, U, U}));
  EXPECT_DOUBLE_EQ(mult.matched_mass, 0.6);
  EXPECT_EQ(mult.matched_count(), 2u);

  EXPECT_THROW(compute_matching(SimplexVector({1.0}), SimplexVector({1.0, 0.25}, 0.0, 1.25)), std::invalid_argument);
}

TEST(ComputeMatching, AgreesWithTheKthSmallestRule) {
  // Direct transcription: H = {j : Y_i = Z_j}, k = #{j <= i : Y_j = Y_i}.
  Rng rng(4);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> y;
    std::vector<double> z;
    for (int i = 0; i < 8; ++i) y.push_back(0.1 * static_cast<double>(1 + rng.uniform_index(4)));
    for (int i = 0; i < 8; ++i) z.push_back(0.1 * static_cast<double>(1 + rng.uniform_index(4)));
    std::sort(y.begin(), y.end(), std::greater<>());
    std::sort(z.begin(), z.end(), std::greater<>());
    const auto m = compute_matching(y, z);
    for (std::size_t i = 0; i < y.size(); ++i) {
      std::vector<std::size_t> h;
      for (std::size_t j = 0; j < z.size(); ++j)
        if (z[j] == y[i]) h.push_back(j);
      std::size_t k = 0;
      for (std::size_t j = 0; j <= i; ++j) k += y[j] == y[i];
      ASSERT_EQ(m.forward[i], h.size() < k ? U : h[k - 1]);
    }
    expect_matching_invariants(y, z, m);
  }
}

TEST(ComputeMatching, ToleranceMode) {
  const std::vector<double> y{0.5, 0.31, 0.2};
  const std::vector<double> z{0.5, 0.3, 0.2};
  EXPECT_EQ(compute_matching(y, z).forward, (std::vector<std::size_t>{0, U, 2}));
  EXPECT_EQ(compute_matching(y, z, 0.02).forward, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(BuildTilings, UnmatchedThenMatchedBlock) {
  const CouplingState s(SimplexVector({0.5, 0.3, 0.2}), SimplexVector({0.5, 0.25, 0.25}), 0.1);
  const auto [ty, tz] = s.build_tilings();
  EXPECT_EQ(ty.segments(), (std::vector<TileSegment>{{1, 0.0, 0.3}, {2, 0.3, 0.2}, {0, 0.5, 0.5}}));
  EXPECT_EQ(tz.segments(), (std::vector<TileSegment>{{1, 0.0, 0.25}, {2, 0.25, 0.25}, {0, 0.5, 0.5}}));
}

TEST(BuildTilings, AllMatchedAndResidual) {
  const CouplingState same(SimplexVector({0.5, 0.3, 0.2}), SimplexVector({0.5, 0.3, 0.2}), 0.1);
  EXPECT_EQ(same.build_tilings().first.segments(),
            (std::vector<TileSegment>{{0, 0.0, 0.5}, {1, 0.5, 0.3}, {2, 0.8, 0.2}}));
  const CouplingState res(SimplexVector({0.5, 0.3}, 0.2), SimplexVector({0.5, 0.5}), 0.1);
  EXPECT_EQ(res.build_tilings().first.segments(),
            (std::vector<TileSegment>{{1, 0.0, 0.3}, {std::nullopt, 0.3, 0.2}, {0, 0.5, 0.5}}));
}

TEST(BuildTilings, MatchedPartnersShareIntervals) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    CouplingState s(sample_pd1(rng, 1e-6), sample_pd1(rng, 1e-6), 0.01);
    for (int step = 0; step < 50; ++step) s.step(rng);
    const auto [ty, tz] = s.build_tilings();
    std::vector<std::pair<double, double>> iy(s.y().size());
    std::vector<std::pair<double, double>> iz(s.z().size());
    for (const auto& seg : ty.segments())
      if (seg.entry) iy[*seg.entry] = {seg.start, seg.length};
    for (const auto& seg : tz.segments())
      if (seg.entry) iz[*seg.entry] = {seg.start, seg.length};
    for (std::size_t i = 0; i < s.y().size(); ++i)
      if (s.matching().matched_y(i)) ASSERT_EQ(iy[i], iz[s.matching().forward[i]]);
  }
}

TEST(Tiling, ShiftToFront) {
  // Y = (0.5, 0.3, 0.2) against Z = (0.5, 0.25, 0.25): unmatched 0.3, 0.2 on [0, 0.5), matched 0.5 after.
  const CouplingState s(SimplexVector({0.5, 0.3, 0.2}), SimplexVector({0.5, 0.25, 0.25}), 0.1);
  const auto ty = s.build_tilings().first;
  const TilePick a = ty.pick(0.35);  // entry 2
  ASSERT_EQ(a.entry, 2u);
  EXPECT_DOUBLE_EQ(a.offset, 0.05);
  // shifted layout: 0.2 | 0.3 | 0.5
  EXPECT_EQ(ty.pick_shifted(a, 0.1).entry, 2u);
  EXPECT_EQ(ty.pick_shifted(a, 0.2).entry, 1u);
  EXPECT_DOUBLE_EQ(ty.pick_shifted(a, 0.25).offset, 0.05);
  EXPECT_EQ(ty.pick_shifted(a, 0.7).entry, 0u);
  const TilePick m = ty.pick(0.9);  // the matched 0.5: shifted layout 0.5 | 0.3 | 0.2
  ASSERT_EQ(m.entry, 0u);
  EXPECT_TRUE(m.matched);
  EXPECT_EQ(ty.pick_shifted(m, 0.6).entry, 1u);
  EXPECT_EQ(ty.pick_shifted(m, 0.85).entry, 2u);
}

TEST(CouplingStatsTest, Examples) {
  const CouplingState same(SimplexVector({0.5, 0.3, 0.2}), SimplexVector({0.5, 0.3, 0.2}), 0.1);
  const auto d = same.stats();
  EXPECT_EQ(d.n_unmatched, 0u);
  EXPECT_DOUBLE_EQ(d.q, 1.0);
  EXPECT_EQ(d.y1, 0.0);
  EXPECT_EQ(d.z1, 0.0);

  const CouplingState s(SimplexVector({0.5, 0.3, 0.2}), SimplexVector({0.5, 0.25, 0.25}), 0.1);
  EXPECT_EQ(s.stats().n_unmatched, 4u);
  EXPECT_DOUBLE_EQ(s.stats().y1, 0.3);
  EXPECT_DOUBLE_EQ(s.stats().z1, 0.25);
  const CouplingState t(SimplexVector({0.5, 0.3, 0.2}), SimplexVector({0.5, 0.25, 0.25}), 0.26);
  EXPECT_EQ(t.stats().n_unmatched, 1u);
}

TEST(CouplingStateTest, BarEpsilon) {
  const CouplingState s(SimplexVector({0.5, 0.45, 0.05}), SimplexVector({0.9, 0.06}, 0.04), 0.055);
  EXPECT_DOUBLE_EQ(s.bar_epsilon(), 0.055 + 0.05 + 0.04);
  EXPECT_THROW(CouplingState(SimplexVector({1.0}), SimplexVector({1.0}), 0.0), std::invalid_argument);
}

TEST(StepCoupled, DiagonalStaysDiagonal) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto y = sample_pd1(rng, 1e-6);
    CouplingState s(y, y, 0.01);
    for (int step = 0; step < 100; ++step) {
      const auto rec = s.step(rng);
      ASSERT_EQ(s.y(), s.z());
      ASSERT_EQ(rec.y_action, rec.z_action);
    }
  }
}

TEST(StepCoupled, MatchedPickActsOnThePartner) {
  CouplingState s(SimplexVector({0.5, 0.3, 0.2}), SimplexVector({0.5, 0.25, 0.25}), 0.01);
  const auto rec = s.step(0.75, 0.2);  // both sides pick the matched 0.5 and split it at 0.2
  EXPECT_EQ(rec.y_action, SideAction::split);
  EXPECT_EQ(rec.z_action, SideAction::split);
  EXPECT_TRUE(rec.y_matched_involved);
  EXPECT_TRUE(rec.z_matched_involved);
  EXPECT_EQ(s.y(), SimplexVector::from_unsorted({0.3, 0.3, 0.2, 0.2}));
  EXPECT_EQ(s.z(), SimplexVector::from_unsorted({0.3, 0.25, 0.25, 0.2}));
  EXPECT_EQ(rec.delta_n, 0);
}

TEST(StepCoupled, DoubleMergeOfUnmatchedEntries) {
  CouplingState s(SimplexVector({0.5, 0.3, 0.2}), SimplexVector({0.5, 0.25, 0.25}), 0.01);
  const auto rec = s.step(0.1, 0.4);  // Y: 0.3 then 0.2; Z: 0.25 then 0.25
  EXPECT_EQ(rec.y_action, SideAction::merge);
  EXPECT_EQ(rec.z_action, SideAction::merge);
  EXPECT_FALSE(rec.sub_epsilon);
  EXPECT_EQ(rec.delta_n, -4);  // the two merged halves coincide and become matched
  EXPECT_EQ(s.y(), s.z());
}

TEST(StepCoupled, ResidualHitIsFlagged) {
  CouplingState s(SimplexVector({0.5, 0.3}, 0.2, 1.0, 0.25), SimplexVector({0.5, 0.5}), 0.01);
  const auto before = s.y();
  const auto rec = s.step(0.4, 0.5);
  EXPECT_TRUE(rec.residual_hit);
  EXPECT_TRUE(s.sub_epsilon_event_occurred());
  EXPECT_EQ(s.y(), before);
  EXPECT_THROW(s.step(1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(s.step(0.5, 0.0), std::invalid_argument);
}

TEST(StepCoupled, ContractionAndSplitProperties) {
  Rng rng(2718);
  std::uint64_t double_merges = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    CouplingState s(sample_pd1(rng, 1e-9), sample_pd1(rng, 1e-9), 0.01);
    bool flagged = false;
    for (int step = 0; step < 100; ++step) {
      const auto rec = s.step(rng);
      flagged = flagged || rec.sub_epsilon;
      ASSERT_EQ(s.sub_epsilon_event_occurred(), flagged);
      expect_matching_invariants(s.y().entries(), s.z().entries(), s.matching());
      if (rec.sub_epsilon) continue;
      ASSERT_LE(rec.delta_n, 0);
      if (rec.y_action == SideAction::merge && rec.z_action == SideAction::merge && !rec.y_matched_involved &&
          !rec.z_matched_involved) {
        ++double_merges;
        ASSERT_EQ(rec.delta_n, -2);
      }
      if (rec.y_action == SideAction::split && rec.z_action == SideAction::split) {
        ASSERT_EQ(rec.y_piece, rec.v);
        ASSERT_EQ(rec.z_piece, rec.v);
        const auto y = s.y().entries();
        const auto i = static_cast<std::size_t>(std::find(y.begin(), y.end(), rec.v) - y.begin());
        ASSERT_LT(i, y.size());
        ASSERT_TRUE(s.matching().matched_y(i));
      }
    }
  }
  EXPECT_GT(double_merges, 1000u);
}

TEST(StepCoupled, MarginalsMatchTheUncoupledChain) {
  Rng rng(1618);
  std::vector<double> coupled_y;
  std::vector<double> coupled_z;
  std::vector<double> plain;
  for (int r = 0; r < 10000; ++r) {
    CouplingState s(SimplexVector({1.0}), SimplexVector({0.5, 0.5}), 0.01);
    auto y = SimplexVector({1.0});
    for (int step = 0; step < 100; ++step) {
      s.step(rng);
      y = step_m(y, rng).first;
    }
    coupled_y.push_back(s.y().largest());
    coupled_z.push_back(s.z().largest());
    plain.push_back(y.largest());
  }
  for (auto* v : {&coupled_y, &coupled_z, &plain}) std::sort(v->begin(), v->end());
  const double crit = ks_critical_two_sample(10000, 10000, 0.01);
  EXPECT_LT(ks_statistic(coupled_y, plain), crit);
  EXPECT_LT(ks_statistic(coupled_z, plain), crit);
}

TEST(ObservationTimeTest, Windows) {
  const auto q = ObservationTime::uniform_below(1000);
  EXPECT_EQ(q.count(), 1000u);
  EXPECT_DOUBLE_EQ(q.eta(), 1e-3);
  EXPECT_DOUBLE_EQ(q.mean_plus_one(), 500.5);
  const auto e = ObservationTime::even_window(0.01);  // {0, 2, ..., 10}
  EXPECT_EQ(e.count(), 6u);
  EXPECT_EQ(e.max_value(), 10u);
  EXPECT_DOUBLE_EQ(e.mean_plus_one(), 6.0);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto v = e.sample(rng);
    ASSERT_EQ(v % 2, 0u);
    ASSERT_LE(v, 10u);
  }
  EXPECT_THROW(ObservationTime::uniform_below(0), std::invalid_argument);
}

TEST(SupDistance, PadsWithZeros) {
  EXPECT_DOUBLE_EQ(sup_distance(std::vector<double>{0.5, 0.5}, std::vector<double>{0.7, 0.2, 0.1}), 0.3);
}

}  // namespace
}  // namespace cfsim
