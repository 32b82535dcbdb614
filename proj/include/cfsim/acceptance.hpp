#pragma once

// Acceptance criteria for the toolkit. Each criterion is a self-contained
// experiment with its tolerance pinned below; run_acceptance reports one
// result per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cfsim/coupling.hpp"
#include "cfsim/cycle_tracker.hpp"
#include "cfsim/exact_oracle.hpp"
#include "cfsim/experiment.hpp"
#include "cfsim/parallel.hpp"
#include "cfsim/rng.hpp"
#include "cfsim/simplex.hpp"
#include "cfsim/stats.hpp"
#include "cfsim/transposition_graph.hpp"

namespace cfsim::acceptance {

struct Options {
  unsigned threads = 0;  // 0: all hardware threads
  std::uint64_t seed = 20261015;
};

struct Result {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

inline std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) { return Rng(seed, 1000 + tag).next_u64(); }

// 1. Simulated cycle-type law against the exact law.
inline constexpr double kOracleMaxTv = 0.02;
inline constexpr std::uint64_t kOracleReplicates = 100'000;
inline constexpr std::uint64_t kOracleHorizon = 20;
inline constexpr double kOracleSeconds = 120.0;

inline Result oracle_equivalence(const Options& opt) {
  Result res{1, "simulated cycle-type law matches the exact partition chain"};
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string where;
  for (std::uint32_t n : {4u, 6u, 8u}) {
    const auto kernel = build_transition_matrix(n);
    const std::uint64_t seed = sub_seed(opt.seed, n);
    std::vector<std::uint32_t> seen(kOracleReplicates * kOracleHorizon);
    parallel_replicates(kOracleReplicates, opt.threads, [&](std::uint64_t r) {
      Rng rng = replicate_stream(seed, r);
      TreapCycleTracker perm(n);
      for (std::uint64_t t = 1; t <= kOracleHorizon; ++t) {
        const auto [a, b] = uniform_transposition(rng, n);
        perm.apply_transposition(a, b);
        Partition p;
        for (auto s : perm.cycle_sizes_sorted()) p.push_back(static_cast<std::uint32_t>(s));
        seen[r * kOracleHorizon + t - 1] = static_cast<std::uint32_t>(kernel.space->index_of(p));
      }
    });
    auto exact = identity_start(kernel.space);
    for (std::uint64_t t = 1; t <= kOracleHorizon; ++t) {
      exact = evolve(exact, kernel, 1);
      std::vector<std::uint64_t> counts(kernel.space->size(), 0);
      for (std::uint64_t r = 0; r < kOracleReplicates; ++r) ++counts[seen[r * kOracleHorizon + t - 1]];
      const double tv = tv_distance(empirical_law(kernel.space, counts), exact);
      if (tv > worst) {
        worst = tv;
        where = fmt("n=%u t=%llu", n, static_cast<unsigned long long>(t));
      }
    }
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.passed = worst <= kOracleMaxTv && res.seconds < kOracleSeconds;
  res.detail = fmt("max TV %.5f at %s (limit %.2f), %.1f s (limit %.0f s)", worst, where.c_str(), kOracleMaxTv,
                   res.seconds, kOracleSeconds);
  return res;
}

// 2. Giant component fraction against z(2).
inline constexpr std::uint32_t kGiantN = 100'000;
inline constexpr std::uint64_t kGiantReplicates = 50;
inline constexpr double kGiantTolerance = 0.005;
inline constexpr double kGiantSeconds = 60.0;

inline Result giant_component(const Options& opt) {
  Result res{2, "giant component fraction matches z(2)"};
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = sub_seed(opt.seed, 2);
  std::vector<double> fraction(kGiantReplicates);
  parallel_replicates(kGiantReplicates, opt.threads, [&](std::uint64_t r) {
    Rng rng = replicate_stream(seed, r);
    GraphComponents g(kGiantN);
    for (std::uint32_t s = 0; s < kGiantN; ++s) {
      const auto [a, b] = uniform_transposition(rng, kGiantN);
      g.add_edge(a, b);
    }
    fraction[r] = static_cast<double>(g.largest_component().size) / kGiantN;
  });
  RunningMean m;
  for (double f : fraction) m.add(f);
  const double z = survival_probability(2.0);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.passed = std::abs(m.mean() - z) <= kGiantTolerance && res.seconds < kGiantSeconds;
  res.detail = fmt("mean %.6f (se %.6f) vs z(2) = %.6f, |diff| %.6f (limit %.3f), %.1f s", m.mean(), m.standard_error(),
                   z, std::abs(m.mean() - z), kGiantTolerance, res.seconds);
  return res;
}

// 3. Largest normalized cycle against ln(1/x).
inline constexpr std::uint32_t kTailN = 100'000;
inline constexpr std::uint64_t kTailReplicates = 2000;
inline constexpr double kTailMaxDeviation = 0.03;
inline constexpr double kTailSeconds = 600.0;

inline Result largest_cycle_tail(const Options& opt) {
  Result res{3, "largest cycle over giant size follows ln(1/x)"};
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = sub_seed(opt.seed, 3);
  std::vector<double> top1(kTailReplicates);
  parallel_replicates(kTailReplicates, opt.threads, [&](std::uint64_t r) {
    Rng rng = replicate_stream(seed, r);
    TreapCycleTracker perm(kTailN);
    GraphComponents g(kTailN);
    for (std::uint32_t s = 0; s < kTailN; ++s) {
      const auto [a, b] = uniform_transposition(rng, kTailN);
      perm.apply_transposition(a, b);
      g.add_edge(a, b);
    }
    top1[r] = static_cast<double>(perm.largest_cycle()) / static_cast<double>(g.largest_component().size);
  });
  double worst = 0.0;
  std::string points;
  for (double x : kTailPoints) {
    const double p = static_cast<double>(std::count_if(top1.begin(), top1.end(), [x](double v) { return v > x; })) /
                     static_cast<double>(top1.size());
    worst = std::max(worst, std::abs(p - pd1_largest_tail(x)));
    points += fmt(" %.2f:%.4f/%.4f", x, p, pd1_largest_tail(x));
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.passed = worst <= kTailMaxDeviation && res.seconds < kTailSeconds;
  res.detail = fmt("max deviation %.4f (limit %.2f), x:empirical/reference%s, %.1f s", worst, kTailMaxDeviation,
                   points.c_str(), res.seconds);
  return res;
}

// 4. PD(1) is invariant under M.
inline constexpr std::uint64_t kInvarianceChains = 10'000;
inline constexpr std::uint64_t kInvarianceSteps = 1'000;

inline Result pd1_invariance(const Options& opt) {
  Result res{4, "PD(1) largest-entry law is invariant under M"};
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = sub_seed(opt.seed, 4);
  std::vector<double> before(kInvarianceChains);
  std::vector<double> after(kInvarianceChains);
  parallel_replicates(kInvarianceChains, opt.threads, [&](std::uint64_t r) {
    Rng rng = replicate_stream(seed, r);
    auto y = sample_pd1(rng);
    before[r] = y.largest();
    for (std::uint64_t s = 0; s < kInvarianceSteps; ++s) y = step_m(y, rng).first;
    after[r] = y.largest();
  });
  std::sort(before.begin(), before.end());
  std::sort(after.begin(), after.end());
  const double ks = ks_statistic(before, after);
  const double crit = ks_critical_two_sample(before.size(), after.size(), kCheckKsAlpha);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.passed = ks < crit;
  res.detail = fmt("two-sample KS %.5f < critical %.5f (1%%), %.1f s", ks, crit, res.seconds);
  return res;
}

// 5. Uniform cycle law is stationary for the exact kernel.
inline constexpr double kStationarityResidual = 1e-10;

inline Result stationarity(const Options&) {
  Result res{5, "uniform-permutation cycle law is stationary for n <= 12"};
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::uint32_t n = 2; n <= 12; ++n)
    worst = std::max(worst, stationarity_residual(uniform_permutation_cycle_law(n), build_transition_matrix(n)));
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.passed = worst < kStationarityResidual;
  res.detail = fmt("max residual %.3g (limit %.0e)", worst, kStationarityResidual);
  return res;
}

// 6. Short-split bound 2s/(n-1) on every kernel row. The bound is attained
// (a single n-cycle with 2s < n), so comparison allows for rounding only.
inline constexpr double kRoundingSlack = 1e-12;

inline Result short_split_bound(const Options&) {
  Result res{6, "short-split probability is at most 2s/(n-1) for n <= 10"};
  const auto start = std::chrono::steady_clock::now();
  double worst_ratio = 0.0;
  std::uint64_t checked = 0;
  bool ok = true;
  for (std::uint32_t n = 2; n <= 10; ++n) {
    const auto k = build_transition_matrix(n);
    for (std::size_t row = 0; row < k.rows.size(); ++row)
      for (std::uint32_t s = 0; s <= n; ++s) {
        const double p = short_split_probability(k, row, s);
        const double bound = 2.0 * s / (n - 1.0);
        ++checked;
        ok = ok && p <= bound * (1.0 + kRoundingSlack) + kRoundingSlack * 1e-3;
        if (bound > 0.0) worst_ratio = std::max(worst_ratio, p / bound);
      }
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.passed = ok;
  res.detail = fmt("%llu (n, partition, s) cases, max probability/bound %.15f", static_cast<unsigned long long>(checked),
                   worst_ratio);
  return res;
}

// 7. Two-step total variation gap at n = 8.
inline constexpr std::uint32_t kGapN = 8;
inline constexpr std::uint64_t kGapLast = 40;
inline constexpr double kGapLimit = 0.05;

inline Result two_step_gap(const Options&) {
  Result res{7, "TV(law at t, law at t+2) at n = 8 is nonincreasing from t = 8 and small by t = 40"};
  const auto start = std::chrono::steady_clock::now();
  const auto k = build_transition_matrix(kGapN);
  auto at_t = evolve(identity_start(k.space), k, kGapN);
  auto at_t2 = evolve(at_t, k, 2);
  double prev = 2.0;
  bool monotone = true;
  double first = 0.0;
  double last = 0.0;
  for (std::uint64_t t = kGapN; t <= kGapLast; ++t) {
    const double tv = tv_distance(at_t, at_t2);
    if (t == kGapN) first = tv;
    monotone = monotone && tv <= prev;
    prev = last = tv;
    at_t = evolve(at_t, k, 1);
    at_t2 = evolve(at_t2, k, 1);
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.passed = monotone && last < kGapLimit;
  res.detail = fmt("TV %.6g at t=8 down to %.6g at t=40 (limit %.2f), nonincreasing: %s", first, last, kGapLimit,
                   monotone ? "yes" : "no");
  return res;
}

// 8. Coupling contraction and the unmatched-excess bound.
inline constexpr std::uint64_t kContractionReplicates = 100;
inline constexpr std::uint64_t kContractionSteps = 1'000;  // 1e5 coupled steps in total
inline constexpr double kContractionEpsilon = 0.01;

inline Result coupling_contraction(const Options& opt) {
  Result res{8, "coupled steps never increase N without a sub-epsilon event; excess bound holds"};
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  cfg.mode = Mode::coupled;
  cfg.steps = kContractionSteps;
  cfg.q = "uniform:" + std::to_string(kContractionSteps);
  cfg.epsilon = kContractionEpsilon;
  cfg.replicates = kContractionReplicates;
  cfg.seed = sub_seed(opt.seed, 8);
  cfg.threads = opt.threads;
  cfg.check = true;
  std::ostringstream sink;
  const auto out = run_experiment(cfg, sink);
  const auto& r = out.summary["results"];
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.passed = out.check_passed;
  res.detail = fmt("%llu steps, %llu violations, E[excess] %.4f (se %.4f) vs mean bound %.4f",
                   static_cast<unsigned long long>(kContractionReplicates * kContractionSteps),
                   static_cast<unsigned long long>(r["delta_n_violations"].get<std::uint64_t>()),
                   r["unmatched_excess"]["mean"].get<double>(), r["unmatched_excess"]["standard_error"].get<double>(),
                   r["excess_bound"]["mean"].get<double>());
  return res;
}

// 9. Discrepancy probability decreases with the observation window.
inline constexpr std::uint64_t kTrendReplicates = 300;
inline constexpr std::uint64_t kTrendWindows[] = {100, 1'000, 10'000};
inline constexpr double kTrendThreshold = 0.1;

inline Result mixing_trend(const Options& opt) {
  Result res{9, "P(max{y1, z1} > 0.1) at a uniform time in [0, t0) is nonincreasing in t0"};
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = sub_seed(opt.seed, 9);
  constexpr std::size_t w = std::size(kTrendWindows);
  std::vector<std::array<double, w>> p(kTrendReplicates);
  parallel_replicates(kTrendReplicates, opt.threads, [&](std::uint64_t r) {
    Rng rng = replicate_stream(seed, r);
    auto y = sample_pd1(rng);
    auto z = sample_pd1(rng);
    CouplingState state(std::move(y), std::move(z), kContractionEpsilon);
    std::uint64_t hits = 0;
    std::size_t next = 0;
    for (std::uint64_t k = 0; next < w; ++k) {
      if (k == kTrendWindows[next]) {
        p[r][next] = static_cast<double>(hits) / static_cast<double>(k);
        if (++next == w) break;
      }
      const auto s = state.stats();
      hits += std::max(s.y1, s.z1) > kTrendThreshold;
      state.step(rng);
    }
  });
  std::array<RunningMean, w> mean;
  std::array<RunningMean, w - 1> diff;
  for (const auto& row : p) {
    for (std::size_t i = 0; i < w; ++i) mean[i].add(row[i]);
    for (std::size_t i = 0; i + 1 < w; ++i) diff[i].add(row[i + 1] - row[i]);
  }
  bool ok = true;
  for (const auto& d : diff) ok = ok && d.mean() <= kCheckStandardErrors * d.standard_error();
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.passed = ok;
  res.detail = fmt("t0=1e2: %.4f (se %.4f), 1e3: %.4f (se %.4f), 1e4: %.4f (se %.4f), %.1f s", mean[0].mean(),
                   mean[0].standard_error(), mean[1].mean(), mean[1].standard_error(), mean[2].mean(),
                   mean[2].standard_error(), res.seconds);
  return res;
}

// 10. Size-biased picks from PD(1) are uniform.
inline constexpr std::uint64_t kPickSamples = 100'000;

inline Result size_biased_uniformity(const Options& opt) {
  Result res{10, "size-biased pick from PD(1) is uniform on [0, 1]"};
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = sub_seed(opt.seed, 10);
  std::vector<double> picked(kPickSamples, -1.0);
  parallel_replicates(kPickSamples, opt.threads, [&](std::uint64_t r) {
    Rng rng = replicate_stream(seed, r);
    const auto y = sample_pd1(rng);
    // A residual hit (probability below the truncation level) is redrawn.
    for (;;) {
      if (const auto k = size_biased_pick(y, rng.uniform())) {
        picked[r] = y[*k];
        return;
      }
    }
  });
  std::sort(picked.begin(), picked.end());
  const double ks = ks_statistic(picked, [](double x) { return std::clamp(x, 0.0, 1.0); });
  const double crit = ks_critical_one_sample(picked.size(), kCheckKsAlpha);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.passed = ks < crit;
  res.detail = fmt("KS %.5f < critical %.5f (1%%)", ks, crit);
  return res;
}

// 11. Byte-identical CSV across runs and thread counts.
inline Result determinism(const Options& opt) {
  Result res{11, "identical config and seed give byte-identical CSV for 1 and 8 threads"};
  const auto start = std::chrono::steady_clock::now();
  std::vector<ExperimentConfig> configs(4);
  configs[0].mode = Mode::discrete;
  configs[0].n = 2000;
  configs[0].c = 1.0;
  configs[0].replicates = 24;
  configs[0].record_every = 250;
  configs[1].mode = Mode::continuous;
  configs[1].steps = 300;
  configs[1].replicates = 24;
  configs[1].record_every = 50;
  configs[2].mode = Mode::coupled;
  configs[2].steps = 300;
  configs[2].replicates = 24;
  configs[2].record_every = 30;
  configs[3].mode = Mode::coupled_discrete;
  configs[3].n = 2000;
  configs[3].c = 1.0;
  configs[3].replicates = 12;
  configs[3].record_every = 2;
  bool ok = true;
  std::size_t bytes = 0;
  for (auto& cfg : configs) {
    cfg.seed = sub_seed(opt.seed, 11);
    std::string runs[3];
    const unsigned threads[3] = {1, 1, 8};
    for (int i = 0; i < 3; ++i) {
      cfg.threads = threads[i];
      std::ostringstream os;
      run_experiment(cfg, os);
      runs[i] = os.str();
    }
    ok = ok && runs[0] == runs[1] && runs[0] == runs[2];
    bytes += runs[0].size();
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.passed = ok;
  res.detail = fmt("4 modes, %zu CSV bytes per run, identical: %s", bytes, ok ? "yes" : "no");
  return res;
}

}  // namespace detail

inline const std::vector<std::function<Result(const Options&)>>& criteria() {
  static const std::vector<std::function<Result(const Options&)>> all{
      detail::oracle_equivalence, detail::giant_component,     detail::largest_cycle_tail,
      detail::pd1_invariance,     detail::stationarity,        detail::short_split_bound,
      detail::two_step_gap,       detail::coupling_contraction, detail::mixing_trend,
      detail::size_biased_uniformity, detail::determinism};
  return all;
}

inline std::string format_line(const Result& r) {
  return detail::fmt("%s [%d] %s: %s", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.detail.c_str());
}

// Runs the selected criteria (all when `only` is empty), reporting each as it finishes.
inline std::vector<Result> run(const Options& opt, const std::set<int>& only,
                               const std::function<void(const Result&)>& report) {
  std::vector<Result> out;
  for (std::size_t i = 0; i < criteria().size(); ++i) {
    if (!only.empty() && !only.count(static_cast<int>(i) + 1)) continue;
    out.push_back(criteria()[i](opt));
    report(out.back());
  }
  return out;
}

}  // namespace cfsim::acceptance
