#pragma once

// Coupling of the cycle structure of a transposition walk with a continuous
// chain on the simplex.
//
// Y = (cycle sizes) / (n z) has total mass 1/z. Its line layout is the usual
// one (unmatched from 0, matched block ending at 1) except that unmatched
// mass that does not fit below the block continues on [1, 1/z); cycles that
// never touched the frozen giant component come last, so they sit at the far
// end. u and v are uniform on [0, 1/z); Z only moves when both fall in [0, 1).
//
// Each Y-side decision is carried out as a real transposition (x, y): x is
// the vertex at the size-biased offset of u inside its cycle, y likewise for
// v, or y = pi^m(x) with m = ceil(n z v) on a split. Since u and v are
// uniform, (x, y) is a pair of independent uniform vertices; m = k (y = x) is
// the identity transposition and leaves Y unchanged.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "cfsim/coupling.hpp"
#include "cfsim/cycle_tracker.hpp"
#include "cfsim/rng.hpp"
#include "cfsim/simplex.hpp"
#include "cfsim/stats.hpp"
#include "cfsim/transposition_graph.hpp"

namespace cfsim {

// Number of vertices in the piece cut at position v of a cycle when one
// vertex has length 1/(n z).
inline std::uint64_t discretize_split(double v, double nz) {
  return static_cast<std::uint64_t>(std::ceil(v * nz));
}

struct DiscreteStepRecord {
  CoupledStepRecord coupled;
  bool z_held = false;  // u or v fell beyond 1
  Vertex x = 0;         // transposition realized on the permutation; x = y for the identity, 0 when skipped
  Vertex y = 0;
  std::uint64_t split_size = 0;  // vertices in the piece cut at v
};

template <CycleTracker Tracker>
class DiscreteCoupling {
 public:
  DiscreteCoupling(Tracker permutation, std::vector<bool> giant, double z, SimplexVector z_state, double epsilon,
                   std::optional<double> tolerance = std::nullopt)
      : perm_(std::move(permutation)), giant_(std::move(giant)), z_(z), zs_(std::move(z_state)), epsilon_(epsilon) {
    if (!(z > 0.0 && z <= 1.0)) throw std::invalid_argument("DiscreteCoupling: z must lie in (0, 1]");
    nz_ = static_cast<double>(perm_.n()) * z;
    if (!(nz_ >= 1.0)) throw std::invalid_argument("DiscreteCoupling: n z must be at least 1");
    if (giant_.size() != static_cast<std::size_t>(perm_.n()) + 1)
      throw std::invalid_argument("DiscreteCoupling: giant mask must have n + 1 slots");
    if (zs_.scale() != 1.0) throw std::invalid_argument("DiscreteCoupling: continuous side needs scale 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("DiscreteCoupling: epsilon must be positive");
    tolerance_ = tolerance.value_or(2.0 / nz_);
    giant_size_ = static_cast<std::uint64_t>(std::count(giant_.begin(), giant_.end(), true));
    layout_ = build_layout();
    bar_epsilon_ = epsilon_ + zs_.residual();
    for (double e : layout_.lengths)
      if (e < epsilon_) bar_epsilon_ += e;
    for (double e : zs_.entries())
      if (e < epsilon_) bar_epsilon_ += e;
  }

  const Tracker& permutation() const { return perm_; }
  const SimplexVector& z_state() const { return zs_; }
  double z() const { return z_; }
  double nz() const { return nz_; }
  double epsilon() const { return epsilon_; }
  double bar_epsilon() const { return bar_epsilon_; }
  double tolerance() const { return tolerance_; }
  std::uint64_t giant_size() const { return giant_size_; }  // vertices in the frozen component
  bool sub_epsilon_event_occurred() const { return sub_epsilon_event_; }

  // All cycles normalized by n z, nonincreasing; total mass 1/z.
  SimplexVector y() const {
    std::vector<double> entries;
    entries.reserve(layout_.lengths.size());
    for (const auto& c : layout_.cycles) entries.push_back(static_cast<double>(c.size) / nz_);
    std::stable_sort(entries.begin(), entries.end(), std::greater<>());
    return SimplexVector(std::move(entries), 0.0, 1.0 / z_);
  }

  // Entries of cycles meeting the frozen giant component, in layout order.
  std::span<const double> giant_entries() const {
    return std::span<const double>(layout_.lengths).first(layout_.giant_count);
  }
  const Matching& matching() const { return layout_.matching; }

  CouplingStats stats() const { return stats_of(layout_); }

  DiscreteStepRecord step(double u, double v) {
    const double top = 1.0 / z_;
    if (!(u >= 0.0 && u < top && v > 0.0 && v < top)) throw std::invalid_argument("step: u, v must lie in [0, 1/z)");
    DiscreteStepRecord record;
    record.coupled.u = u;
    record.coupled.v = v;
    const bool z_moves = u < 1.0 && v < 1.0;
    record.z_held = !z_moves;

    const Layout& before = layout_;
    const Tiling z_tiling = Tiling::standard(zs_, before.matching.backward);
    const TilePick a = before.tiling.pick(u);
    if (!a.entry) return noop(record);
    const TilePick b = before.tiling.pick_shifted(a, v);
    if (!b.entry) return noop(record);
    TilePick a2;
    TilePick b2;
    if (z_moves) {
      a2 = z_tiling.pick(u);
      if (!a2.entry) return noop(record);
      b2 = z_tiling.pick_shifted(a2, v);
      if (!b2.entry) return noop(record);
    }
    const std::uint64_t n_before = stats_of(before).n_unmatched;

    // Y side, as a transposition on the permutation.
    const CycleRecord& ca = before.cycles[*a.entry];
    const Vertex x = perm_.advance(ca.min_vertex, vertex_offset(a.offset, ca.size));
    const bool y_matched = is_matched(before, *a.entry) || is_matched(before, *b.entry);
    record.coupled.y_matched_involved = y_matched;
    if (*a.entry != *b.entry) {
      const CycleRecord& cb = before.cycles[*b.entry];
      const Vertex y = perm_.advance(cb.min_vertex, vertex_offset(b.offset, cb.size));
      perm_.apply_transposition(x, y);
      record.x = x;
      record.y = y;
      record.coupled.y_action = SideAction::merge;
      record.coupled.sub_epsilon |= static_cast<double>(std::min(ca.size, cb.size)) / nz_ < epsilon_;
    } else {
      const std::uint64_t m = std::clamp<std::uint64_t>(discretize_split(b.offset, nz_), 1, ca.size);
      record.split_size = m;
      record.coupled.y_piece = static_cast<double>(m) / nz_;
      if (m == ca.size) {
        record.x = record.y = x;
        record.coupled.y_action = SideAction::identity;
      } else {
        const Vertex y = perm_.advance(x, m);
        perm_.apply_transposition(x, y);
        record.x = x;
        record.y = y;
        record.coupled.y_action = SideAction::split;
        record.coupled.sub_epsilon |= static_cast<double>(std::min(m, ca.size - m)) / nz_ < epsilon_;
      }
    }

    if (z_moves) {
      auto rz = detail::apply_picks(zs_.entries(), a2, b2, v, epsilon_);
      zs_ = SimplexVector(std::move(rz.entries), zs_.residual(), zs_.scale(), zs_.truncation());
      record.coupled.z_action = rz.action;
      record.coupled.z_matched_involved = rz.matched_involved;
      record.coupled.z_piece = rz.piece;
      record.coupled.sub_epsilon |= rz.sub_epsilon;
    }
    sub_epsilon_event_ = sub_epsilon_event_ || record.coupled.sub_epsilon;
    layout_ = build_layout();
    record.coupled.delta_n =
        static_cast<std::int64_t>(stats_of(layout_).n_unmatched) - static_cast<std::int64_t>(n_before);
    return record;
  }

  DiscreteStepRecord step(Rng& rng) {
    const double top = 1.0 / z_;
    const double u = rng.uniform(top);
    double v = 0.0;
    do {
      v = rng.uniform(top);
    } while (v == 0.0);
    return step(u, v);
  }

 private:
  struct Layout {
    std::vector<CycleRecord> cycles;  // giant-touching cycles first, then the rest
    std::vector<double> lengths;      // cycle size / (n z), same order
    std::size_t giant_count = 0;
    Matching matching;                // giant-touching entries against Z
    Tiling tiling{std::span<const double>{}, {}, {}, 0.0, 0.0};
  };

  std::uint64_t vertex_offset(double offset, std::uint64_t size) const {
    return std::min(static_cast<std::uint64_t>(offset * nz_), size - 1);
  }

  static bool is_matched(const Layout& layout, std::size_t entry) {
    return entry < layout.giant_count && layout.matching.matched_y(entry);
  }

  Layout build_layout() const {
    const auto labels = perm_.cycle_labels();
    std::vector<bool> touches(labels.size(), false);
    for (std::size_t v = 1; v < labels.size(); ++v)
      if (giant_[v]) touches[labels[v]] = true;
    Layout layout;
    std::vector<CycleRecord> rest;
    for (const auto& c : detail::cycles_from_labels(labels)) (touches[c.min_vertex] ? layout.cycles : rest).push_back(c);
    layout.giant_count = layout.cycles.size();
    layout.cycles.insert(layout.cycles.end(), rest.begin(), rest.end());
    layout.lengths.reserve(layout.cycles.size());
    for (const auto& c : layout.cycles) layout.lengths.push_back(static_cast<double>(c.size) / nz_);

    layout.matching = compute_matching(giant_entries_of(layout), zs_.entries(), tolerance_);
    std::vector<std::size_t> unmatched;
    std::vector<std::size_t> matched;
    for (std::size_t i = 0; i < layout.lengths.size(); ++i)
      (is_matched(layout, i) ? matched : unmatched).push_back(i);
    const double block_start = std::max(0.0, 1.0 - layout.matching.matched_mass);
    layout.tiling = Tiling(layout.lengths, std::move(unmatched), std::move(matched), 0.0, block_start);
    return layout;
  }

  static std::span<const double> giant_entries_of(const Layout& layout) {
    return std::span<const double>(layout.lengths).first(layout.giant_count);
  }

  CouplingStats stats_of(const Layout& layout) const {
    Matching extended = layout.matching;
    extended.forward.resize(layout.lengths.size(), kUnmatched);
    return coupling_stats(layout.lengths, zs_.entries(), extended, epsilon_);
  }

  DiscreteStepRecord noop(DiscreteStepRecord record) {
    record.coupled.residual_hit = true;
    record.coupled.sub_epsilon = true;
    sub_epsilon_event_ = true;
    return record;
  }

  Tracker perm_;
  std::vector<bool> giant_;
  double z_;
  double nz_ = 0.0;
  SimplexVector zs_;
  double epsilon_;
  double tolerance_ = 0.0;
  std::uint64_t giant_size_ = 0;
  double bar_epsilon_ = 0.0;
  bool sub_epsilon_event_ = false;
  Layout layout_;
};

// Run `t` uniform transpositions from the identity, freeze the largest
// component of the transposition graph, and couple the resulting cycle
// structure with Z at scale n z(2t/n).
template <CycleTracker Tracker>
DiscreteCoupling<Tracker> make_discrete_coupling(std::uint32_t n, std::uint64_t t, SimplexVector z_state,
                                                 double epsilon, Rng& rng) {
  Tracker perm(n);
  GraphComponents graph(n);
  for (std::uint64_t s = 0; s < t; ++s) {
    const auto [a, b] = uniform_transposition(rng, n);
    perm.apply_transposition(a, b);
    graph.add_edge(a, b);
  }
  const double z = survival_probability(2.0 * static_cast<double>(t) / static_cast<double>(n));
  if (!(z > 0.0)) throw std::invalid_argument("make_discrete_coupling: 2t/n must exceed 1 for a giant component");
  return DiscreteCoupling<Tracker>(std::move(perm), graph.largest_component_mask(), z, std::move(z_state), epsilon);
}

}  // namespace cfsim
