#pragma once

// Coupling of two coagulation-fragmentation chains.
//
// Equal entries of Y and Z are matched (bit-equal values, multiplicities
// paired in index order). Each side lays its entries over a line: unmatched
// entries from 0, then the residual, and the matched entries in the block
// [scale - Q, scale). Matched partners therefore occupy identical intervals.
// A shared uniform u picks one entry per side; a shared v picks a second
// entry after the first one has been moved to the front. Distinct picks
// merge, a repeated pick splits at v, so a split on both sides produces one
// bit-equal piece of size v.
//
// The same line layout also carries the discrete variant in
// discrete_coupling.hpp, where unmatched mass beyond the matched block wraps
// to [1, scale).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cfsim/continuous_chain.hpp"
#include "cfsim/rng.hpp"
#include "cfsim/simplex.hpp"

namespace cfsim {

inline constexpr std::size_t kUnmatched = std::numeric_limits<std::size_t>::max();

struct Matching {
  std::vector<std::size_t> forward;   // Y index -> Z index, or kUnmatched
  std::vector<std::size_t> backward;  // Z index -> Y index, or kUnmatched
  double matched_mass = 0.0;          // sum of matched Y entries

  bool matched_y(std::size_t i) const { return forward[i] != kUnmatched; }
  bool matched_z(std::size_t j) const { return backward[j] != kUnmatched; }
  std::size_t matched_count() const {
    return static_cast<std::size_t>(std::count_if(forward.begin(), forward.end(), [](auto f) { return f != kUnmatched; }));
  }
};

// Both inputs nonincreasing. With tolerance 0 this is the multiplicity rule:
// the k-th copy of a value in y pairs with the k-th copy in z. A positive
// tolerance pairs down both lists whenever |y_i - z_j| <= tolerance, first
// stepping past either pointer if its next value is strictly closer.
inline Matching compute_matching(std::span<const double> y, std::span<const double> z, double tolerance = 0.0) {
  Matching m{std::vector<std::size_t>(y.size(), kUnmatched), std::vector<std::size_t>(z.size(), kUnmatched), 0.0};
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < y.size() && j < z.size()) {
    const double gap = std::abs(y[i] - z[j]);
    if (y[i] == z[j] || gap <= tolerance) {
      if (j + 1 < z.size() && std::abs(y[i] - z[j + 1]) < gap) {
        ++j;
        continue;
      }
      if (i + 1 < y.size() && std::abs(y[i + 1] - z[j]) < gap) {
        ++i;
        continue;
      }
      m.forward[i] = j;
      m.backward[j] = i;
      ++i;
      ++j;
    } else if (y[i] > z[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  for (std::size_t k = 0; k < y.size(); ++k)
    if (m.forward[k] != kUnmatched) m.matched_mass += y[k];
  return m;
}

inline Matching compute_matching(const SimplexVector& y, const SimplexVector& z, double tolerance = 0.0) {
  if (y.scale() != z.scale()) throw std::invalid_argument("compute_matching: scales differ");
  return compute_matching(y.entries(), z.entries(), tolerance);
}

struct TilePick {
  std::optional<std::size_t> entry;  // nullopt: the residual
  double offset = 0.0;               // position of the point inside the entry's interval
  bool matched = false;
};

struct TileSegment {
  std::optional<std::size_t> entry;  // nullopt: the residual
  double start;
  double length;
  friend bool operator==(const TileSegment&, const TileSegment&) = default;
};

// One side's layout. Unmatched entries (then the residual) are placed in
// "unmatched coordinates" w in [0, unmatched total), which map onto the line
// by skipping the matched block: x = w for w < block start, x = w + Q after.
class Tiling {
 public:
  Tiling(std::span<const double> lengths, std::vector<std::size_t> unmatched, std::vector<std::size_t> matched,
         double residual, double block_start)
      : lengths_(lengths.begin(), lengths.end()), unmatched_(std::move(unmatched)), matched_(std::move(matched)),
        residual_(residual), slot_(lengths.size(), kUnmatched), in_block_(lengths.size(), false) {
    unmatched_prefix_.reserve(unmatched_.size() + 1);
    unmatched_prefix_.push_back(0.0);
    for (std::size_t s = 0; s < unmatched_.size(); ++s) {
      slot_[unmatched_[s]] = s;
      unmatched_prefix_.push_back(unmatched_prefix_.back() + lengths_[unmatched_[s]]);
    }
    matched_prefix_.reserve(matched_.size() + 1);
    matched_prefix_.push_back(0.0);
    for (std::size_t s = 0; s < matched_.size(); ++s) {
      slot_[matched_[s]] = s;
      in_block_[matched_[s]] = true;
      matched_prefix_.push_back(matched_prefix_.back() + lengths_[matched_[s]]);
    }
    block_start_ = block_start;
    block_length_ = matched_prefix_.back();
  }

  // Standard layout of a simplex vector: block starts at scale - Q.
  static Tiling standard(const SimplexVector& y, std::span<const std::size_t> partner) {
    std::vector<std::size_t> unmatched;
    std::vector<std::size_t> matched;
    double q = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (partner[i] == kUnmatched) {
        unmatched.push_back(i);
      } else {
        matched.push_back(i);
        q += y[i];
      }
    }
    return Tiling(y.entries(), std::move(unmatched), std::move(matched), y.residual(), y.scale() - q);
  }

  double block_start() const { return block_start_; }
  double block_length() const { return block_length_; }

  TilePick pick(double u) const {
    if (u >= block_start_ && u < block_start_ + block_length_) return matched_at(u - block_start_);
    return unmatched_at(u < block_start_ ? u : u - block_length_);
  }

  // Lookup in the layout obtained by moving `front` to the start of its class
  // and shifting everything that preceded it right by its length. An
  // unmatched front moves within unmatched coordinates, so the matched block
  // stays put even when the front is longer than the space below the block.
  TilePick pick_shifted(const TilePick& front, double v) const {
    const std::size_t a = *front.entry;
    const double len = lengths_[a];
    const std::size_t slot = slot_[a];
    if (!in_block_[a]) {
      if (v >= block_start_ && v < block_start_ + block_length_) return matched_at(v - block_start_);
      const double w = v < block_start_ ? v : v - block_length_;
      if (w < len) return {a, w, false};
      if (w < unmatched_prefix_[slot + 1]) return unmatched_at(w - len, 0, slot);
      return unmatched_at(w, slot + 1, unmatched_.size());
    }
    if (v < len) return {a, v, true};
    const double end = block_start_ + matched_prefix_[slot + 1];
    if (v < end) {
      const double x = v - len;
      if (x < block_start_) return unmatched_at(x);
      return matched_at(x - block_start_, 0, slot);
    }
    if (v < block_start_ + block_length_) return matched_at(v - block_start_, slot + 1, matched_.size());
    return unmatched_at(v - block_length_);
  }

  // Unshifted layout in line order; an unmatched entry straddling the matched
  // block shows up as two segments.
  std::vector<TileSegment> segments() const {
    std::vector<TileSegment> out;
    const auto emit = [&](std::optional<std::size_t> entry, double w, double len) {
      if (len <= 0.0) return;
      const double slack = 1e-12 * (block_start_ + block_length_);
      if (w < block_start_ && w + len > block_start_ + slack) {
        out.push_back({entry, w, block_start_ - w});
        out.push_back({entry, block_start_ + block_length_, w + len - block_start_});
      } else {
        out.push_back({entry, w < block_start_ ? w : w + block_length_, len});
      }
    };
    for (std::size_t s = 0; s < unmatched_.size(); ++s) emit(unmatched_[s], unmatched_prefix_[s], lengths_[unmatched_[s]]);
    emit(std::nullopt, unmatched_prefix_.back(), residual_);
    for (std::size_t s = 0; s < matched_.size(); ++s)
      out.push_back({matched_[s], block_start_ + matched_prefix_[s], lengths_[matched_[s]]});
    std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.start < y.start; });
    return out;
  }

 private:
  // Unmatched entry at coordinate w, restricted to slots [lo, hi). Points past
  // the last unmatched entry fall in the residual; with no residual they sit
  // in a floating-point rounding gap and are reported the same way.
  TilePick unmatched_at(double w, std::size_t lo = 0, std::size_t hi = kUnmatched) const {
    hi = std::min(hi, unmatched_.size());
    if (lo >= hi) return {std::nullopt, 0.0, false};
    const auto it = std::upper_bound(unmatched_prefix_.begin() + static_cast<std::ptrdiff_t>(lo) + 1,
                                     unmatched_prefix_.begin() + static_cast<std::ptrdiff_t>(hi) + 1, w);
    const std::size_t s = static_cast<std::size_t>(it - unmatched_prefix_.begin()) - 1;
    if (s >= hi) return {std::nullopt, w - unmatched_prefix_[hi], false};
    const double offset = std::clamp(w - unmatched_prefix_[s], 0.0, lengths_[unmatched_[s]]);
    return {unmatched_[s], offset, false};
  }

  // Matched entry at block offset r, restricted to slots [lo, hi).
  TilePick matched_at(double r, std::size_t lo = 0, std::size_t hi = kUnmatched) const {
    hi = std::min(hi, matched_.size());
    if (lo >= hi) return {std::nullopt, 0.0, true};
    const auto it = std::upper_bound(matched_prefix_.begin() + static_cast<std::ptrdiff_t>(lo) + 1,
                                     matched_prefix_.begin() + static_cast<std::ptrdiff_t>(hi) + 1, r);
    const std::size_t s = std::min(static_cast<std::size_t>(it - matched_prefix_.begin()) - 1, hi - 1);
    const double offset = std::clamp(r - matched_prefix_[s], 0.0, lengths_[matched_[s]]);
    return {matched_[s], offset, true};
  }

  std::vector<double> lengths_;
  std::vector<std::size_t> unmatched_;
  std::vector<std::size_t> matched_;
  double residual_;
  std::vector<std::size_t> slot_;
  std::vector<bool> in_block_;
  std::vector<double> unmatched_prefix_;
  std::vector<double> matched_prefix_;
  double block_start_ = 0.0;
  double block_length_ = 0.0;
};

struct CouplingStats {
  std::uint64_t n_unmatched = 0;  // unmatched entries above epsilon, both sides
  double q = 0.0;                 // matched mass
  double y1 = 0.0;                // largest unmatched entry of Y (0 if none)
  double z1 = 0.0;
};

inline CouplingStats coupling_stats(std::span<const double> y, std::span<const double> z, const Matching& m,
                                    double epsilon) {
  CouplingStats s;
  s.q = m.matched_mass;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (m.matched_y(i)) continue;
    s.y1 = std::max(s.y1, y[i]);
    if (y[i] > epsilon) ++s.n_unmatched;
  }
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (m.matched_z(j)) continue;
    s.z1 = std::max(s.z1, z[j]);
    if (z[j] > epsilon) ++s.n_unmatched;
  }
  return s;
}

// (1 - Q)(1 - Q - max{y1, z1}): the quantity bounded in expectation by the
// contraction estimate for the coupling.
inline double unmatched_excess(const CouplingStats& s) { return (1.0 - s.q) * (1.0 - s.q - std::max(s.y1, s.z1)); }

enum class SideAction { none, merge, split, identity };

struct CoupledStepRecord {
  double u = 0.0;
  double v = 0.0;
  SideAction y_action = SideAction::none;
  SideAction z_action = SideAction::none;
  bool y_matched_involved = false;
  bool z_matched_involved = false;
  bool sub_epsilon = false;   // this step merged or created a piece below epsilon
  bool residual_hit = false;  // a pick landed in a residual; the step was skipped
  double y_piece = 0.0;       // split: size of the piece cut at v
  double z_piece = 0.0;
  std::int64_t delta_n = 0;
};

namespace detail {

struct SideResult {
  std::vector<double> entries;
  SideAction action = SideAction::none;
  bool matched_involved = false;
  bool sub_epsilon = false;
  double piece = 0.0;
};

inline SideResult apply_picks(std::span<const double> entries, const TilePick& a, const TilePick& b, double v,
                              double epsilon) {
  SideResult r;
  r.matched_involved = a.matched || b.matched;
  if (*a.entry != *b.entry) {
    const double x = entries[*a.entry];
    const double y = entries[*b.entry];
    r.action = SideAction::merge;
    r.sub_epsilon = std::min(x, y) < epsilon;
    r.entries = without(entries, *a.entry, *b.entry);
    insert_sorted(r.entries, x + y);
  } else {
    const double whole = entries[*a.entry];
    r.action = SideAction::split;
    r.piece = v;
    r.sub_epsilon = std::min(v, whole - v) < epsilon;
    r.entries = without(entries, *a.entry, std::nullopt);
    insert_sorted(r.entries, v);
    insert_sorted(r.entries, whole - v);
  }
  return r;
}

}  // namespace detail

// Pair (Y, Z) evolving under the coupled kernel, with the observables of the
// contraction argument. bar_epsilon is fixed at construction.
class CouplingState {
 public:
  CouplingState(SimplexVector y, SimplexVector z, double epsilon)
      : y_(std::move(y)), z_(std::move(z)), epsilon_(epsilon) {
    if (y_.scale() != 1.0 || z_.scale() != 1.0) throw std::invalid_argument("CouplingState: both sides need scale 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("CouplingState: epsilon must be positive");
    // Residual mass is counted as small mass whatever its truncation level.
    const auto strictly_small = [epsilon](const SimplexVector& x) {
      double sum = x.residual();
      for (double e : x.entries())
        if (e < epsilon) sum += e;
      return sum;
    };
    bar_epsilon_ = epsilon + strictly_small(y_) + strictly_small(z_);
    matching_ = compute_matching(y_, z_);
  }

  const SimplexVector& y() const { return y_; }
  const SimplexVector& z() const { return z_; }
  const Matching& matching() const { return matching_; }
  double epsilon() const { return epsilon_; }
  double bar_epsilon() const { return bar_epsilon_; }
  bool sub_epsilon_event_occurred() const { return sub_epsilon_event_; }

  CouplingStats stats() const { return coupling_stats(y_.entries(), z_.entries(), matching_, epsilon_); }

  std::pair<Tiling, Tiling> build_tilings() const {
    return {Tiling::standard(y_, matching_.forward), Tiling::standard(z_, matching_.backward)};
  }

  // One coupled step driven by the given u, v in [0, 1); v must be positive.
  CoupledStepRecord step(double u, double v) {
    if (!(u >= 0.0 && u < 1.0 && v > 0.0 && v < 1.0)) throw std::invalid_argument("step: need u in [0,1), v in (0,1)");
    CoupledStepRecord record;
    record.u = u;
    record.v = v;
    const auto [tiling_y, tiling_z] = build_tilings();
    const TilePick a = tiling_y.pick(u);
    const TilePick a2 = tiling_z.pick(u);
    if (!a.entry || !a2.entry) return residual_noop(record);
    const TilePick b = tiling_y.pick_shifted(a, v);
    const TilePick b2 = tiling_z.pick_shifted(a2, v);
    if (!b.entry || !b2.entry) return residual_noop(record);

    const auto before = stats().n_unmatched;
    auto ry = detail::apply_picks(y_.entries(), a, b, v, epsilon_);
    auto rz = detail::apply_picks(z_.entries(), a2, b2, v, epsilon_);
    y_ = SimplexVector(std::move(ry.entries), y_.residual(), y_.scale(), y_.truncation());
    z_ = SimplexVector(std::move(rz.entries), z_.residual(), z_.scale(), z_.truncation());
    matching_ = compute_matching(y_, z_);

    record.y_action = ry.action;
    record.z_action = rz.action;
    record.y_matched_involved = ry.matched_involved;
    record.z_matched_involved = rz.matched_involved;
    record.y_piece = ry.piece;
    record.z_piece = rz.piece;
    record.sub_epsilon = ry.sub_epsilon || rz.sub_epsilon;
    sub_epsilon_event_ = sub_epsilon_event_ || record.sub_epsilon;
    record.delta_n = static_cast<std::int64_t>(stats().n_unmatched) - static_cast<std::int64_t>(before);
    return record;
  }

  CoupledStepRecord step(Rng& rng) {
    const double u = rng.uniform();
    double v = 0.0;
    do {
      v = rng.uniform();
    } while (v == 0.0);
    return step(u, v);
  }

 private:
  CoupledStepRecord residual_noop(CoupledStepRecord record) {
    record.residual_hit = true;
    record.sub_epsilon = true;
    sub_epsilon_event_ = true;
    return record;
  }

  SimplexVector y_;
  SimplexVector z_;
  double epsilon_;
  double bar_epsilon_ = 0.0;
  Matching matching_;
  bool sub_epsilon_event_ = false;
};

inline CoupledStepRecord step_coupled(CouplingState& state, Rng& rng) { return state.step(rng); }

// Law of the observation time q: uniform on {lo, lo + stride, ..., <= hi}.
class ObservationTime {
 public:
  ObservationTime(std::uint64_t lo, std::uint64_t hi, std::uint64_t stride = 1) : lo_(lo), stride_(stride) {
    if (stride == 0 || hi < lo) throw std::invalid_argument("ObservationTime: empty window");
    count_ = (hi - lo) / stride + 1;
  }

  // Uniform on {0, ..., t0 - 1}.
  static ObservationTime uniform_below(std::uint64_t t0) {
    if (t0 == 0) throw std::invalid_argument("ObservationTime: t0 must be positive");
    return ObservationTime(0, t0 - 1);
  }

  // Uniform on the even integers in [0, epsilon^{-1/2}].
  static ObservationTime even_window(double epsilon) {
    const auto hi = static_cast<std::uint64_t>(std::floor(1.0 / std::sqrt(epsilon)));
    return ObservationTime(0, hi, 2);
  }

  std::uint64_t count() const { return count_; }
  std::uint64_t max_value() const { return lo_ + (count_ - 1) * stride_; }
  double eta() const { return 1.0 / static_cast<double>(count_); }  // largest point mass
  double mean_plus_one() const { return static_cast<double>(lo_) + static_cast<double>(stride_) * static_cast<double>(count_ - 1) / 2.0 + 1.0; }
  std::uint64_t value(std::uint64_t k) const { return lo_ + k * stride_; }
  bool contains(std::uint64_t t) const { return t >= lo_ && t <= max_value() && (t - lo_) % stride_ == 0; }
  std::uint64_t sample(Rng& rng) const { return value(rng.uniform_index(count_)); }

 private:
  std::uint64_t lo_;
  std::uint64_t stride_;
  std::uint64_t count_ = 0;
};

// Sup distance between two nonincreasing lists padded with zeros.
inline double sup_distance(std::span<const double> y, std::span<const double> z) {
  double d = 0.0;
  for (std::size_t i = 0; i < std::max(y.size(), z.size()); ++i) {
    const double a = i < y.size() ? y[i] : 0.0;
    const double b = i < z.size() ? z[i] : 0.0;
    d = std::max(d, std::abs(a - b));
  }
  return d;
}

}  // namespace cfsim
