#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cfsim/rng.hpp"
#include "cfsim/simplex.hpp"

namespace cfsim {

enum class StepKind { merge, split, residual_noop };

struct StepRecord {
  StepKind kind = StepKind::residual_noop;
  double first = 0.0;   // merge: Y_i; split: the entry that was split
  double second = 0.0;  // merge: Y_j
  double piece = 0.0;   // split: v
  bool sub_truncation_event = false;
};

namespace detail {

// Insert keeping nonincreasing order; equal values go after existing ones.
inline void insert_sorted(std::vector<double>& entries, double x) {
  entries.insert(std::upper_bound(entries.begin(), entries.end(), x, std::greater<>()), x);
}

inline std::vector<double> without(std::span<const double> entries, std::size_t i, std::optional<std::size_t> j) {
  std::vector<double> out;
  out.reserve(entries.size() + 1);
  for (std::size_t k = 0; k < entries.size(); ++k)
    if (k != i && (!j || k != *j)) out.push_back(entries[k]);
  return out;
}

}  // namespace detail

// One step of the uniform coagulation-fragmentation kernel M.
// Two independent size-biased indices; distinct ones merge, a repeated one
// splits at a uniform point (redrawn if it lands exactly on an end).
template <std::invocable Uniform01>
std::pair<SimplexVector, StepRecord> step_m(const SimplexVector& y, Uniform01&& uniform01) {
  if (y.scale() != 1.0) throw std::invalid_argument("step_m: state must have scale 1");
  const auto i = size_biased_pick(y, uniform01());
  const auto j = size_biased_pick(y, uniform01());
  StepRecord record;
  if (!i || !j) {
    record.sub_truncation_event = true;
    return {y, record};
  }
  const auto entries = y.entries();
  if (*i != *j) {
    record.kind = StepKind::merge;
    record.first = entries[*i];
    record.second = entries[*j];
    auto next = detail::without(entries, *i, *j);
    detail::insert_sorted(next, record.first + record.second);
    return {SimplexVector(std::move(next), y.residual(), y.scale(), y.truncation()), record};
  }
  const double whole = entries[*i];
  double v = 0.0;
  do {
    v = uniform01() * whole;
  } while (v <= 0.0 || v >= whole);
  record.kind = StepKind::split;
  record.first = whole;
  record.piece = v;
  auto next = detail::without(entries, *i, std::nullopt);
  detail::insert_sorted(next, v);
  detail::insert_sorted(next, whole - v);
  return {SimplexVector(std::move(next), y.residual(), y.scale(), y.truncation()), record};
}

inline std::pair<SimplexVector, StepRecord> step_m(const SimplexVector& y, Rng& rng) {
  return step_m(y, [&rng] { return rng.uniform(); });
}

}  // namespace cfsim
