#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cfsim/cycle_tracker.hpp"

namespace cfsim {

struct ComponentInfo {
  std::uint64_t size;
  Vertex representative;  // smallest vertex of the component
  friend bool operator==(const ComponentInfo&, const ComponentInfo&) = default;
};

// Connected components of the graph whose edges are the transpositions seen
// so far. Union by size with path halving; each root remembers the smallest
// vertex of its component.
class GraphComponents {
 public:
  explicit GraphComponents(std::uint32_t n)
      : n_(n), parent_(static_cast<std::size_t>(n) + 1), size_(static_cast<std::size_t>(n) + 1, 1),
        min_vertex_(static_cast<std::size_t>(n) + 1) {
    if (n < 1) throw std::invalid_argument("n must be positive");
    for (Vertex v = 0; v <= n; ++v) parent_[v] = min_vertex_[v] = v;
    histogram_[1] = n;
  }

  std::uint32_t n() const { return n_; }
  std::uint64_t edge_count() const { return edges_; }
  std::uint64_t component_count() const { return components_; }

  // True when a and b were in different components.
  bool add_edge(Vertex a, Vertex b) {
    detail::check_transposition(a, b, n_);
    ++edges_;
    Vertex ra = find(a);
    Vertex rb = find(b);
    if (ra == rb) return false;
    if (size_[ra] < size_[rb]) std::swap(ra, rb);
    drop(size_[ra]);
    drop(size_[rb]);
    parent_[rb] = ra;
    size_[ra] += size_[rb];
    min_vertex_[ra] = std::min(min_vertex_[ra], min_vertex_[rb]);
    ++histogram_[size_[ra]];
    --components_;

    // Sizes only grow, so the largest size never drops and ties can only be
    // created by the component just formed.
    if (size_[ra] > largest_.size) {
      largest_ = {size_[ra], min_vertex_[ra]};
    } else if (size_[ra] == largest_.size && min_vertex_[ra] < largest_.representative) {
      largest_.representative = min_vertex_[ra];
    }
    return true;
  }

  ComponentInfo largest_component() const { return largest_; }

  // Number of vertices lying in components with at least k vertices.
  std::uint64_t mass_in_components_at_least(std::uint64_t k) const {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    std::uint64_t mass = 0;
    for (auto it = histogram_.lower_bound(k); it != histogram_.end(); ++it) mass += it->first * it->second;
    return mass;
  }

  Vertex find(Vertex v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }

  bool connected(Vertex a, Vertex b) {
    detail::check_vertex(a, n_);
    detail::check_vertex(b, n_);
    return find(a) == find(b);
  }

  std::uint64_t component_size_of(Vertex v) {
    detail::check_vertex(v, n_);
    return size_[find(v)];
  }

  // Membership mask of the largest component (index 0 unused).
  std::vector<bool> largest_component_mask() {
    std::vector<bool> mask(static_cast<std::size_t>(n_) + 1, false);
    const Vertex r = find(largest_.representative);
    for (Vertex v = 1; v <= n_; ++v) mask[v] = find(v) == r;
    return mask;
  }

 private:
  void drop(std::uint64_t size) {
    auto it = histogram_.find(size);
    if (--it->second == 0) histogram_.erase(it);
  }

  std::uint32_t n_;
  std::vector<Vertex> parent_;
  std::vector<std::uint32_t> size_;
  std::vector<Vertex> min_vertex_;
  std::map<std::uint64_t, std::uint64_t> histogram_;
  ComponentInfo largest_{1, 1};
  std::uint64_t edges_ = 0;
  std::uint64_t components_ = n_;
};

}  // namespace cfsim
