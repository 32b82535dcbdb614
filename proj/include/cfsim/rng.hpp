#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace cfsim {

// Seedable, splittable generator. The standard engine and std::seed_seq are
// fully specified by the standard; the distribution layer is written out here
// because std::uniform_*_distribution output differs between library vendors.
class Rng {
 public:
  static constexpr std::string_view kIdentifier =
      "mt19937_64/seed_seq(seed_lo,seed_hi,stream_lo,stream_hi)/u53/rejection64";

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  // Independent stream for replicate `index`.
  Rng split(std::uint64_t index) const { return Rng(seed_mix(seed_, stream_), index); }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on [0, bound).
  double uniform(double bound) {
    const double x = uniform() * bound;
    return x < bound ? x : std::nextafter(bound, 0.0);  // the product can round up to bound
  }

  // Uniform integer on [0, bound), bound > 0. Unbiased by rejection.
  std::uint64_t uniform_index(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

 private:
  static std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

// Stream for replicate `replicate` of an experiment seeded with `seed`.
inline Rng replicate_stream(std::uint64_t seed, std::uint64_t replicate) {
  return Rng(seed, replicate + 1);
}

}  // namespace cfsim
