#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace dbe {

namespace detail {

// splitmix64 finalizer; also used to absorb stream keys.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// Deterministic random stream (xoshiro256++ seeded via splitmix64).
///
/// A stream is identified by a master seed plus a short key path, e.g.
/// {domain, state index, sample index}. Distinct key paths give statistically
/// independent streams, so parallel samplers can draw from per-task streams
/// and produce output that does not depend on the execution schedule or the
/// worker count.
class RngStream {
public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) { reseed(seed, {}); }

  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    reseed(seed, keys);
  }

  /// Stream for (seed; key path). Equal arguments give bit-identical streams.
  static RngStream derive(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> keys) {
    return RngStream(seed, keys);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl64(s_[3], 45);
    return result;
  }

  /// Uniform draw strictly inside (0,1); safe to feed to inverse CDFs.
  double uniform01() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform index in [0, n).
  std::size_t uniform_index(std::size_t n) {
    // n is tiny in this library; modulo bias is far below statistical noise.
    return static_cast<std::size_t>((*this)() % n);
  }

private:
  void reseed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = detail::mix64(seed);
    for (std::uint64_t k : keys) h = detail::mix64(h ^ detail::mix64(k));
    // Expand into xoshiro state; all-zero state is unreachable this way.
    std::uint64_t sm = h;
    for (auto& word : s_) {
      sm += 0x9e3779b97f4a7c15ULL;
      word = detail::mix64(sm);
    }
  }

  std::array<std::uint64_t, 4> s_{};
};

/// Key-path domains used by the sampling modules; keeps streams for different
/// purposes disjoint even when state/sample indices coincide.
namespace stream_domain {
inline constexpr std::uint64_t returns = 1;
inline constexpr std::uint64_t trajectory = 2;
inline constexpr std::uint64_t affine = 3;
inline constexpr std::uint64_t grid_prepass = 4;
inline constexpr std::uint64_t diagnostic = 5;
}  // namespace stream_domain

}  // namespace dbe
