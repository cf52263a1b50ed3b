#pragma once

#include <cstdint>
#include <initializer_list>

namespace dss {

/// xoshiro256** with splitmix64 seeding. 32 bytes of state, so a fresh engine
/// per search branch costs almost nothing.
class Engine {
 public:
  using result_type = std::uint64_t;

  constexpr explicit Engine(std::uint64_t seed = 0) {
    for (auto& word : state_) {
      seed += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = seed;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }

  constexpr result_type operator()() {
    const result_type out = rotl(state_[1] * 5, 7) * 9;
    const result_type t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return out;
  }

  friend constexpr bool operator==(const Engine&, const Engine&) = default;

 private:
  static constexpr result_type rotl(result_type x, int k) { return (x << k) | (x >> (64 - k)); }

  result_type state_[4]{};
};

/// Deterministic seed tree. A source is a 64-bit key; children are derived by
/// mixing tags into the key, so any branch of a search can get its own stream
/// without consuming draws from its siblings. Serial and parallel traversal
/// of the same tree therefore see identical random numbers.
class RandomSource {
 public:
  constexpr explicit RandomSource(std::uint64_t seed = 0) : key_(mix(seed)) {}

  constexpr std::uint64_t key() const { return key_; }

  constexpr RandomSource child(std::uint64_t tag) const {
    return from_key(mix(key_ ^ mix(tag + 0x9e3779b97f4a7c15ULL)));
  }

  constexpr RandomSource child(std::initializer_list<std::uint64_t> path) const {
    RandomSource out = *this;
    for (std::uint64_t tag : path) out = out.child(tag);
    return out;
  }

  Engine engine() const {
    return Engine(key_);
  }

 private:
  // splitmix64 finalizer
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static constexpr RandomSource from_key(std::uint64_t key) {
    RandomSource out;
    out.key_ = key;
    return out;
  }

  std::uint64_t key_;
};

}  // namespace dss
