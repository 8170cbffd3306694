#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace dpd {

// splitmix64 finalizer; used to spread seed material, never as the stream.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent child seed from (master, tags). Replicas, grid cells
// and engine instances each get their own tag path, so any run is reproducible
// in isolation.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = mix64(master);
  for (std::uint64_t t : tags) s = mix64(s ^ mix64(t));
  return s;
}

// Deterministic uniform source. All simulation randomness flows through this;
// nothing reads the wall clock or OS entropy.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  static RngStream derived(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    return RngStream(derive_seed(master, tags));
  }

  // in [0,1), 53-bit resolution
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // uniform in {0, ..., n-1}
  std::uint32_t index(std::uint32_t n) {
    auto k = static_cast<std::uint32_t>(uniform() * n);
    return k < n ? k : n - 1;  // guard the rounding edge at u -> 1
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace dpd
