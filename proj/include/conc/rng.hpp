#pragma once

#include <cstdint>
#include <limits>

namespace conc {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Key for the stream (base_seed, replicate, tag). Any change in one
// component produces an unrelated key.
constexpr std::uint64_t stream_key(std::uint64_t base_seed,
                                   std::uint64_t replicate,
                                   std::uint64_t tag = 0) {
  std::uint64_t k = mix64(base_seed + kGolden);
  k = mix64(k ^ (replicate + 1) * kGolden);
  k = mix64(k ^ (tag + 0x632BE59BD9B4E019ULL) * kGolden);
  return k;
}

// Seed handed to replicate r of an experiment with base seed b. This is
// the documented derivation written to every record.
constexpr std::uint64_t derive_seed(std::uint64_t base_seed,
                                    std::uint64_t replicate) {
  return mix64(base_seed + kGolden * (replicate + 1));
}

// Counter-based generator: the i-th output is mix64(key + i * golden).
// Satisfies UniformRandomBitGenerator so <random> distributions accept it.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}
  CounterRng(std::uint64_t base_seed, std::uint64_t replicate,
             std::uint64_t tag = 0)
      : key_(stream_key(base_seed, replicate, tag)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return mix64(key_ + kGolden * ++counter_); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1).
  double uniform_open() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace conc
