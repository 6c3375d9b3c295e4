#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace loadfc {

// Seedable generator with bit-exact output on every platform.
//
// std::mt19937_64 is fully specified by the standard, but the standard
// distributions are not, so all conversions to doubles and bounded integers
// are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer; a bijective 64-bit mix.
std::uint64_t mix64(std::uint64_t x);

// Folds `value` into `seed`; order-sensitive.
std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t value);

// FNV-1a, used to fold identifiers such as household ids into seeds.
std::uint64_t hash_string(std::string_view s);

}  // namespace loadfc
