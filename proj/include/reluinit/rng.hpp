#pragma once

// Counter-based random numbers.
//
// Every draw is mix(key + counter * golden), where mix is the SplitMix64
// finalizer. The generator therefore has no hidden state beyond (key,
// counter): two engines with the same key produce the same stream, and
// independent streams are obtained by deriving keys from (base seed, stream
// index) with `derive_seed`.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace reluinit {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t base,
                                           std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t seed = 0) noexcept
      : key_(splitmix64(seed ^ 0xD1B54A32D192ED03ULL)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return splitmix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  constexpr std::uint64_t counter() const noexcept { return counter_; }

  // Jump to an arbitrary position of the stream.
  constexpr void seek(std::uint64_t counter) noexcept { counter_ = counter; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Uniform on the open interval (0, 1), 53 random bits.
template <typename Rng>
double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

template <typename Rng>
double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_open01(rng);
}

// Standard normal via Box-Muller; one draw per call, no cached state.
template <typename Rng>
double standard_normal(Rng& rng) {
  const double u1 = uniform_open01(rng);
  const double u2 = uniform_open01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename Rng>
double standard_exponential(Rng& rng) {
  return -std::log(uniform_open01(rng));
}

// Uniform integer in {0, ..., n-1} (Lemire's multiply-shift with rejection).
template <typename Rng>
std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const unsigned __int128 m = static_cast<unsigned __int128>(rng()) * n;
    if (static_cast<std::uint64_t>(m) >= threshold)
      return static_cast<std::uint64_t>(m >> 64);
  }
}

}  // namespace reluinit
