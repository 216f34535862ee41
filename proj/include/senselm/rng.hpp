#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <span>
#include <string_view>
#include <utility>

namespace senselm {

/// Counter-based SplitMix64 stream.
///
/// Output k of a stream with key K is mix(K + k * 0x9E3779B97F4A7C15), so the
/// full generator state is the pair (key, counter). Streams for independent
/// purposes are derived by hashing a seed together with integer stream labels;
/// nothing depends on std:: distribution objects, whose output is
/// implementation-defined.
class CounterRng {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64-ctr/1";

  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  /// Stream keyed by `seed` and an ordered list of labels.
  static CounterRng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> labels) noexcept {
    std::uint64_t key = mix(seed ^ 0x5E5E5E5E5E5E5E5EULL);
    for (std::uint64_t label : labels) {
      key = mix(key ^ mix(label + kGamma));
    }
    return CounterRng(key);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() noexcept { return mix(key_ + (++counter_) * kGamma); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound); Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    for (;;) {
      const std::uint64_t x = next();
      const __uint128_t m = static_cast<__uint128_t>(x) * bound;
      const auto low = static_cast<std::uint64_t>(m);
      if (low >= bound || low >= (-bound) % bound) {
        return static_cast<std::uint64_t>(m >> 64);
      }
    }
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Standard normal via Box-Muller; always consumes two outputs.
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Stream labels used when deriving generators from the training seed.
enum class RngStream : std::uint64_t {
  init = 1,
  epoch_order = 2,
  masking = 3,
  grad_check = 4,
  probe = 5,
  fine_tune = 6,
  synthetic = 7,
};

inline CounterRng derive_rng(std::uint64_t seed, RngStream stream, std::uint64_t a = 0, std::uint64_t b = 0) {
  return CounterRng::derive(seed, {static_cast<std::uint64_t>(stream), a, b});
}

}  // namespace senselm
