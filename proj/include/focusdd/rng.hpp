#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <utility>
#include <vector>

namespace focusdd {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Named sub-streams so that independent consumers of one seed never share draws.
enum class Stream : std::uint64_t {
  kBackgroundSelect = 1,
  kBackgroundDraw = 2,
  kKeyShuffle = 3,
  kDftSample = 4,
  kRandomCrop = 5,
  kSyntheticWeights = 6,
};

/// Counter-based 64-bit generator keyed by (seed, tags...).
///
///   key   = fold over tags t of  key <- mix64(key ^ (t + 0x9E3779B97F4A7C15)), starting at mix64(seed)
///   out_k = mix64(key + (k + 1) * 0x9E3779B97F4A7C15)        for k = 0, 1, 2, ...
///
/// Output k depends only on the key and k, so streams keyed by (seed, class, index) are
/// independent of the order in which workers consume them.
class KeyedRng {
 public:
  using result_type = std::uint64_t;

  explicit KeyedRng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {})
      : key_(mix64(seed)) {
    for (auto t : tags) key_ = mix64(key_ ^ (t + kGamma));
  }
  KeyedRng(std::uint64_t seed, Stream stream, std::initializer_list<std::uint64_t> tags = {})
      : KeyedRng(seed, {static_cast<std::uint64_t>(stream)}) {
    for (auto t : tags) key_ = mix64(key_ ^ (t + kGamma));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++counter_) * kGamma); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), unbiased (rejection on the short tail).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = (*this)();
      if (x >= threshold) return x % n;
    }
  }

  /// Fisher-Yates, high index first. Portable, unlike std::shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace focusdd
