#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <string_view>

namespace clansim {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ (splitmix64(v) + 0x632be59bd9b4e019ULL + (h << 7) + (h >> 3)));
}

/// Key for a substream: mixes the master seed with any number of integer coordinates.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(seed ^ 0xa0761d6478bd642fULL);
  for (auto p : parts) h = hash_combine(h, p);
  return h;
}

/// Module tags of the seeding scheme: substream = stream_key(master, {tag, replica, ...}).
enum class StreamTag : std::uint64_t {
  disorder = 1,
  free_process = 2,
  replica = 3,
  clan = 4,
  connectivity = 5,
  multiscale = 6,
  oracle = 7,
};

/// FNV-1a over a byte string (used for config and spec hashes).
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t master, StreamTag tag, std::uint64_t index) {
  return stream_key(master, {static_cast<std::uint64_t>(tag), index});
}

/// Counter-based generator: the i-th output of stream k is a pure function of (k, i),
/// so extending a realization never disturbs what was already drawn.
/// Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) : key_(key) {}

  result_type operator()() { return splitmix64(key_ ^ splitmix64(counter_++ * 0xd1b54a32d192ed03ULL)); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform in the open interval (0,1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Exp(rate) by inverse transform.
  double exponential(double rate = 1.0) { return -std::log(uniform()) / rate; }

  /// Standard normal by Box-Muller (consumes two uniforms).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace clansim
