#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace finlab {

/// Philox4x32-10 block function (Salmon et al., SC'11).
/// Maps a 128-bit counter and 64-bit key to 128 pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Splittable counter-based random stream.
///
/// A stream is identified by (seed, path) where the path is a 64-bit hash of
/// the sequence of substream indices used to reach it. Draw n of a stream is
/// philox(counter = {n_lo, n_hi, path_lo, path_hi}, key = seed), so every
/// stream is addressable without touching any other. Substreams are used for
/// (experiment, replica, site block) so results do not depend on evaluation
/// order or thread count.
class RandomStream {
 public:
  using result_type = std::uint32_t;

  explicit RandomStream(std::uint64_t seed) : RandomStream(seed, 0x6a09e667f3bcc908ULL) {}

  /// Child stream; distinct indices give statistically independent streams.
  [[nodiscard]] RandomStream substream(std::uint64_t index) const;
  /// Child stream for a signed index (lattice sites, blocks).
  [[nodiscard]] RandomStream site(std::int64_t index) const;

  std::uint32_t operator()();
  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Exponential with unit mean.
  double exponential();
  /// Standard normal (Box-Muller, both variates used).
  double normal();
  /// Poisson with the given mean, by counting unit-rate arrivals.
  std::uint64_t poisson(double mean);

  static constexpr std::uint32_t min() { return 0; }
  static constexpr std::uint32_t max() { return std::numeric_limits<std::uint32_t>::max(); }

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t path() const { return path_; }
  [[nodiscard]] std::uint64_t position() const { return block_; }

 private:
  RandomStream(std::uint64_t seed, std::uint64_t path) : seed_(seed), path_(path) {}
  void refill();

  std::uint64_t seed_;
  std::uint64_t path_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// SplitMix64 finalizer; used for hashing substream paths.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace finlab
