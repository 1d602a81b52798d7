#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3"). Every random quantity in the project is a
// pure function of (seed, stream, index), so any anchor, noise map or sample
// can be regenerated in isolation.
//
// Keyed normal blocks: counter = {index_lo, index_hi, block, stream},
// key = {seed_lo, seed_hi}. Each block of four 32-bit words yields four
// standard normals by Box-Muller on consecutive pairs, with
// u = (word + 0.5) / 2^32.

#include <array>
#include <cstdint>
#include <span>

namespace styleinv::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

Counter philox4x32_10(Counter counter, Key key);

/// Maps a 32-bit word into the open interval (0, 1).
inline double to_unit(std::uint32_t word) { return (static_cast<double>(word) + 0.5) * (1.0 / 4294967296.0); }

/// Independent stream identifiers.
enum class Stream : std::uint32_t {
  anchor_noise = 1,
  video_noise = 2,
  init = 3,
  latent = 4,
  sampling = 5,
  dataset = 6,
  augment = 7,
  evaluation = 8,
};

/// Fills `out` with standard normals determined by (seed, stream, index).
void normal_block(std::uint64_t seed, Stream stream, std::uint64_t index, std::span<double> out);

/// SplitMix64 finaliser; used to derive child seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Sequential view over one Philox stream.
class Generator {
 public:
  Generator(std::uint64_t seed, Stream stream) : Generator(seed, static_cast<std::uint32_t>(stream)) {}
  Generator(std::uint64_t seed, std::uint32_t stream);

  std::uint32_t next_u32();
  /// Uniform in (0, 1).
  double uniform() { return to_unit(next_u32()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Unbiased integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  std::uint64_t next_u64() { return (static_cast<std::uint64_t>(next_u32()) << 32) | next_u32(); }

 private:
  void refill();

  Key key_;
  std::uint32_t stream_;
  std::uint64_t block_ = 0;
  Counter buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace styleinv::rng
