#include "styleinv/rng.hpp"

#include <cmath>
#include <numbers>

namespace styleinv::rng {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

Key key_from(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

void box_muller(std::uint32_t a, std::uint32_t b, double& n0, double& n1) {
  const double r = std::sqrt(-2.0 * std::log(to_unit(a)));
  const double theta = 2.0 * std::numbers::pi * to_unit(b);
  n0 = r * std::cos(theta);
  n1 = r * std::sin(theta);
}

}  // namespace

Counter philox4x32_10(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kMul0, ctr[0], lo0, hi0);
    mulhilo(kMul1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

void normal_block(std::uint64_t seed, Stream stream, std::uint64_t index, std::span<double> out) {
  const Key key = key_from(seed);
  for (std::size_t block = 0; block * 4 < out.size(); ++block) {
    const Counter words = philox4x32_10({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                         static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(stream)},
                                        key);
    double n[4];
    box_muller(words[0], words[1], n[0], n[1]);
    box_muller(words[2], words[3], n[2], n[3]);
    for (std::size_t j = 0; j < 4 && block * 4 + j < out.size(); ++j) out[block * 4 + j] = n[j];
  }
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(seed ^ mix64(a)) ^ mix64(b + 0x632BE59BD9B4E019ull));
}

Generator::Generator(std::uint64_t seed, std::uint32_t stream) : key_(key_from(seed)), stream_(stream) {}

void Generator::refill() {
  // high counter word is reserved for the stream id so sequential draws never
  // collide with keyed normal_block() lookups on another stream
  buffer_ = philox4x32_10({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), 0xFFFFFFFFu,
                           stream_},
                          key_);
  ++block_;
  used_ = 0;
}

std::uint32_t Generator::next_u32() {
  if (used_ == 4) refill();
  return buffer_[used_++];
}

double Generator::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const std::uint32_t a = next_u32();
  const std::uint32_t b = next_u32();
  double n0, n1;
  box_muller(a, b, n0, n1);
  spare_ = n1;
  has_spare_ = true;
  return n0;
}

std::uint64_t Generator::below(std::uint64_t n) {
  // rejection on the top of the range keeps the result unbiased
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

}  // namespace styleinv::rng
