#pragma once

// Counter-based random streams. Every (seed, realization, substream) triple
// names an independent stream, so realizations can be evaluated in any
// order or on any worker and still reproduce bit-for-bit.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace unb {

/// Philox4x32 with 10 rounds.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeylA;
        key[1] += kWeylB;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMulA = 0xD2511F53;
  static constexpr std::uint32_t kMulB = 0xCD9E8D57;
  static constexpr std::uint32_t kWeylA = 0x9E3779B9;
  static constexpr std::uint32_t kWeylB = 0xBB67AE85;
};

/// One random stream; a UniformRandomBitGenerator producing 32-bit words.
class Stream {
 public:
  using result_type = std::uint32_t;

  Stream(std::uint64_t seed, std::uint64_t realization, std::uint64_t substream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        realization_(realization),
        substream_(substream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (lane_ == 4) refill();
    return block_[lane_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = (*this)() >> 5;  // 27 bits
    const std::uint64_t lo = (*this)() >> 6;  // 26 bits
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
  }

  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Exp(1).
  double exponential() { return -std::log(uniform_open0()); }

  /// Integer uniform on [0, n).
  std::uint32_t below(std::uint32_t n) {
    return static_cast<std::uint32_t>(uniform() * static_cast<double>(n));
  }

  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::uint64_t> d(mean);
    return d(*this);
  }

 private:
  void refill() {
    // counter: (block index, realization lo, substream lo, substream hi ^ realization hi)
    const Philox4x32::Counter ctr{
        block_index_++, static_cast<std::uint32_t>(realization_),
        static_cast<std::uint32_t>(substream_),
        static_cast<std::uint32_t>(substream_ >> 32) ^
            (static_cast<std::uint32_t>(realization_ >> 32) * 0x85EBCA6Bu)};
    block_ = Philox4x32::generate(ctr, key_);
    lane_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t realization_;
  std::uint64_t substream_;
  std::uint32_t block_index_ = 0;
  Philox4x32::Counter block_{};
  int lane_ = 4;
};

}  // namespace unb
