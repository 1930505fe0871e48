#pragma once

// Counter-based random streams (Philox4x32-10, Salmon et al. 2011).
//
// A stream is addressed by (seed, stream id). Its n-th output block is a pure
// function of (seed, stream id, n), so the sequence a neuron sees does not
// depend on how many other neurons exist or in which order stages run.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace spikelink {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

// One independent stream. Satisfies UniformRandomBitGenerator so it can feed
// <random> distributions, but the codecs use uniform() directly.
class RandomStream {
 public:
  using result_type = std::uint32_t;

  RandomStream() = default;
  RandomStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream_id) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (lane_ == 4) refill();
    return block_[lane_++];
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = (*this)() >> 5;  // 27 bits
    const std::uint64_t lo = (*this)() >> 6;  // 26 bits
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
  }

  // Uniform double in (0, 1]; safe to pass to log().
  double uniform_open_closed() { return 1.0 - uniform(); }

  double normal() {
    // Box-Muller; one value per call keeps the stream position simple.
    const double u1 = uniform_open_closed();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t blocks_consumed() const { return counter_; }

 private:
  void refill() {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(counter_),
                                  static_cast<std::uint32_t>(counter_ >> 32),
                                  static_cast<std::uint32_t>(stream_),
                                  static_cast<std::uint32_t>(stream_ >> 32)};
    block_ = Philox4x32::generate(ctr, key_);
    ++counter_;
    lane_ = 0;
  }

  Philox4x32::Key key_{0, 0};
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  Philox4x32::Counter block_{};
  int lane_ = 4;
};

// Derives a stream id for (purpose, index) pairs so that different consumers
// of one seed never share a stream.
constexpr std::uint64_t stream_id(std::uint32_t purpose, std::uint32_t index) {
  return (static_cast<std::uint64_t>(purpose) << 32) | index;
}

}  // namespace spikelink
