#pragma once

// Counter-based random streams. Each (master_seed, stream_index) pair keys a
// Philox4x64-10 block cipher; the stream is the cipher applied to the counter
// sequence 0, 1, 2, ... so any stream can be reproduced without replaying
// others, and trial i of a parallel loop always sees the same numbers.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace mpabc {

using Philox4x64Block = std::array<std::uint64_t, 4>;

inline Philox4x64Block philox4x64_10(Philox4x64Block ctr, std::array<std::uint64_t, 2> key) {
  constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;
  for (int round = 0; round < 10; ++round) {
    const unsigned __int128 p0 = static_cast<unsigned __int128>(kMul0) * ctr[0];
    const unsigned __int128 p1 = static_cast<unsigned __int128>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
    const auto lo0 = static_cast<std::uint64_t>(p0);
    const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
    const auto lo1 = static_cast<std::uint64_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

// Streams used for different purposes never share a key.
enum class StreamDomain : std::uint64_t {
  trial = 0,
  reference = 1,
  pilot = 2,
  plot = 3,
};

constexpr std::uint64_t stream_id(StreamDomain domain, std::uint64_t index) {
  return (static_cast<std::uint64_t>(domain) << 56) | (index & ((std::uint64_t{1} << 56) - 1));
}

class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : master_seed_(master_seed), stream_index_(stream_index) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (lane_ == 4) {
      block_ = philox4x64_10({counter_, 0, 0, 0}, {master_seed_, stream_index_});
      ++counter_;
      lane_ = 0;
    }
    return block_[lane_++];
  }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lower, double upper) { return lower + (upper - lower) * uniform(); }

  /// Standard normal by the ziggurat method (stateless: no cached variate).
  double normal() { return boost::random::normal_distribution<double>{}(*this); }

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::uint64_t counter_ = 0;
  Philox4x64Block block_{};
  int lane_ = 4;
};

} // namespace mpabc
