#pragma once

// Counter-based random streams (Philox4x32-10). A stream is identified by a
// 64-bit seed and a 64-bit stream id; draws depend only on (seed, id,
// position), so paths can be simulated in any order on any number of
// workers and still reproduce bit for bit.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace oulab {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// One Philox4x32 block with the standard 10 rounds.
inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream_id) {}

  std::uint64_t seed() const { return (static_cast<std::uint64_t>(key_[1]) << 32) | key_[0]; }
  std::uint64_t stream_id() const { return stream_; }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() {
    if (cached_uniforms_ == 0) refill();
    const std::uint64_t bits = block_[2 - cached_uniforms_];
    --cached_uniforms_;
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by Box-Muller; draws come in pairs.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  void refill() {
    const PhiloxCounter ctr{static_cast<std::uint32_t>(stream_),
                            static_cast<std::uint32_t>(stream_ >> 32),
                            static_cast<std::uint32_t>(position_),
                            static_cast<std::uint32_t>(position_ >> 32)};
    const PhiloxCounter out = philox4x32_10(ctr, key_);
    block_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    block_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    cached_uniforms_ = 2;
    ++position_;
  }

  PhiloxKey key_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  std::array<std::uint64_t, 2> block_{};
  int cached_uniforms_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Stream ids used by the simulators. Noise and auxiliary (bridge) draws
/// live on disjoint ids so that estimators with and without the auxiliary
/// draws see identical Gaussian increments.
inline std::uint64_t noise_stream(std::uint64_t path) { return path; }
inline std::uint64_t aux_stream(std::uint64_t path) { return path | (std::uint64_t{1} << 62); }
inline std::uint64_t start_stream(std::uint64_t path) { return path | (std::uint64_t{1} << 61); }

}  // namespace oulab
