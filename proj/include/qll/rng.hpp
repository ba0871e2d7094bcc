#pragma once

#include <cstdint>

namespace qll {

/// Well-known stream ids. Each purpose draws from its own substream so that,
/// e.g., changing the init stream never perturbs batch order.
namespace streams {
inline constexpr std::uint64_t kDatagen = 1;
inline constexpr std::uint64_t kBatching = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kAlpha = 4;
inline constexpr std::uint64_t kBaseTrain = 5;
inline constexpr std::uint64_t kBaseTest = 6;
inline constexpr std::uint64_t kClassMeans = 7;
}  // namespace streams

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Counter-based random stream.
///
/// The stream key is a hash-mix of (seed, stream_id); the i-th output is
/// mix64(key + i * golden_gamma). Draws therefore depend only on
/// (seed, stream_id, position), never on thread scheduling or on how many
/// other streams exist. Copying a stream copies its position.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  /// Number of 64-bit draws consumed so far.
  std::uint64_t position() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 bits of resolution. One draw.
  double uniform() noexcept;
  /// Uniform on (0, 1). One draw.
  double uniform_open() noexcept;
  /// Uniform integer in [0, n). Unbiased (rejection); usually one draw.
  std::uint64_t uniform_int(std::uint64_t n) noexcept;
  /// Standard normal via Box-Muller. Two draws, no cached spare.
  double normal() noexcept;

  /// Independent child stream keyed by (seed, stream_id, child). Does not
  /// advance this stream.
  RngStream substream(std::uint64_t child) const noexcept;

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace qll
