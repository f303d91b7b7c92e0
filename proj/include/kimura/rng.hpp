#pragma once

// Counter-based Philox4x32-10 streams. Every draw is a pure function of
// (seed, path, step, block), so results do not depend on scheduling.

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace kimura {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Ten rounds of Philox4x32 on one counter block.
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// Uniform in the open interval (0, 1) from 52 high bits; the extremes are 2^-53 and 1 - 2^-53.
inline double u64_to_open_unit(std::uint64_t v) { return (static_cast<double>(v >> 12) + 0.5) * 0x1.0p-52; }

/// Per-path stream: counter = (block, step, path_lo, path_hi), key = seed.
class PathStream {
 public:
  PathStream(std::uint64_t seed, std::uint64_t path)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        path_lo_(static_cast<std::uint32_t>(path)),
        path_hi_(static_cast<std::uint32_t>(path >> 32)) {}

  /// Two 64-bit words for (step, block).
  std::array<std::uint64_t, 2> words(std::uint32_t step, std::uint32_t block) const;
  /// `count` standard normals for one step (Box-Muller, two per block).
  void normals(std::uint32_t step, double* out, std::size_t count) const;

 private:
  PhiloxKey key_;
  std::uint32_t path_lo_;
  std::uint32_t path_hi_;
};

/// UniformRandomBitGenerator over the blocks of one (path, step) that are
/// reserved for auxiliary sampling (block index >= 2^31).
class StepEngine {
 public:
  using result_type = std::uint64_t;
  StepEngine(const PathStream& stream, std::uint32_t step) : stream_(&stream), step_(step) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

 private:
  const PathStream* stream_;
  std::uint32_t step_;
  std::uint32_t block_ = 0x80000000U;
  std::array<std::uint64_t, 2> buf_{};
  int left_ = 0;
};

}  // namespace kimura
