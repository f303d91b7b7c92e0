#include "kimura/rng.hpp"

#include <cmath>
#include <numbers>

namespace kimura {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53U;
constexpr std::uint32_t kMul1 = 0xCD9E8D57U;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9U;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85U;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::array<std::uint64_t, 2> PathStream::words(std::uint32_t step, std::uint32_t block) const {
  const PhiloxCounter r = philox4x32_10({block, step, path_lo_, path_hi_}, key_);
  return {(static_cast<std::uint64_t>(r[0]) << 32) | r[1], (static_cast<std::uint64_t>(r[2]) << 32) | r[3]};
}

void PathStream::normals(std::uint32_t step, double* out, std::size_t count) const {
  for (std::size_t k = 0, block = 0; k < count; k += 2, ++block) {
    const auto w = words(step, static_cast<std::uint32_t>(block));
    const double r = std::sqrt(-2.0 * std::log(u64_to_open_unit(w[0])));
    const double phi = 2.0 * std::numbers::pi * u64_to_open_unit(w[1]);
    out[k] = r * std::cos(phi);
    if (k + 1 < count) out[k + 1] = r * std::sin(phi);
  }
}

StepEngine::result_type StepEngine::operator()() {
  if (left_ == 0) {
    buf_ = stream_->words(step_, block_++);
    left_ = 2;
  }
  return buf_[2 - left_--];
}

}  // namespace kimura
