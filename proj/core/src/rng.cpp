#include "sns/rng.hpp"

#include <cmath>
#include <numbers>

namespace sns {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMult0 = 0xD2511F53u;
  constexpr std::uint32_t kMult1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t prod0 =
        static_cast<std::uint64_t>(kMult0) * counter[0];
    const std::uint64_t prod1 =
        static_cast<std::uint64_t>(kMult1) * counter[2];
    const auto hi0 = static_cast<std::uint32_t>(prod0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(prod0);
    const auto hi1 = static_cast<std::uint32_t>(prod1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(prod1);
    counter = {hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1], lo0};
  }
  return counter;
}

GaussianStream::GaussianStream(std::uint64_t seed, std::uint32_t sample,
                               std::uint64_t step)
    : key_{static_cast<std::uint32_t>(seed),
           static_cast<std::uint32_t>(seed >> 32)},
      step_lo_(static_cast<std::uint32_t>(step)),
      step_hi_(static_cast<std::uint32_t>(step >> 32)),
      sample_(sample) {}

std::array<std::uint32_t, 4> GaussianStream::next_block() {
  return philox4x32({step_lo_, step_hi_, sample_, block_++}, key_);
}

double GaussianStream::next() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const auto b = next_block();
  const std::uint64_t a =
      (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
  const std::uint64_t c =
      (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
  // u1 in (0,1] so the log is finite, u2 in [0,1).
  const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(c >> 11) * 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

double GaussianStream::next_uniform() {
  const auto b = next_block();
  const std::uint64_t a =
      (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
  return static_cast<double>(a >> 11) * 0x1.0p-53;
}

}  // namespace sns
