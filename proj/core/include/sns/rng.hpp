#pragma once

#include <array>
#include <cstdint>

namespace sns {

/// One 128-bit block of the Philox-4x32 counter-based generator with the
/// standard 10 rounds. Pure function of (counter, key): any (seed, sample,
/// step) triple can be mapped to its Gaussian draws without generator
/// state, so ensembles reproduce under any parallel schedule.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Deterministic stream of standard normal draws keyed by
/// (seed, sample, step). Consecutive draws come from consecutive Philox
/// blocks via Box-Muller; the k-th draw of a given triple is always the
/// same number, regardless of which thread asks for it.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint32_t sample, std::uint64_t step);

  /// Next standard normal draw.
  double next();

  /// Next uniform draw in [0,1).
  double next_uniform();

 private:
  std::array<std::uint32_t, 4> next_block();

  std::array<std::uint32_t, 2> key_;
  std::uint32_t step_lo_;
  std::uint32_t step_hi_;
  std::uint32_t sample_;
  std::uint32_t block_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Stream factory, the one entry point the sampling layer uses.
inline GaussianStream fork_stream(std::uint64_t seed, std::uint32_t sample,
                                  std::uint64_t step) {
  return GaussianStream(seed, sample, step);
}

}  // namespace sns
