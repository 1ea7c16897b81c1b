#pragma once

#include <cstdint>
#include <random>

namespace paraspec {

// Stream identifiers used in seed derivation. Values are part of the
// reproducibility contract; never renumber.
enum class Stream : std::uint64_t {
  normalize = 1,
  kushnirenko = 2,
  ergodic_limit = 3,
  conditions = 4,
  correlation = 5,
  simulate = 6,
  map_samples = 7,
  bootstrap = 8,
  test = 99,
};

// SplitMix64 output function applied to x + golden gamma.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

// seed = fmix(fmix(fmix(master) ^ stream * C1) ^ index * C2), with
//   fmix = splitmix64, C1 = 0x9E3779B97F4A7C15, C2 = 0xC2B2AE3D27D4EB4F.
// Pure function of its arguments, so any sample can be regenerated in
// isolation regardless of worker count or evaluation order.
std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index) noexcept;

// Per-sample generator. mt19937_64 is fully specified by the standard; doubles
// are built from the top 53 bits so results are platform independent.
class SampleRng {
 public:
  explicit SampleRng(std::uint64_t seed) : engine_(seed) {}
  SampleRng(std::uint64_t master, Stream stream, std::uint64_t index)
      : engine_(derive_seed(master, stream, index)) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace paraspec
