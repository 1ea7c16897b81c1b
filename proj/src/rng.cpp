#include "paraspec/rng.hpp"

namespace paraspec {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index) noexcept {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(stream) * 0x9E3779B97F4A7C15ULL));
  h = splitmix64(h ^ (index * 0xC2B2AE3D27D4EB4FULL));
  return h;
}

}  // namespace paraspec
