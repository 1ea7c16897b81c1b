#pragma once

#include <string>
#include <variant>

#include "paraspec/time_change.hpp"
#include "paraspec/torus.hpp"

namespace paraspec {

/// Time change of the horocycle flow, generated by U / alpha.
struct TimeChangedFlow {
  TimeChange alpha;
};

/// Twisted horocycle flow on M x S^1 restricted to the circle-Fourier mode n.
struct TwistedFlow {
  TimeChange alpha;
  int n = 1;
};

using System = std::variant<SkewProductSpec, FurstenbergSpec, RotationControl, TimeChangedFlow, TwistedFlow>;

inline bool is_map_system(const System& s) { return s.index() <= 2; }

inline MapSystem to_map_system(const System& s) {
  if (const auto* v = std::get_if<SkewProductSpec>(&s)) return *v;
  if (const auto* v = std::get_if<FurstenbergSpec>(&s)) return *v;
  return std::get<RotationControl>(s);
}

std::string describe(const System& s);

}  // namespace paraspec
