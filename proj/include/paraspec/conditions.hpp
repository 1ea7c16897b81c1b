#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "paraspec/numerics.hpp"
#include "paraspec/systems.hpp"
#include "paraspec/time_change.hpp"

namespace paraspec {

enum class Verdict { pass, fail, inconclusive };
std::string to_string(Verdict v);  // "PASS" | "FAIL" | "INCONCLUSIVE"

struct SampleMeta {
  std::uint64_t seed = 0;
  long n_samples = 0;
  std::string stream;
};

/// Per-time sup over samples of the scalar multiplier field of one condition.
/// multiplier_sup_half uses only the first half of the samples (nested subset).
struct CommutatorProfile {
  double beta = 1.0;
  std::vector<double> times;
  std::vector<double> multiplier_sup;
  std::vector<double> multiplier_sup_half;
  SampleMeta sample_meta;
};

struct ConditionResult {
  CommutatorProfile profile;
  double estimate = 0.0;              // (i): inflated tail sup; (ii), (iii): sup over all times
  std::optional<double> paper_bound;  // bound from the analytic argument, when one exists
  double refinement_delta = 0.0;      // |full - half-sample| of the quantity the verdict tests
  Verdict verdict = Verdict::pass;
  std::string rule;                   // human-readable verdict rule
};

struct ConditionOptions {
  std::vector<double> times;  // strictly increasing, at least two decades
  long n_samples = 64;
  std::uint64_t seed = 0;
  Tolerances tol{};
  int workers = 1;
  double derivative_step = kDefaultDerivativeStep;
};

// Log-spaced time grid: `per_decade` points per decade on [lo, hi]; for maps
// the values are rounded to distinct integers.
std::vector<double> log_time_grid(double lo, double hi, int per_decade, bool integer);

// Max of the profile over times >= t_lo.
double tail_max(const CommutatorProfile& p, double t_lo);
double tail_max_half(const CommutatorProfile& p, double t_lo);

struct ProfileSet {
  ConditionResult i, ii, iii;
  double sup_g_alpha = 0.0;  // flows: sampled sup |X alpha / alpha - 1|; twisted: sup |X alpha - alpha|
  double c_second = 0.0;     // sampled sup of the second-derivative field
};

// All three profiles from one pass over the samples. Throws InvalidSpec for the
// rotation control (H = 0 there).
ProfileSet compute_profiles(const System& system, const ConditionOptions& opt);

ConditionResult cond_i_profile(const System& system, const ConditionOptions& opt);
ConditionResult cond_ii_profile(const System& system, const ConditionOptions& opt);
ConditionResult cond_iii_profile(const System& system, const ConditionOptions& opt);

struct ConditionReport {
  ConditionResult condition_i, condition_ii, condition_iii;
  std::string b1_desc, b2_desc;
  std::string system_desc;
  std::vector<std::string> caveats;
  bool consistent = false;
  std::string overall;
  std::optional<KushnirenkoReport> kushnirenko;
};

ConditionReport assemble_report(const System& system, const ProfileSet& profiles, const ConditionOptions& opt);

// compute_profiles + assemble_report, plus the Kushnirenko check for time-changed flows.
ConditionReport evaluate_conditions(const System& system, const ConditionOptions& opt);

}  // namespace paraspec
