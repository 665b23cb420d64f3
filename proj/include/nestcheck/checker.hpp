#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "nestcheck/model.hpp"

namespace nestcheck {

struct Property {
  enum class Kind { Reach, ReachMin, ReachMax, DeadlockFree };

  Kind kind = Kind::DeadlockFree;
  std::string label;  // empty for DeadlockFree

  friend bool operator==(const Property&, const Property&) = default;
};

/// Parses `reach <label>`, `reachmin <label>`, `reachmax <label>`, `deadlockfree`.
Property parse_property(std::string_view text);
std::string to_string(const Property& p);

struct CheckOptions {
  std::uint64_t scale = 1000;
  /// Exact rational solving is used while the unknown set has at most this
  /// many states; above it, value iteration.
  std::size_t exact_threshold = 2000;
  double epsilon = 1e-10;
  std::uint64_t max_iterations = 10'000'000;
};

struct CheckResult {
  std::uint64_t value = 0;
  std::uint64_t scale = 1000;
  bool exact = true;
  std::size_t states_explored = 0;

  friend bool operator==(const CheckResult&, const CheckResult&) = default;
};

/// Reachability probability. `exact` is set when the value was obtained by a
/// rational solve (or a certified strategy for MDPs).
struct ReachProbability {
  std::optional<mpq_class> exact;
  double approx = 0.0;
  std::size_t iterations = 0;
};

enum class Optimize { Min, Max };

/// The model-checking function: natural-number result at `opts.scale`.
/// Throws CheckError on property/kind mismatch or an unknown label.
CheckResult mc(const StandardModel& m, const Property& phi, const CheckOptions& opts = {});

int check_reach_bool(const StandardModel& m, std::string_view label);
int check_deadlock_free(const StandardModel& m);

ReachProbability dtmc_reach_prob(const StandardModel& m, std::string_view label,
                                 const CheckOptions& opts = {});
ReachProbability mdp_reach_prob(const StandardModel& m, std::string_view label, Optimize mode,
                                const CheckOptions& opts = {});

/// Round half up of p * scale.
std::uint64_t round_to_scale(const mpq_class& p, std::uint64_t scale);
std::uint64_t round_to_scale(double p, std::uint64_t scale);

}  // namespace nestcheck
