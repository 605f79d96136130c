#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perstab/system_model.h"

namespace perstab {

/// Names accepted by builtin_system (an optional "builtin:" prefix is
/// stripped first).
std::vector<std::string> builtin_names();

/// heat8, heat16, heat8-sin2x, scalar-unstable (y' = y + u, T = 1),
/// scalar-stable (y' = -y + u, T = 1), unstable-uncontrolled (y' = y, B = 0,
/// T = 1), random-3d (drawn from `seed`). nullopt for unknown names.
std::optional<PeriodicSystem> builtin_system(const std::string& name,
                                             std::uint64_t seed = 0);

enum class RandomKind {
  /// Random constant part, random first-harmonic D(t) and B(t).
  kGeneric,
  /// Block triangular with an uncontrollable scalar block whose mean rate is
  /// positive: not stabilizable.
  kHiddenUnstable,
  /// Same structure with a negative mean rate: stabilizable.
  kHiddenStable,
};

struct RandomSystem {
  PeriodicSystem sys;
  RandomKind kind;
};

/// Deterministic 3-dim system for `seed`. The kind cycles with seed % 4
/// (generic, generic, hidden unstable, hidden stable); the structured kinds
/// are rotated by a random orthogonal matrix so the structure is not
/// visible in the coordinates.
RandomSystem random_3d_system(std::uint64_t seed);

}  // namespace perstab
