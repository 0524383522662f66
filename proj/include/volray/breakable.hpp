#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "volray/quadrature.hpp"

namespace volray::breakable {

// A breakable ray integral, expressed as data plus functions: each segment is
// reduced to a packet on its own, then packets are folded front to back through
// a prefix state. The integral's value is identity_value plus the sum of the
// per-segment contributions.

using Packet = std::vector<double>;
using State = std::vector<double>;
using Value = std::vector<double>;

struct Step {
  Value contribution;
  State next;
};

struct Spec {
  std::string name;
  std::function<Packet(std::span<const SampleInterval>)> evaluate;
  State identity_state;
  Value identity_value;
  std::function<Step(const State&, const Packet&)> combine;
};

/// Packets of consecutive runs of `samples`; `cuts` holds the start index of
/// every run after the first (strictly increasing, inside (0, size)).
std::vector<Packet> evaluate_segments(const Spec& spec, std::span<const SampleInterval> samples,
                                      std::span<const std::size_t> cuts);

Value fold(const Spec& spec, std::span<const Packet> ordered);

/// Fold over the cut runs equals the fold over the single whole run, each
/// component within 1e-10 * max(1, |whole|).
bool check_split_invariance(const Spec& spec, std::span<const SampleInterval> shaded,
                            std::span<const std::size_t> cuts);

inline constexpr double kSplitTolerance = 1e-10;

// Shipped instances.
Spec transmittance();
Spec color();
Spec weight();
Spec depth();
Spec distortion();

// Closure combinators: the pointwise product and sum of two breakable
// integrals are breakable integrals.
Spec product(const Spec& a, const Spec& b);
Spec sum(const Spec& a, const Spec& b);

}  // namespace volray::breakable
