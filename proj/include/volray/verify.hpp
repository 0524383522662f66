#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "volray/breakable.hpp"
#include "volray/field.hpp"
#include "volray/quadrature.hpp"

namespace volray {

// Randomized property suites. Every case draws from its own generator seeded
// by case_seed(seed, index), so a failing case can be replayed in isolation.

struct VerifyOptions {
  std::uint64_t seed = 1;
  std::size_t cases = 1000;
  std::size_t gradient_params = 100;
  /// Negative control: corrupts the composition under test so suites must fail.
  bool inject_fault = false;
};

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // largest observed error over the suite's own tolerance (<= 1 passes)
  std::optional<std::uint64_t> failing_case_seed;
  std::string detail;
};

std::uint64_t case_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Blobs, a box and a small voxel grid inside [-1.2, 1.2]^3.
Field random_scene(std::mt19937_64& rng);
inline Aabb random_scene_root() { return {{-1.2, -1.2, -1.2}, {1.2, 1.2, 1.2}}; }
/// Unit ray from a sphere of radius 3 aimed at a point inside `root`.
Ray random_ray(std::mt19937_64& rng, const Aabb& root);
/// Start indices of a random contiguous cut of n items into 1..max_segments runs.
std::vector<std::size_t> random_cuts(std::mt19937_64& rng, std::size_t n, std::size_t max_segments);

/// Mutation used as a negative control: the combine step ignores the prefix state.
breakable::Spec forget_prefix(const breakable::Spec& spec);

SuiteResult verify_partition_equivalence(const VerifyOptions& options);
SuiteResult verify_distortion_equivalence(const VerifyOptions& options);
SuiteResult verify_breakable(const VerifyOptions& options);
SuiteResult verify_gradient_locality(const VerifyOptions& options);
SuiteResult verify_blending_deviation(const VerifyOptions& options);

std::vector<SuiteResult> verify_all(const VerifyOptions& options);

}  // namespace volray
