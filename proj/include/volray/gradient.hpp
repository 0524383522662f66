#pragma once

#include <cstdint>
#include <vector>

#include "volray/distsim.hpp"
#include "volray/field.hpp"
#include "volray/partitioner.hpp"

namespace volray {

// Finite-difference check that a worker's parameters can be differentiated
// without any cross-worker gradient traffic: the other workers' forward
// aggregates act as constants.

/// One voxel density of child `component` of a Sum-of-VoxelGrid scene.
struct ParamRef {
  std::size_t component = 0;
  std::size_t voxel = 0;

  friend bool operator==(const ParamRef&, const ParamRef&) noexcept = default;
  friend auto operator<=>(const ParamRef&, const ParamRef&) noexcept = default;
};

struct OwnedParam {
  ParamRef ref;
  int owner = -1;
};

/// loss = mean over rays of [ mean_c (C + T*bg - target)^2 + distortion_weight * L ]
struct GradientProblem {
  std::vector<Ray> rays;
  std::vector<Rgb> targets;
  Rgb background;
  double dt = 0.05;
  double distortion_weight = 0.01;
};

struct GradientEstimate {
  double global = 0.0;  // every worker recomputed for +-h
  double local = 0.0;   // only the owner recomputed; other payloads cached
};

/// One VoxelGrid per leaf, each covering its leaf box, densities uniform in
/// [0.5, 3], random colors.
Field voxel_scene_for_tree(const PartitionTree& tree, std::array<std::size_t, 3> resolution,
                           std::uint64_t seed);

/// Tile whose field owns the parameter. Throws ParamNotOwned unless the
/// component is a VoxelGrid lying inside a single leaf, InvalidArgument when
/// the reference is out of range.
int param_owner(const Field& scene, const PartitionTree& tree, ParamRef ref);

Field with_perturbed_voxel(const Field& scene, ParamRef ref, double delta);

/// Parameters some sample of some ray reads, in ascending order.
std::vector<OwnedParam> touched_parameters(const Field& scene, const PartitionTree& tree,
                                           const GradientProblem& problem);

/// Renders every ray through the mono oracle and evaluates the loss.
double loss_global(const Field& scene, const PartitionTree& tree, const GradientProblem& problem);

/// Central differences with step h. Throws ParamNotOwned when `worker` does
/// not own `ref`, InvalidArgument when h <= 0.
GradientEstimate local_gradient_fd(const Field& scene, const PartitionTree& tree, int worker,
                                   ParamRef ref, const GradientProblem& problem, double h);

}  // namespace volray
