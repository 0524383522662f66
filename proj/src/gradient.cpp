#include "volray/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "volray/error.hpp"

namespace volray {

namespace {

const SumField& as_sum(const Field& scene) {
  const auto* sum = std::get_if<SumField>(&scene.node);
  if (sum == nullptr) throw Error(ErrorKind::ParamNotOwned, "scene is not a sum of voxel grids");
  return *sum;
}

const VoxelGrid& grid_of(const Field& scene, ParamRef ref) {
  const SumField& sum = as_sum(scene);
  if (ref.component >= sum.children.size()) {
    throw Error(ErrorKind::InvalidArgument, "component " + std::to_string(ref.component) + " out of range");
  }
  const auto* grid = std::get_if<VoxelGrid>(&sum.children[ref.component].node);
  if (grid == nullptr) throw Error(ErrorKind::ParamNotOwned, "component is not a voxel grid");
  if (ref.voxel >= grid->voxel_count()) {
    throw Error(ErrorKind::InvalidArgument, "voxel " + std::to_string(ref.voxel) + " out of range");
  }
  return *grid;
}

double ray_loss(const RayAggregate& agg, Rgb target, const GradientProblem& problem) {
  double mse = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    const double d = agg.color[c] + agg.transmittance * problem.background[c] - target[c];
    mse += d * d;
  }
  return mse / 3.0 + problem.distortion_weight * agg.distortion;
}

void check_problem(const GradientProblem& problem) {
  if (problem.rays.size() != problem.targets.size()) {
    throw Error(ErrorKind::InvalidArgument, "one target per ray is required");
  }
  if (!(problem.dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
}

// Voxel whose cell contains p; it always carries trilinear weight >= 1/8.
std::size_t containing_voxel(const VoxelGrid& g, Point3 p) {
  std::array<std::size_t, 3> ijk{};
  for (std::size_t a = 0; a < 3; ++a) {
    const double u = (p[a] - g.box.min[a]) / (g.box.max[a] - g.box.min[a]) * static_cast<double>(g.resolution[a]);
    const auto hi = static_cast<double>(g.resolution[a] - 1);
    ijk[a] = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, hi));
  }
  return g.index(ijk[0], ijk[1], ijk[2]);
}

}  // namespace

Field voxel_scene_for_tree(const PartitionTree& tree, std::array<std::size_t, 3> resolution,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> density(0.5, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Field> grids;
  for (int t = 0; t < static_cast<int>(tree.tile_count()); ++t) {
    VoxelGrid g;
    g.box = tree.leaf_box(t);
    g.resolution = resolution;
    g.interpolation = Interpolation::trilinear;
    for (std::size_t v = 0; v < g.voxel_count(); ++v) {
      g.densities.push_back(density(rng));
      const double r = unit(rng);
      const double gr = unit(rng);
      const double b = unit(rng);
      g.colors.push_back({r, gr, b});
    }
    grids.push_back(Field{std::move(g)});
  }
  return make_sum(std::move(grids));
}

int param_owner(const Field& scene, const PartitionTree& tree, ParamRef ref) {
  const VoxelGrid& g = grid_of(scene, ref);
  for (int t = 0; t < static_cast<int>(tree.tile_count()); ++t) {
    if (tree.leaf_box(t).contains(g.box)) return t;
  }
  throw Error(ErrorKind::ParamNotOwned, "voxel grid straddles tiles");
}

Field with_perturbed_voxel(const Field& scene, ParamRef ref, double delta) {
  grid_of(scene, ref);
  Field out = scene;
  auto& grid = std::get<VoxelGrid>(std::get<SumField>(out.node).children[ref.component].node);
  grid.densities[ref.voxel] += delta;
  return out;
}

std::vector<OwnedParam> touched_parameters(const Field& scene, const PartitionTree& tree,
                                           const GradientProblem& problem) {
  check_problem(problem);
  const SumField& sum = as_sum(scene);
  std::set<ParamRef> seen;
  for (const Ray& ray : problem.rays) {
    for (const SampleInterval& s : tile_samples(tree, ray, problem.dt)) {
      const Point3 p = sample_position(ray, s.m, tree.root_box());
      for (std::size_t c = 0; c < sum.children.size(); ++c) {
        const auto* g = std::get_if<VoxelGrid>(&sum.children[c].node);
        if (g != nullptr && g->box.contains(p)) seen.insert({c, containing_voxel(*g, p)});
      }
    }
  }
  std::vector<OwnedParam> out;
  for (const ParamRef& ref : seen) {
    try {
      out.push_back({ref, param_owner(scene, tree, ref)});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ParamNotOwned) throw;
    }
  }
  return out;
}

double loss_global(const Field& scene, const PartitionTree& tree, const GradientProblem& problem) {
  check_problem(problem);
  double total = 0.0;
  for (std::size_t r = 0; r < problem.rays.size(); ++r) {
    std::vector<SampleInterval> bins = tile_samples(tree, problem.rays[r], problem.dt);
    shade_samples(scene, problem.rays[r], bins, tree.root_box());
    total += ray_loss(integrate_samples(bins), problem.targets[r], problem);
  }
  return problem.rays.empty() ? 0.0 : total / static_cast<double>(problem.rays.size());
}

namespace {

// Forward pass of the tile-aggregate pipeline with the owner's payloads
// recomputed from `owner_scene` and every other payload taken from `cache`.
double loss_local(const std::vector<std::vector<TilePayload>>& cache, const Worker& owner,
                  const GradientProblem& problem, double dt) {
  double total = 0.0;
  for (std::size_t r = 0; r < problem.rays.size(); ++r) {
    std::vector<Message> inbox;
    bool owner_assigned = false;
    for (const TilePayload& p : cache[r]) {
      if (p.sender == owner.tile_id()) {
        owner_assigned = true;
      } else {
        inbox.emplace_back(p);
      }
    }
    if (owner_assigned) {
      for (Message& m : owner.handle({r, problem.rays[r], dt}, Protocol::tile_aggregate)) {
        inbox.push_back(std::move(m));
      }
    }
    const RayAggregate agg = inbox.empty() ? RayAggregate{} : composite(Protocol::tile_aggregate, inbox);
    total += ray_loss(agg, problem.targets[r], problem);
  }
  return problem.rays.empty() ? 0.0 : total / static_cast<double>(problem.rays.size());
}

}  // namespace

GradientEstimate local_gradient_fd(const Field& scene, const PartitionTree& tree, int worker,
                                   ParamRef ref, const GradientProblem& problem, double h) {
  check_problem(problem);
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "h must be positive");
  if (param_owner(scene, tree, ref) != worker) {
    throw Error(ErrorKind::ParamNotOwned,
                "parameter is not in the field of worker " + std::to_string(worker));
  }
  const Field plus = with_perturbed_voxel(scene, ref, h);
  const Field minus = with_perturbed_voxel(scene, ref, -h);

  GradientEstimate out;
  out.global = (loss_global(plus, tree, problem) - loss_global(minus, tree, problem)) / (2.0 * h);

  // Forward pass once with the unperturbed scene; these payloads are what the
  // other workers would have broadcast.
  const WorkerPool pool = WorkerPool::spawn(tree, scene);
  std::vector<std::vector<TilePayload>> cache(problem.rays.size());
  for (std::size_t r = 0; r < problem.rays.size(); ++r) {
    const RayAssignment job{r, problem.rays[r], problem.dt};
    const auto plan = tile_samples(tree, problem.rays[r], problem.dt);
    for (int t : participating_tiles(tree, problem.rays[r], plan)) {
      for (Message& m : pool.workers()[static_cast<std::size_t>(t)].handle(job, Protocol::tile_aggregate)) {
        cache[r].push_back(std::get<TilePayload>(m));
      }
    }
  }
  const auto shared_tree = std::make_shared<const PartitionTree>(tree);
  const Worker up(worker, shared_tree, std::make_shared<const Field>(plus));
  const Worker down(worker, shared_tree, std::make_shared<const Field>(minus));
  out.local = (loss_local(cache, up, problem, problem.dt) - loss_local(cache, down, problem, problem.dt)) / (2.0 * h);
  return out;
}

}  // namespace volray
