// volray: render, partition, verify and bench front end.
//
// Exit codes: 0 ok, 1 verification failure, 2 configuration error,
// 3 I/O error, 4 degenerate split.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "volray/baselines.hpp"
#include "volray/distsim.hpp"
#include "volray/error.hpp"
#include "volray/io.hpp"
#include "volray/partitioner.hpp"
#include "volray/verify.hpp"

namespace {

using namespace volray;

constexpr int kExitOk = 0;
constexpr int kExitVerify = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDegenerate = 4;

struct TreeSource {
  std::string tree_path;
  std::string points_path;
  int depth = 0;
  std::size_t max_points = 20000;
  double point_dt = 0.02;
  std::uint64_t seed = 0;
};

struct RenderArgs {
  std::string scene_path;
  TreeSource tree;
  std::string protocol = "tile";
  double dt = 0.02;
  std::string out_path;
  std::string stats_path;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> shuffle_seed;
  bool broadcast_all = false;
  std::optional<int> width;
  std::optional<int> height;
};

struct PartitionArgs {
  std::string points_path;
  std::string scene_path;
  bool from_rays = false;
  int depth = 0;
  double dt = 0.02;
  std::size_t max_points = 20000;
  std::uint64_t seed = 0;
  double pad = 0.01;
  std::string out_path;
  std::string report_path;
};

struct VerifyArgs {
  std::uint64_t seed = 1;
  std::size_t cases = 1000;
  bool inject_fault = false;
};

struct BenchArgs {
  std::string scene_path;
  TreeSource tree;
  std::vector<double> dts;
  std::string out_path;
  std::optional<unsigned> threads;
};

unsigned resolve_threads(const std::optional<unsigned>& flag) {
  if (flag) {
    if (*flag == 0) throw Error(ErrorKind::InvalidArgument, "--threads must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("VOLRAY_THREADS"); env != nullptr && *env != '\0') {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::InvalidArgument, "VOLRAY_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Camera scene_camera(const Scene& scene) { return scene.camera.value_or(Camera{}); }

PartitionTree load_or_build_tree(const TreeSource& src, const Scene& scene) {
  if (!src.tree_path.empty()) {
    PartitionTree tree = load_tree(src.tree_path);
    if (!(tree.root_box() == scene.root_box)) {
      throw Error(ErrorKind::InvalidArgument, "tree root box differs from the scene root box");
    }
    return tree;
  }
  if (src.depth == 0) return PartitionTree::single(scene.root_box);
  std::vector<Point3> points;
  if (!src.points_path.empty()) {
    for (const Point3& p : load_points(src.points_path)) {
      if (scene.root_box.contains(p)) points.push_back(p);
    }
  } else {
    const std::vector<Ray> rays = scene_camera(scene).all_rays();
    points = rays_to_points(rays, scene.root_box, src.point_dt, src.max_points, src.seed).points;
  }
  return build_tree(points, scene.root_box, src.depth);
}

void add_tree_options(CLI::App* cmd, TreeSource& src) {
  cmd->add_option("--tree", src.tree_path, "Partition tree JSON");
  cmd->add_option("--points", src.points_path, "Point cloud (PLY or xyz) to partition when no tree is given");
  cmd->add_option("--depth", src.depth, "Split depth when building a tree (2^depth tiles)")->check(CLI::Range(0, 20));
  cmd->add_option("--seed", src.seed, "Seed for ray-derived point subsampling");
}

int cmd_render(const RenderArgs& a) {
  Scene scene = load_scene(a.scene_path);
  Camera camera = scene_camera(scene);
  if (a.width) camera.width = *a.width;
  if (a.height) camera.height = *a.height;
  camera.validate();
  if (!(a.dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "--dt must be > 0");

  RenderSettings settings;
  settings.dt = a.dt;
  settings.protocol = parse_protocol(a.protocol);
  settings.schedule.threads = resolve_threads(a.threads);
  settings.schedule.shuffle_seed = a.shuffle_seed;
  settings.schedule.broadcast_all = a.broadcast_all;

  const WorkerPool pool = WorkerPool::spawn(load_or_build_tree(a.tree, scene), scene.field);
  const ImageRender r = render_image(pool, camera, scene.background, settings);
  if (!a.out_path.empty()) write_file(a.out_path, encode_ppm(r.image));
  if (!a.stats_path.empty()) write_file(a.stats_path, dump_stats(r.stats));
  std::cerr << "rendered " << camera.width << "x" << camera.height << " with " << pool.size() << " worker(s), "
            << to_string(settings.protocol) << ", " << r.stats.scalars_sent_total() << " payload scalars\n";
  return kExitOk;
}

int cmd_partition(const PartitionArgs& a) {
  if (a.depth < 0) throw Error(ErrorKind::InvalidArgument, "--depth must be >= 0");
  std::optional<Scene> scene;
  if (!a.scene_path.empty()) scene = load_scene(a.scene_path);

  std::vector<Point3> points;
  std::vector<Ray> rays;
  Aabb root;
  if (a.from_rays) {
    if (!scene) throw Error(ErrorKind::InvalidArgument, "--from-rays needs --scene for the camera and root box");
    root = scene->root_box;
    rays = scene_camera(*scene).all_rays();
    points = rays_to_points(rays, root, a.dt, a.max_points, a.seed).points;
  } else {
    if (a.points_path.empty()) throw Error(ErrorKind::InvalidArgument, "give --points or --from-rays");
    points = load_points(a.points_path);
    root = scene ? scene->root_box : padded_bounds(points, a.pad);
  }
  const PartitionTree tree = build_tree(points, root, a.depth);
  const std::string text = dump_tree(tree);
  if (a.out_path.empty()) {
    std::cout << text;
  } else {
    write_file(a.out_path, text);
  }
  const BalanceReport report = balance_report(tree, points, rays, a.dt);
  if (!a.report_path.empty()) write_file(a.report_path, dump_balance(report));
  std::cerr << tree.tile_count() << " tiles from " << points.size() << " points, max/min count ratio "
            << report.point_ratio << "\n";
  return kExitOk;
}

int cmd_verify(const VerifyArgs& a) {
  VerifyOptions options;
  options.seed = a.seed;
  options.cases = a.cases;
  options.inject_fault = a.inject_fault;
  bool all = true;
  for (const SuiteResult& r : verify_all(options)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  cases=" << r.cases << " failures=" << r.failures
              << " worst=" << r.worst << "\n";
    if (!r.passed) {
      all = false;
      std::cout << "  counterexample: case seed " << r.failing_case_seed.value_or(0) << ": " << r.detail << "\n";
    }
  }
  return all ? kExitOk : kExitVerify;
}

int cmd_bench(const BenchArgs& a) {
  if (a.dts.empty()) throw Error(ErrorKind::InvalidArgument, "bench needs a non-empty --dt sweep");
  for (double dt : a.dts) {
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "every dt must be > 0");
  }
  Scene scene = load_scene(a.scene_path);
  const WorkerPool pool = WorkerPool::spawn(load_or_build_tree(a.tree, scene), scene.field);
  Schedule schedule;
  schedule.threads = resolve_threads(a.threads);
  const BenchReport report = bench_protocols(pool, scene_camera(scene), a.dts, schedule);
  const std::string csv = bench_csv(report);
  if (a.out_path.empty()) {
    std::cout << csv;
  } else {
    write_file(a.out_path, csv);
  }
  std::cerr << "predicted slope " << report.predicted_slope << ", fitted "
            << (report.fitted_slope ? std::to_string(*report.fitted_slope) : std::string("n/a"))
            << ", worst model error " << report.worst_model_error << "\n";
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Io: return kExitIo;
    case ErrorKind::DegenerateSplit: return kExitDegenerate;
    default: return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tiled volume renderer and multi-worker simulator"};
  app.require_subcommand(1);

  RenderArgs render;
  auto* r = app.add_subcommand("render", "Render a scene to PPM with JSON communication stats");
  r->add_option("--scene", render.scene_path, "Scene JSON")->required();
  add_tree_options(r, render.tree);
  r->add_option("--protocol", render.protocol, "mono | sample | tile");
  r->add_option("--dt", render.dt, "Sample spacing along rays");
  r->add_option("--out", render.out_path, "Output PPM");
  r->add_option("--stats", render.stats_path, "Output stats JSON");
  r->add_option("--threads", render.threads, "Render threads (fallback: VOLRAY_THREADS)");
  r->add_option("--shuffle-seed", render.shuffle_seed, "Shuffle worker and message order with this seed");
  r->add_flag("--broadcast-all", render.broadcast_all, "Deliver payloads to every worker and check agreement");
  r->add_option("--width", render.width, "Override camera width");
  r->add_option("--height", render.height, "Override camera height");

  PartitionArgs part;
  auto* p = app.add_subcommand("partition", "Build a median-split partition tree");
  p->add_option("--points", part.points_path, "Point cloud (ASCII PLY or xyz)");
  p->add_option("--scene", part.scene_path, "Scene JSON supplying root box and camera");
  p->add_flag("--from-rays", part.from_rays, "Derive points by discretizing the scene camera's rays");
  p->add_option("--depth", part.depth, "Split depth (2^depth tiles)")->required();
  p->add_option("--dt", part.dt, "Ray discretization step for --from-rays and sample counts");
  p->add_option("--max-points", part.max_points, "Subsample ray points to at most this many");
  p->add_option("--seed", part.seed, "Subsampling seed");
  p->add_option("--pad", part.pad, "Root box padding as a fraction of the cloud extent");
  p->add_option("--out", part.out_path, "Output tree JSON (stdout if omitted)");
  p->add_option("--report", part.report_path, "Output balance report JSON");

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "Run the randomized property suites");
  v->add_option("--seed", ver.seed, "Base seed");
  v->add_option("--cases", ver.cases, "Random cases per suite");
  v->add_flag("--inject-fault", ver.inject_fault, "Corrupt the code under test (negative control)")
      ->group("");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Compare protocol traffic over a dt sweep");
  b->add_option("--scene", bench.scene_path, "Scene JSON")->required();
  add_tree_options(b, bench.tree);
  b->add_option("--dt", bench.dts, "Sample spacings (repeat or comma separated)")->delimiter(',');
  b->add_option("--out", bench.out_path, "Output CSV (stdout if omitted)");
  b->add_option("--threads", bench.threads, "Render threads (fallback: VOLRAY_THREADS)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*r) return cmd_render(render);
    if (*p) return cmd_partition(part);
    if (*v) return cmd_verify(ver);
    if (*b) return cmd_bench(bench);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
