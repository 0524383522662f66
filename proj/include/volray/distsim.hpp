#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "volray/field.hpp"
#include "volray/partitioner.hpp"
#include "volray/quadrature.hpp"
#include "volray/segrender.hpp"

namespace volray {

// Simulated multi-worker renderer. One worker owns each tile and only ever
// shades points inside it; workers and the compositor talk exclusively
// through immutable messages. Composition order is geometric (distance along
// the ray), never arrival order, so results do not depend on scheduling.

enum class Protocol { mono, sample_broadcast, tile_aggregate };

std::string_view to_string(Protocol p) noexcept;
/// Accepts mono | sample | sample_broadcast | tile | tile_aggregate.
Protocol parse_protocol(std::string_view name);

struct SampleRecord {
  double t0 = 0.0;
  double t1 = 0.0;
  double sigma = 0.0;
  Rgb rgb;
};

struct RayAssignment {
  std::uint64_t ray_id = 0;
  Ray ray;
  double dt = 0.0;
};

/// Naive protocol: every shaded bin a worker owns on the ray.
struct SamplePayload {
  std::uint64_t ray_id = 0;
  int sender = -1;
  std::vector<SampleRecord> samples;
};

/// Efficient protocol: one aggregate per contiguous run of owned bins.
struct TilePayload {
  std::uint64_t ray_id = 0;
  int sender = -1;
  SegmentAggregate segment;
};

struct RayResult {
  std::uint64_t ray_id = 0;
  RayAggregate aggregate;
};

using Message = std::variant<RayAssignment, SamplePayload, TilePayload, RayResult>;

inline constexpr std::size_t kScalarsPerSample = 6;    // t0, t1, sigma, r, g, b
inline constexpr std::size_t kTilePayloadScalars = 9;  // ray_id, order_t, T, Cr, Cg, Cb, A, D, L

/// Payload scalars a message puts on the wire. Assignments and results are
/// control traffic and count 0.
std::size_t payload_scalars(const Message& m) noexcept;

struct EndpointStats {
  std::size_t scalars_sent = 0;
  std::size_t scalars_received = 0;
  std::size_t messages_sent = 0;
  std::size_t messages_received = 0;

  EndpointStats& operator+=(const EndpointStats& o) noexcept;
  friend bool operator==(const EndpointStats&, const EndpointStats&) noexcept = default;
};

struct CommStats {
  Protocol protocol = Protocol::mono;
  std::vector<EndpointStats> per_worker;
  EndpointStats compositor;
  std::size_t rays = 0;
  std::size_t rays_hit = 0;          // rays that intersect the root box
  std::size_t samples = 0;           // bins after tile splitting
  std::size_t sample_payloads = 0;   // (ray, worker) reports in the naive protocol
  std::size_t tile_payloads = 0;
  std::size_t control_messages = 0;  // ray assignments
  double wall_seconds = 0.0;         // not part of any byte-compared output

  CommStats() = default;
  CommStats(Protocol p, std::size_t workers) : protocol(p), per_worker(workers) {}

  std::size_t scalars_sent_total() const noexcept;
  std::size_t scalars_received_total() const noexcept;
  std::size_t messages_sent_total() const noexcept;
  double samples_per_ray_mean() const noexcept;
  /// Mean bins per (ray, participating worker) pair.
  double samples_per_ray_per_worker_mean() const noexcept;
  void merge(const CommStats& other);
};

class Worker {
 public:
  Worker(int tile_id, std::shared_ptr<const PartitionTree> tree, std::shared_ptr<const Field> scene);

  int tile_id() const noexcept { return tile_id_; }
  const TileRegion& region() const noexcept { return region_; }
  /// The scene masked to this worker's tile.
  const Field& field() const noexcept { return field_; }

  /// Shades the bins this worker owns on the assigned ray and reports them.
  /// Always answers: an assigned worker with no bins reports an identity
  /// aggregate (or an empty sample list) ordered at its tile entry.
  std::vector<Message> handle(const RayAssignment& job, Protocol protocol) const;

 private:
  int tile_id_;
  TileRegion region_;
  std::shared_ptr<const PartitionTree> tree_;
  Field field_;
};

class WorkerPool {
 public:
  /// One worker per leaf, each holding the scene masked to its tile.
  static WorkerPool spawn(PartitionTree tree, Field scene);

  const PartitionTree& tree() const noexcept { return *tree_; }
  const Field& scene() const noexcept { return *scene_; }
  const std::vector<Worker>& workers() const noexcept { return workers_; }
  std::size_t size() const noexcept { return workers_.size(); }

 private:
  std::shared_ptr<const PartitionTree> tree_;
  std::shared_ptr<const Field> scene_;
  std::vector<Worker> workers_;
};

/// Composes whatever landed in a compositor inbox; sorts by geometry first.
RayAggregate composite(Protocol protocol, std::span<const Message> inbox);

/// Tiles an orchestrator assigns a ray to: every tile the ray crosses.
std::vector<int> assigned_tiles(const PartitionTree& tree, const Ray& ray);

/// assigned_tiles plus any owner of a bin in `plan`, ascending.
std::vector<int> participating_tiles(const PartitionTree& tree, const Ray& ray,
                                     std::span<const SampleInterval> plan);

struct Schedule {
  unsigned threads = 1;
  /// Shuffles worker execution and inbox arrival order per ray.
  std::optional<std::uint64_t> shuffle_seed;
  /// Deliver every payload to every worker; all workers compose and must agree.
  bool broadcast_all = false;
};

struct RenderSettings {
  double dt = 0.02;
  Protocol protocol = Protocol::tile_aggregate;
  Schedule schedule;
};

struct RayRender {
  RayAggregate aggregate;
  CommStats stats;
};

/// mono integrates the unmasked scene over the same tile-split bins the
/// workers use; it is the oracle and never communicates.
RayRender render_ray(const WorkerPool& pool, const Ray& ray, std::uint64_t ray_id,
                     const RenderSettings& settings);

struct Camera {
  Point3 position{0.0, 0.0, 4.0};
  Point3 look_at{0.0, 0.0, 0.0};
  Vec3 up{0.0, 1.0, 0.0};
  double vertical_fov = 45.0;  // degrees
  int width = 64;
  int height = 64;

  void validate() const;
  /// Ray through the center of pixel (px, py); py = 0 is the top row.
  Ray primary_ray(int px, int py) const;
  std::vector<Ray> all_rays() const;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;  // row-major, clamped, not yet quantized

  Image() = default;
  Image(int w, int h, Rgb fill = {}) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}
  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

double max_abs_diff(const Image& a, const Image& b);

struct ImageRender {
  Image image;
  CommStats stats;
};

ImageRender render_image(const WorkerPool& pool, const Camera& camera, Rgb background,
                         const RenderSettings& settings);

struct BenchRow {
  double dt = 0.0;
  double samples_per_ray_per_worker = 0.0;
  Protocol protocol = Protocol::tile_aggregate;
  std::size_t scalars_total = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  /// Least-squares slope of (sample scalars / tile scalars) against S-bar.
  std::optional<double> fitted_slope;
  double predicted_slope = 0.0;
  /// Largest |ratio - (1 + 6 S-bar) / 9| / model over the sweep.
  double worst_model_error = 0.0;
  bool within_tolerance = false;
};

inline constexpr double kBenchTolerance = 0.30;

/// Renders the camera with both distributed protocols for every dt.
BenchReport bench_protocols(const WorkerPool& pool, const Camera& camera, std::span<const double> dts,
                            const Schedule& schedule = {});

}  // namespace volray
