#include "volray/distsim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "volray/error.hpp"

namespace volray {

std::string_view to_string(Protocol p) noexcept {
  switch (p) {
    case Protocol::mono: return "mono";
    case Protocol::sample_broadcast: return "sample_broadcast";
    case Protocol::tile_aggregate: return "tile_aggregate";
  }
  return "unknown";
}

Protocol parse_protocol(std::string_view name) {
  if (name == "mono") return Protocol::mono;
  if (name == "sample" || name == "sample_broadcast") return Protocol::sample_broadcast;
  if (name == "tile" || name == "tile_aggregate") return Protocol::tile_aggregate;
  throw Error(ErrorKind::InvalidArgument, "unknown protocol '" + std::string(name) + "'");
}

std::size_t payload_scalars(const Message& m) noexcept {
  if (const auto* s = std::get_if<SamplePayload>(&m)) return 1 + kScalarsPerSample * s->samples.size();
  if (std::holds_alternative<TilePayload>(m)) return kTilePayloadScalars;
  return 0;
}

EndpointStats& EndpointStats::operator+=(const EndpointStats& o) noexcept {
  scalars_sent += o.scalars_sent;
  scalars_received += o.scalars_received;
  messages_sent += o.messages_sent;
  messages_received += o.messages_received;
  return *this;
}

std::size_t CommStats::scalars_sent_total() const noexcept {
  std::size_t n = compositor.scalars_sent;
  for (const auto& w : per_worker) n += w.scalars_sent;
  return n;
}

std::size_t CommStats::scalars_received_total() const noexcept {
  std::size_t n = compositor.scalars_received;
  for (const auto& w : per_worker) n += w.scalars_received;
  return n;
}

std::size_t CommStats::messages_sent_total() const noexcept {
  std::size_t n = compositor.messages_sent;
  for (const auto& w : per_worker) n += w.messages_sent;
  return n;
}

double CommStats::samples_per_ray_mean() const noexcept {
  return rays_hit == 0 ? 0.0 : static_cast<double>(samples) / static_cast<double>(rays_hit);
}

double CommStats::samples_per_ray_per_worker_mean() const noexcept {
  const std::size_t reports = sample_payloads != 0 ? sample_payloads : tile_payloads;
  return reports == 0 ? 0.0 : static_cast<double>(samples) / static_cast<double>(reports);
}

void CommStats::merge(const CommStats& other) {
  if (per_worker.size() < other.per_worker.size()) per_worker.resize(other.per_worker.size());
  for (std::size_t i = 0; i < other.per_worker.size(); ++i) per_worker[i] += other.per_worker[i];
  compositor += other.compositor;
  rays += other.rays;
  rays_hit += other.rays_hit;
  samples += other.samples;
  sample_payloads += other.sample_payloads;
  tile_payloads += other.tile_payloads;
  control_messages += other.control_messages;
  wall_seconds += other.wall_seconds;
}

Worker::Worker(int tile_id, std::shared_ptr<const PartitionTree> tree, std::shared_ptr<const Field> scene)
    : tile_id_(tile_id),
      region_(tree->leaf_region(tile_id)),
      tree_(std::move(tree)),
      field_(make_masked(std::move(scene), region_)) {}

std::vector<Message> Worker::handle(const RayAssignment& job, Protocol protocol) const {
  if (protocol == Protocol::mono) {
    throw Error(ErrorKind::ProtocolMismatch, "workers do not take part in mono rendering");
  }
  std::vector<SampleInterval> bins = tile_samples(*tree_, job.ray, job.dt);
  std::vector<SampleInterval> own;
  std::vector<std::size_t> own_index;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i].tile == tile_id_) {
      own.push_back(bins[i]);
      own_index.push_back(i);
    }
  }
  shade_samples(field_, job.ray, own, tree_->root_box());

  std::vector<Message> out;
  if (protocol == Protocol::sample_broadcast) {
    SamplePayload p{job.ray_id, tile_id_, {}};
    p.samples.reserve(own.size());
    for (const auto& s : own) p.samples.push_back({s.t0, s.t1, s.sigma, s.rgb});
    out.emplace_back(std::move(p));
    return out;
  }

  // One aggregate per maximal run of consecutive global bins.
  std::size_t begin = 0;
  while (begin < own.size()) {
    std::size_t end = begin + 1;
    while (end < own.size() && own_index[end] == own_index[end - 1] + 1) ++end;
    const auto run = std::span<const SampleInterval>(own).subspan(begin, end - begin);
    out.emplace_back(TilePayload{job.ray_id, tile_id_, aggregate_samples(run)});
    begin = end;
  }
  if (out.empty()) {
    const auto hit = ray_box_intersect(job.ray, region_.box);
    const double entry = hit ? hit->enter : job.ray.t_near;
    out.emplace_back(TilePayload{job.ray_id, tile_id_, SegmentAggregate::identity(entry)});
  }
  return out;
}

WorkerPool WorkerPool::spawn(PartitionTree tree, Field scene) {
  validate(scene);
  WorkerPool pool;
  pool.tree_ = std::make_shared<const PartitionTree>(std::move(tree));
  pool.scene_ = std::make_shared<const Field>(std::move(scene));
  for (int t = 0; t < static_cast<int>(pool.tree_->tile_count()); ++t) {
    pool.workers_.emplace_back(t, pool.tree_, pool.scene_);
  }
  return pool;
}

RayAggregate composite(Protocol protocol, std::span<const Message> inbox) {
  if (protocol == Protocol::sample_broadcast) {
    std::vector<SampleInterval> bins;
    for (const Message& m : inbox) {
      if (const auto* p = std::get_if<SamplePayload>(&m)) {
        for (const SampleRecord& r : p->samples) {
          SampleInterval s = SampleInterval::between(r.t0, r.t1);
          s.sigma = r.sigma;
          s.rgb = r.rgb;
          s.tile = p->sender;
          bins.push_back(s);
        }
      }
    }
    std::sort(bins.begin(), bins.end(), [](const SampleInterval& a, const SampleInterval& b) {
      return a.t0 < b.t0 || (a.t0 == b.t0 && a.tile < b.tile);
    });
    return integrate_samples(bins);
  }
  if (protocol == Protocol::tile_aggregate) {
    std::vector<std::pair<int, SegmentAggregate>> segs;
    for (const Message& m : inbox) {
      if (const auto* p = std::get_if<TilePayload>(&m)) segs.emplace_back(p->sender, p->segment);
    }
    std::sort(segs.begin(), segs.end(), [](const auto& a, const auto& b) {
      return a.second.order_t < b.second.order_t ||
             (a.second.order_t == b.second.order_t && a.first < b.first);
    });
    std::vector<SegmentAggregate> ordered;
    ordered.reserve(segs.size());
    for (auto& s : segs) ordered.push_back(s.second);
    return compose(ordered);
  }
  throw Error(ErrorKind::ProtocolMismatch, "mono rendering has no compositor");
}

std::vector<int> assigned_tiles(const PartitionTree& tree, const Ray& ray) {
  std::vector<int> tiles;
  for (int t = 0; t < static_cast<int>(tree.tile_count()); ++t) {
    if (ray_box_intersect(ray, tree.leaf_box(t))) tiles.push_back(t);
  }
  return tiles;
}

std::vector<int> participating_tiles(const PartitionTree& tree, const Ray& ray,
                                     std::span<const SampleInterval> plan) {
  std::vector<int> tiles = assigned_tiles(tree, ray);
  for (const auto& s : plan) {
    if (std::find(tiles.begin(), tiles.end(), s.tile) == tiles.end()) tiles.push_back(s.tile);
  }
  std::sort(tiles.begin(), tiles.end());
  return tiles;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t id) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (id + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RayRender render_ray(const WorkerPool& pool, const Ray& ray, std::uint64_t ray_id,
                     const RenderSettings& settings) {
  const Protocol protocol = settings.protocol;
  RayRender out;
  out.stats = CommStats(protocol, pool.size());
  out.stats.rays = 1;
  if (pool.size() == 0) throw Error(ErrorKind::ProtocolMismatch, "worker pool is empty");

  // The orchestrator's plan only decides who is assigned; workers re-derive it.
  std::vector<SampleInterval> plan = tile_samples(pool.tree(), ray, settings.dt);
  out.stats.samples = plan.size();
  out.stats.rays_hit = ray_box_intersect(ray, pool.tree().root_box()) ? 1 : 0;

  if (protocol == Protocol::mono) {
    shade_samples(pool.scene(), ray, plan, pool.tree().root_box());
    out.aggregate = integrate_samples(plan);
    return out;
  }

  std::vector<int> targets = participating_tiles(pool.tree(), ray, plan);
  if (targets.empty()) return out;  // ray misses the scene: background only

  std::optional<std::mt19937_64> rng;
  if (settings.schedule.shuffle_seed) rng.emplace(mix_seed(*settings.schedule.shuffle_seed, ray_id));
  if (rng) std::shuffle(targets.begin(), targets.end(), *rng);

  // Workers run in (possibly shuffled) order; their replies queue up in that order.
  std::vector<Message> outbox;
  const RayAssignment job{ray_id, ray, settings.dt};
  for (int t : targets) {
    ++out.stats.control_messages;
    for (Message& m : pool.workers()[static_cast<std::size_t>(t)].handle(job, protocol)) {
      outbox.push_back(std::move(m));
    }
  }
  if (rng) std::shuffle(outbox.begin(), outbox.end(), *rng);

  for (const Message& m : outbox) {
    if (std::holds_alternative<SamplePayload>(m)) ++out.stats.sample_payloads;
    if (std::holds_alternative<TilePayload>(m)) ++out.stats.tile_payloads;
  }

  auto sender_of = [](const Message& m) {
    if (const auto* s = std::get_if<SamplePayload>(&m)) return s->sender;
    return std::get<TilePayload>(m).sender;
  };

  if (!settings.schedule.broadcast_all) {
    for (const Message& m : outbox) {
      const std::size_t n = payload_scalars(m);
      auto& from = out.stats.per_worker[static_cast<std::size_t>(sender_of(m))];
      from.scalars_sent += n;
      ++from.messages_sent;
      out.stats.compositor.scalars_received += n;
      ++out.stats.compositor.messages_received;
    }
    out.aggregate = composite(protocol, outbox);
    return out;
  }

  // Broadcast to every worker: each composes from its own copy of the traffic.
  const std::size_t k = pool.size();
  for (const Message& m : outbox) {
    const std::size_t n = payload_scalars(m);
    const auto sender = static_cast<std::size_t>(sender_of(m));
    for (std::size_t w = 0; w < k; ++w) {
      if (w == sender) continue;
      out.stats.per_worker[sender].scalars_sent += n;
      ++out.stats.per_worker[sender].messages_sent;
      out.stats.per_worker[w].scalars_received += n;
      ++out.stats.per_worker[w].messages_received;
    }
  }
  std::optional<RayAggregate> agreed;
  for (std::size_t w = 0; w < k; ++w) {
    std::vector<Message> inbox = outbox;
    if (rng) std::shuffle(inbox.begin(), inbox.end(), *rng);
    const RayAggregate mine = composite(protocol, inbox);
    if (!agreed) {
      agreed = mine;
    } else if (!(mine == *agreed)) {
      throw Error(ErrorKind::ProtocolMismatch, "worker " + std::to_string(w) + " composed a different result");
    }
  }
  out.aggregate = *agreed;
  return out;
}

void Camera::validate() const {
  if (!(vertical_fov > 0.0 && vertical_fov < 180.0)) {
    throw Error(ErrorKind::InvalidArgument, "camera fov must be in (0, 180)");
  }
  if (width < 1 || height < 1) throw Error(ErrorKind::InvalidArgument, "camera size must be >= 1");
  if (!is_finite(position) || !is_finite(look_at) || !is_finite(up)) {
    throw Error(ErrorKind::InvalidArgument, "camera vectors must be finite");
  }
  const Vec3 f = look_at - position;
  if (norm(f) == 0.0 || norm(cross(f, up)) == 0.0) {
    throw Error(ErrorKind::InvalidArgument, "camera look direction is degenerate");
  }
}

Ray Camera::primary_ray(int px, int py) const {
  const Vec3 forward = normalized(look_at - position);
  const Vec3 right = normalized(cross(forward, up));
  const Vec3 true_up = cross(right, forward);
  const double half = std::tan(vertical_fov * std::acos(-1.0) / 360.0);
  const double aspect = static_cast<double>(width) / static_cast<double>(height);
  const double u = ((px + 0.5) / width * 2.0 - 1.0) * half * aspect;
  const double v = (1.0 - (py + 0.5) / height * 2.0) * half;
  Ray r;
  r.origin = position;
  r.dir = normalized(forward + right * u + true_up * v);
  return r;
}

std::vector<Ray> Camera::all_rays() const {
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) rays.push_back(primary_ray(x, y));
  }
  return rays;
}

double max_abs_diff(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw Error(ErrorKind::InvalidArgument, "image sizes differ");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) worst = std::max(worst, std::abs(a.pixels[i][c] - b.pixels[i][c]));
  }
  return worst;
}

ImageRender render_image(const WorkerPool& pool, const Camera& camera, Rgb background,
                         const RenderSettings& settings) {
  camera.validate();
  const auto started = std::chrono::steady_clock::now();
  ImageRender out{Image(camera.width, camera.height), CommStats(settings.protocol, pool.size())};
  const unsigned threads = std::max(1u, std::min<unsigned>(settings.schedule.threads,
                                                           static_cast<unsigned>(camera.height)));
  std::vector<CommStats> partial(threads, CommStats(settings.protocol, pool.size()));
  std::vector<std::exception_ptr> failures(threads);

  auto work = [&](unsigned lane) {
    try {
      for (int y = static_cast<int>(lane); y < camera.height; y += static_cast<int>(threads)) {
        for (int x = 0; x < camera.width; ++x) {
          const auto id = static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(camera.width) + x;
          RayRender r = render_ray(pool, camera.primary_ray(x, y), id, settings);
          out.image.at(x, y) = pixel_color(r.aggregate, background);
          partial[lane].merge(r.stats);
        }
      }
    } catch (...) {
      failures[lane] = std::current_exception();
    }
  };

  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool_threads;
    for (unsigned t = 0; t < threads; ++t) pool_threads.emplace_back(work, t);
    for (auto& t : pool_threads) t.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  for (const auto& p : partial) out.stats.merge(p);
  out.stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

BenchReport bench_protocols(const WorkerPool& pool, const Camera& camera, std::span<const double> dts,
                            const Schedule& schedule) {
  if (dts.empty()) throw Error(ErrorKind::InvalidArgument, "bench needs at least one dt");
  BenchReport report;
  report.predicted_slope = static_cast<double>(kScalarsPerSample) / static_cast<double>(kTilePayloadScalars);
  std::vector<double> sbar;
  std::vector<double> ratio;
  for (double dt : dts) {
    RenderSettings s{dt, Protocol::sample_broadcast, schedule};
    const CommStats naive = render_image(pool, camera, {}, s).stats;
    s.protocol = Protocol::tile_aggregate;
    const CommStats tiled = render_image(pool, camera, {}, s).stats;
    const double mean = naive.samples_per_ray_per_worker_mean();
    report.rows.push_back({dt, mean, Protocol::sample_broadcast, naive.scalars_sent_total()});
    report.rows.push_back({dt, mean, Protocol::tile_aggregate, tiled.scalars_sent_total()});
    if (tiled.scalars_sent_total() > 0) {
      const double r = static_cast<double>(naive.scalars_sent_total()) /
                       static_cast<double>(tiled.scalars_sent_total());
      const double model = (1.0 + static_cast<double>(kScalarsPerSample) * mean) /
                           static_cast<double>(kTilePayloadScalars);
      report.worst_model_error = std::max(report.worst_model_error, std::abs(r - model) / model);
      sbar.push_back(mean);
      ratio.push_back(r);
    }
  }
  if (sbar.size() >= 2) {
    const double mx = std::accumulate(sbar.begin(), sbar.end(), 0.0) / static_cast<double>(sbar.size());
    const double my = std::accumulate(ratio.begin(), ratio.end(), 0.0) / static_cast<double>(ratio.size());
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < sbar.size(); ++i) {
      sxx += (sbar[i] - mx) * (sbar[i] - mx);
      sxy += (sbar[i] - mx) * (ratio[i] - my);
    }
    if (sxx > 0.0) report.fitted_slope = sxy / sxx;
  }
  const bool slope_ok = !report.fitted_slope ||
                        std::abs(*report.fitted_slope - report.predicted_slope) <=
                            kBenchTolerance * report.predicted_slope;
  report.within_tolerance = !sbar.empty() && slope_ok && report.worst_model_error <= kBenchTolerance;
  return report;
}

}  // namespace volray
