#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <unordered_set>

#include "heed/session.hpp"
#include "heed/util.hpp"

namespace heed {

namespace {

uint64_t derive_seed(uint64_t master, std::string_view label, uint64_t index = 0) {
  uint64_t s = master ^ fnv1a64(label) ^ (0x9e3779b97f4a7c15ull * (index + 1));
  return splitmix64(s);
}

/// Per-user gate in front of the shared classification. Reads return data
/// only in the CAAV condition and only while this user's toggle is on, so a
/// policy cannot observe partner attention any other way.
struct ViewGate {
  bool caav = false;
  bool toggle_on = false;
  const Replica* replica = nullptr;
  UserId partner = 0;
  double threshold = 0.05;
  const std::vector<VoxelIndex>* active_list = nullptr;

  /// Classes aligned with the active list; empty when gated off.
  std::vector<VoxelClass> read(double t) const {
    if (!caav || !toggle_on) return {};
    std::vector<VoxelClass> out(active_list->size(), VoxelClass::kUnexplored);
    const AttentionMap& own = replica->own_map();
    const AttentionMap& other = replica->mirror(partner);
    for (size_t n = 0; n < active_list->size(); ++n) {
      const VoxelIndex v = (*active_list)[n];
      const bool self = own.effective_value(v, t) >= threshold;
      const bool peer = other.effective_value(v, t) >= threshold;
      out[n] = self && peer ? VoxelClass::kBoth
               : self       ? VoxelClass::kSelfOnly
               : peer       ? VoxelClass::kPartnerOnly
                            : VoxelClass::kUnexplored;
    }
    return out;
  }
};

constexpr double kGazeTurnRate = 2.5;    // rad/s
constexpr double kOrbitTurnRate = 0.5;   // rad/s
constexpr double kClimbRate = 0.5;       // m/s
constexpr double kGazeJitter = 0.012;    // rad per tangent axis per tick
constexpr double kRecheckProb = 0.3;     // fallback double-checking rate
constexpr size_t kVisitedMemory = 64;    // recent voxels a fallback recheck draws from

/// Kinematic searcher: a view position orbiting the grid plus a gaze
/// direction with bounded turn rate, steered by goal voxels. Coordinated
/// agents pick goals from the team classification when the gate lets them;
/// otherwise (and for random_scan) they fall back to seeded scanning with
/// occasional double-checks of recently visited spots.
class Agent {
 public:
  Agent(UserId id, PolicyKind kind, const std::vector<Waypoint>& waypoints, uint64_t seed,
        const VoxelGrid& grid, const std::vector<VoxelIndex>& active, double rate_hz,
        double explored_threshold)
      : id_(id),
        kind_(kind),
        waypoints_(waypoints),
        rng_(seed),
        grid_(grid),
        active_(active),
        dt_(1.0 / rate_hz),
        threshold_(explored_threshold) {
    const Aabb& b = grid.bounds();
    center_ = b.center();
    const Vec3 ext = b.extents();
    orbit_radius_ = 0.7 * std::hypot(ext.x, ext.y) + 0.3;
    azimuth_ = id == 0 ? 0.0 : M_PI;
    height_ = center_.z + 0.5 * ext.z + 0.2;
    pos_ = orbit_position();
    gaze_ = normalized(center_ - pos_);
    goal_point_ = center_;
    goal_deadline_ = 0;  // retarget on the first step
    next_toggle_time_ = 0;
    cos_turn_ = std::cos(kGazeTurnRate * dt_);
    sin_turn_ = std::sin(kGazeTurnRate * dt_);
  }

  struct Step {
    bool did_read = false;
    bool read_nonempty = false;
    Ray ray;
  };

  /// toggle_request fires before any read this tick, so the gate the read
  /// consults already reflects the request.
  template <typename ToggleFn>
  Step step(double t, const ViewGate& gate, const AttentionMap& own, ToggleFn&& toggle_request) {
    Step out;
    if (kind_ == PolicyKind::kScripted) {
      step_scripted(t, out);
      return out;
    }

    if (t >= next_toggle_time_) {
      toggle_want_ = !toggle_want_;
      toggle_request(toggle_want_);
      // Long on-periods, brief off-periods to manage visual load.
      next_toggle_time_ = t + (toggle_want_ ? rng_.uniform(40.0, 80.0) : rng_.uniform(4.0, 6.0));
    }

    const bool goal_done =
        grid_.in_range(goal_voxel_) && own.effective_value(goal_voxel_, t) >= threshold_;
    if (t >= goal_deadline_ || goal_done) retarget(t, gate, out);

    move_toward_goal();
    out.ray = {pos_, gaze_};
    return out;
  }

  void note_captured(const std::vector<VoxelDelta>& deltas) {
    for (const auto& [v, delta] : deltas) {
      if (visited_.size() < kVisitedMemory) {
        visited_.push_back(v);
      } else {
        visited_[visited_ring_++ % kVisitedMemory] = v;
      }
    }
  }

 private:
  Point3 orbit_position() const {
    return {center_.x + orbit_radius_ * std::cos(azimuth_),
            center_.y + orbit_radius_ * std::sin(azimuth_), height_};
  }

  void retarget(double t, const ViewGate& gate, Step& out) {
    std::vector<VoxelClass> classes;
    if (kind_ == PolicyKind::kCoordinated) {
      classes = gate.read(t);
      out.did_read = true;
      out.read_nonempty = !classes.empty();
    }

    VoxelIndex goal;
    if (!classes.empty()) {
      goal = pick_unexplored(classes);
      // Crawl the frontier: short budgets keep the aim moving over fresh
      // voxels instead of dwelling on ground that is already colored.
      goal_deadline_ = t + rng_.uniform(0.3, 0.9);
    } else {
      // No shared picture: seeded scanning, with occasional re-checks of
      // recently visited ground since nothing marks it as done.
      if (!visited_.empty() && rng_.next_double() < kRecheckProb) {
        goal = visited_[rng_.next_below(visited_.size())];
      } else {
        goal = active_[rng_.next_below(active_.size())];
      }
      goal_deadline_ = t + rng_.uniform(1.5, 3.0);
    }
    goal_voxel_ = goal;
    goal_point_ = grid_.voxel_center(goal);
  }

  /// Unexplored voxel the searcher can actually see from here: candidates
  /// whose line of sight lands on unexplored ground win, nearer ones
  /// preferred. Working the visible frontier keeps each searcher sweeping
  /// fresh territory, and since partner-explored ground is excluded the
  /// regions partition on their own.
  VoxelIndex pick_unexplored(const std::vector<VoxelClass>& classes) {
    std::vector<uint32_t> unexplored;
    unexplored.reserve(active_.size() / 4);
    std::unordered_set<uint64_t> unexplored_lin;
    for (uint32_t n = 0; n < classes.size(); ++n) {
      if (classes[n] == VoxelClass::kUnexplored) {
        unexplored.push_back(n);
        unexplored_lin.insert(grid_.linear(active_[n]));
      }
    }
    if (unexplored.empty()) return active_[rng_.next_below(active_.size())];

    const uint32_t samples = std::min<uint32_t>(24, static_cast<uint32_t>(unexplored.size()));
    uint32_t best = unexplored[rng_.next_below(unexplored.size())];
    int best_score = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (uint32_t c = 0; c < samples; ++c) {
      const uint32_t n = unexplored[rng_.next_below(unexplored.size())];
      const VoxelIndex v = active_[n];
      const Point3 target = grid_.voxel_center(v);
      const auto hit = nearest_active_hit(grid_, {pos_, normalized(target - pos_)});
      int score = 0;
      if (hit) {
        if (*hit == v) {
          score = 2;  // direct line of sight
        } else if (unexplored_lin.count(grid_.linear(*hit))) {
          score = 1;  // occluded, but by fresh ground
        }
      }
      const double d2 = length2(target - goal_point_);
      if (score > best_score || (score == best_score && d2 < best_d2)) {
        best_score = score;
        best_d2 = d2;
        best = n;
      }
    }
    return active_[best];
  }

  void move_toward_goal() {
    // Orbit toward the goal's side of the grid, bounded turn rate.
    const double want_az = std::atan2(goal_point_.y - center_.y, goal_point_.x - center_.x);
    double diff = want_az - azimuth_;
    while (diff > M_PI) diff -= 2 * M_PI;
    while (diff < -M_PI) diff += 2 * M_PI;
    azimuth_ += std::clamp(diff, -kOrbitTurnRate * dt_, kOrbitTurnRate * dt_);
    const double want_h = goal_point_.z + 0.25;
    height_ += std::clamp(want_h - height_, -kClimbRate * dt_, kClimbRate * dt_);
    pos_ = orbit_position();

    turn_gaze_toward(normalized(goal_point_ - pos_));
    jitter_gaze();
  }

  void turn_gaze_toward(Vec3 want) {
    const double align = dot(gaze_, want);
    if (align >= cos_turn_) {
      gaze_ = want;
      return;
    }
    // Rotate by the per-tick angle inside the plane spanned by gaze and want.
    const Vec3 ortho = normalized(want - gaze_ * align);
    gaze_ = normalized(gaze_ * cos_turn_ + ortho * sin_turn_);
  }

  void jitter_gaze() {
    Vec3 up{0, 0, 1};
    if (std::abs(gaze_.z) > 0.99) up = {1, 0, 0};
    const Vec3 t1 = normalized(cross(gaze_, up));
    const Vec3 t2 = cross(gaze_, t1);
    const double u = rng_.uniform(-kGazeJitter, kGazeJitter);
    const double v = rng_.uniform(-kGazeJitter, kGazeJitter);
    gaze_ = normalized(gaze_ + t1 * u + t2 * v);
  }

  void step_scripted(double t, Step& out) {
    const Waypoint& wp = waypoints_[wp_index_];
    const Vec3 to_wp = wp.position - pos_;
    const double dist = length(to_wp);
    const double reach = 1.5 * dt_;  // 1.5 m/s travel speed
    if (dist <= reach) {
      pos_ = wp.position;
      if (wp_arrived_ < 0) wp_arrived_ = t;
      if (t - wp_arrived_ >= wp.hold_s) {
        wp_index_ = (wp_index_ + 1) % waypoints_.size();
        wp_arrived_ = -1;
      }
    } else {
      pos_ = pos_ + to_wp * (reach / dist);
      wp_arrived_ = -1;
    }
    turn_gaze_toward(normalized(wp.look_at - pos_));
    out.ray = {pos_, gaze_};
  }

  UserId id_;
  PolicyKind kind_;
  std::vector<Waypoint> waypoints_;
  Rng rng_;
  const VoxelGrid& grid_;
  const std::vector<VoxelIndex>& active_;
  double dt_;
  double threshold_;

  Point3 center_;
  double orbit_radius_ = 1;
  double azimuth_ = 0;
  double height_ = 0;
  Point3 pos_;
  Vec3 gaze_{1, 0, 0};
  double cos_turn_ = 1, sin_turn_ = 0;

  VoxelIndex goal_voxel_{0, 0, 0};
  Point3 goal_point_;
  double goal_deadline_ = 0;

  bool toggle_want_ = false;
  double next_toggle_time_ = 0;

  std::vector<VoxelIndex> visited_;
  size_t visited_ring_ = 0;

  size_t wp_index_ = 0;
  double wp_arrived_ = -1;

};

struct PendingDelivery {
  double due;
  uint64_t order;
  UserId from;
  UserId to;
  SyncBatch batch;
  bool duplicate;
};

struct DeliveryLater {
  bool operator()(const PendingDelivery& a, const PendingDelivery& b) const {
    return a.due != b.due ? a.due > b.due : a.order > b.order;
  }
};

/// Everything a session run or replay rebuilds from the config and seed.
struct World {
  SessionConfig cfg;
  TriangleMesh mesh;
  Bvh bvh;
  VoxelGrid grid;
  std::vector<VoxelIndex> active;
  std::vector<Target> targets;
  std::vector<Replica> replicas;
  std::array<ViewGate, 2> gates;
  int64_t ticks;
  int64_t flush_every;

  explicit World(const SessionConfig& config)
      : cfg(config),
        mesh(generate_environment(config.environment, derive_seed(config.seed, "environment"))),
        bvh(build_bvh(mesh)),
        grid(voxelize(mesh, bvh,
                      config.dims_auto
                          ? VoxelGrid::proportional_dims(padded_grid_bounds(mesh_bounds(mesh)))
                          : config.dims)) {
    active = grid.active_indices();
    targets = place_targets(grid, cfg.target_fraction, derive_seed(cfg.seed, "targets"), mesh);
    const std::vector<UserId> users{0, 1};
    replicas.reserve(2);
    replicas.emplace_back(0, &grid, cfg.capture, users);
    replicas.emplace_back(1, &grid, cfg.capture, users);
    const bool caav = cfg.condition == ConditionKind::kCaav;
    gates[0] = {caav, false, &replicas[0], 1, cfg.explored_threshold, &active};
    gates[1] = {caav, false, &replicas[1], 0, cfg.explored_threshold, &active};
    ticks = std::llround(cfg.duration * cfg.capture.capture_rate_hz);
    if (ticks <= 0) throw ValidationError("session has no ticks");
    flush_every = std::max<int64_t>(
        1, std::llround(cfg.sync_interval_ms / 1000.0 * cfg.capture.capture_rate_hz));
  }

  DiscoveryRule rule() const { return {cfg.proximity, cfg.facing_cone_deg}; }

  MetricsContext metrics_context(double duration) const {
    MetricsContext ctx;
    ctx.active_count = grid.active_count();
    ctx.active_mask.resize(grid.dims().volume(), 0);
    for (const VoxelIndex& v : active) ctx.active_mask[grid.linear(v)] = 1;
    ctx.target_count = static_cast<uint32_t>(targets.size());
    ctx.explored_threshold = cfg.explored_threshold;
    ctx.duration = duration;
    ctx.n_users = 2;
    return ctx;
  }
};

}  // namespace

SessionResult run_session(const SessionConfig& cfg) {
  cfg.validate();
  World world(cfg);
  const bool caav = cfg.condition == ConditionKind::kCaav;

  std::array<Agent, 2> agents{
      Agent(0, cfg.policy[0], cfg.waypoints[0], derive_seed(cfg.seed, "agent", 0), world.grid,
            world.active, cfg.capture.capture_rate_hz, cfg.explored_threshold),
      Agent(1, cfg.policy[1], cfg.waypoints[1], derive_seed(cfg.seed, "agent", 1), world.grid,
            world.active, cfg.capture.capture_rate_hz, cfg.explored_threshold)};

  Rng net_rng(derive_seed(cfg.seed, "network"));
  std::priority_queue<PendingDelivery, std::vector<PendingDelivery>, DeliveryLater> queue;
  uint64_t order_counter = 0;

  Trace trace;
  trace.config_text = cfg.canonical_text();
  trace.config_digest = fnv1a64(trace.config_text);
  trace.grid_dims = world.grid.dims();
  trace.grid_active = world.grid.active_count();
  trace.target_count = static_cast<uint32_t>(world.targets.size());

  auto deliver_due = [&](double limit) {
    while (!queue.empty() && queue.top().due <= limit) {
      const PendingDelivery d = queue.top();
      queue.pop();
      world.replicas[d.to].apply_batch(d.batch);
      TraceEvent e;
      e.kind = EventKind::kDeliver;
      e.time = d.due;
      e.user = d.from;
      e.peer = d.to;
      e.seq = d.batch.seq;
      e.duplicate = d.duplicate;
      e.entry_count = static_cast<uint32_t>(d.batch.entries.size());
      trace.events.push_back(std::move(e));
    }
  };

  const DiscoveryRule rule = world.rule();
  for (int64_t tick = 0; tick < world.ticks; ++tick) {
    const double t = static_cast<double>(tick) / cfg.capture.capture_rate_hz;
    deliver_due(t);

    for (UserId u = 0; u < 2; ++u) {
      auto on_toggle = [&](bool want) {
        if (!caav || want == world.gates[u].toggle_on) return;  // inert without the display
        world.gates[u].toggle_on = want;
        TraceEvent e;
        e.kind = EventKind::kToggle;
        e.time = t;
        e.user = u;
        e.flag = want;
        trace.events.push_back(std::move(e));
      };
      Agent::Step step =
          agents[u].step(t, world.gates[u], world.replicas[u].own_map(), on_toggle);

      if (step.did_read) {
        TraceEvent e;
        e.kind = EventKind::kRead;
        e.time = t;
        e.user = u;
        e.flag = step.read_nonempty;
        trace.events.push_back(std::move(e));
      }

      const GazeSample sample{u, t, step.ray};
      TraceEvent gaze;
      gaze.kind = EventKind::kGaze;
      gaze.time = t;
      gaze.user = u;
      gaze.ray = step.ray;
      trace.events.push_back(std::move(gaze));

      const auto deltas = world.replicas[u].capture_own(sample);
      if (!deltas.empty()) {
        agents[u].note_captured(deltas);
        TraceEvent cap;
        cap.kind = EventKind::kCapture;
        cap.time = t;
        cap.user = u;
        cap.deltas.reserve(deltas.size());
        for (const auto& [v, delta] : deltas) cap.deltas.emplace_back(world.grid.linear(v), delta);
        trace.events.push_back(std::move(cap));
      }

      for (uint32_t index : check_discovery(sample, world.targets, rule)) {
        TraceEvent disc;
        disc.kind = EventKind::kDiscover;
        disc.time = t;
        disc.user = u;
        disc.target = index;
        trace.events.push_back(std::move(disc));
      }
    }

    if ((tick + 1) % world.flush_every == 0) {
      for (UserId u = 0; u < 2; ++u) {
        auto batch = world.replicas[u].flush(t);
        if (!batch) continue;
        TraceEvent e;
        e.kind = EventKind::kFlush;
        e.time = t;
        e.user = u;
        e.seq = batch->seq;
        e.entry_count = static_cast<uint32_t>(batch->entries.size());
        trace.events.push_back(std::move(e));

        const UserId peer = u == 0 ? 1 : 0;
        int copies = 1;
        if (cfg.network.duplication_rate > 0 &&
            net_rng.next_double() < cfg.network.duplication_rate) {
          copies = 2;
        }
        for (int c = 0; c < copies; ++c) {
          const double latency =
              net_rng.uniform(cfg.network.latency_min_ms, cfg.network.latency_max_ms) / 1000.0;
          queue.push({t + latency, order_counter++, u, peer, *batch, c > 0});
        }
      }
    }
  }

  deliver_due(std::numeric_limits<double>::infinity());
  TraceEvent end;
  end.kind = EventKind::kEnd;
  end.time = std::max(cfg.duration, trace.last_event_time());
  trace.events.push_back(end);
  trace.end_time = end.time;
  trace.has_digest = true;

  const MetricsContext ctx = world.metrics_context(cfg.duration);
  MetricsReport report = compute_report(trace, ctx);
  return {std::move(trace), std::move(report)};
}

MetricsReport replay(const Trace& trace) {
  const SessionConfig cfg = parse_single_config_text(trace.config_text);
  cfg.validate();
  World world(cfg);
  if (!(world.grid.dims() == trace.grid_dims) ||
      world.grid.active_count() != trace.grid_active ||
      world.targets.size() != trace.target_count) {
    throw ValidationError("trace does not match the regenerated environment");
  }
  const bool caav = cfg.condition == ConditionKind::kCaav;
  const DiscoveryRule rule = world.rule();

  std::array<bool, 2> toggle_on{false, false};
  std::map<std::pair<UserId, uint64_t>, SyncBatch> batches;
  // Events the last gaze recomputation predicts next (captures, discoveries).
  std::vector<TraceEvent> expected;
  size_t expected_at = 0;

  auto match_expected = [&](const TraceEvent& e) -> bool {
    if (expected_at >= expected.size()) return false;
    const TraceEvent& want = expected[expected_at];
    if (want.kind != e.kind || want.time != e.time || want.user != e.user) return false;
    if (e.kind == EventKind::kCapture && want.deltas != e.deltas) return false;
    if (e.kind == EventKind::kDiscover && want.target != e.target) return false;
    ++expected_at;
    return true;
  };

  double end_time = 0;
  for (const TraceEvent& e : trace.events) {
    if (e.kind == EventKind::kCapture || e.kind == EventKind::kDiscover) {
      if (!match_expected(e)) throw ValidationError("trace event does not match recomputation");
      continue;
    }
    if (expected_at != expected.size()) {
      throw ValidationError("trace is missing recomputed events");
    }
    expected.clear();
    expected_at = 0;

    switch (e.kind) {
      case EventKind::kToggle:
        if (!caav) throw ValidationError("toggle event in a no_CAAV trace");
        if (e.user >= 2) throw ValidationError("trace user out of range");
        toggle_on[e.user] = e.flag;
        break;
      case EventKind::kRead: {
        if (e.user >= 2) throw ValidationError("trace user out of range");
        const bool gate_open = caav && toggle_on[e.user];
        if (e.flag != gate_open) throw ValidationError("read gating mismatch in trace");
        break;
      }
      case EventKind::kGaze: {
        if (e.user >= 2) throw ValidationError("trace user out of range");
        const GazeSample sample{e.user, e.time, e.ray};
        const auto deltas = world.replicas[e.user].capture_own(sample);
        if (!deltas.empty()) {
          TraceEvent cap;
          cap.kind = EventKind::kCapture;
          cap.time = e.time;
          cap.user = e.user;
          for (const auto& [v, delta] : deltas) {
            cap.deltas.emplace_back(world.grid.linear(v), delta);
          }
          expected.push_back(std::move(cap));
        }
        for (uint32_t index : check_discovery(sample, world.targets, rule)) {
          TraceEvent disc;
          disc.kind = EventKind::kDiscover;
          disc.time = e.time;
          disc.user = e.user;
          disc.target = index;
          expected.push_back(std::move(disc));
        }
        break;
      }
      case EventKind::kFlush: {
        if (e.user >= 2) throw ValidationError("trace user out of range");
        auto batch = world.replicas[e.user].flush(e.time);
        if (!batch || batch->seq != e.seq || batch->entries.size() != e.entry_count) {
          throw ValidationError("flush event does not match recomputation");
        }
        batches.emplace(std::make_pair(e.user, e.seq), *batch);
        break;
      }
      case EventKind::kDeliver: {
        if (e.peer >= 2) throw ValidationError("trace user out of range");
        const auto it = batches.find({e.user, e.seq});
        if (it == batches.end()) throw ValidationError("delivery references unknown batch");
        if (it->second.entries.size() != e.entry_count) {
          throw ValidationError("delivery entry count mismatch");
        }
        world.replicas[e.peer].apply_batch(it->second);
        break;
      }
      case EventKind::kEnd:
        end_time = e.time;
        break;
      case EventKind::kCapture:
      case EventKind::kDiscover:
        break;  // handled above
    }
  }
  if (trace.has_digest && expected_at != expected.size()) {
    throw ValidationError("trace ends with unconfirmed recomputed events");
  }
  if (trace.has_digest && end_time <= 0) {
    throw ValidationError("complete trace is missing its end marker");
  }

  const double duration = trace.has_digest ? cfg.duration : trace.last_event_time();
  return compute_report(trace, world.metrics_context(duration));
}

}  // namespace heed
