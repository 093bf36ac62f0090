#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <sstream>

#include "heed/session.hpp"
#include "heed/util.hpp"
#include "oracles.hpp"

using namespace heed;

namespace {

SessionConfig quick_config(EnvironmentKind env, ConditionKind cond, double duration = 30) {
  SessionConfig cfg;
  cfg.environment.kind = env;
  cfg.condition = cond;
  cfg.duration = duration;
  cfg.seed = 11;
  return cfg;
}

std::string trace_text(const Trace& trace) {
  std::ostringstream out;
  write_trace(out, trace);
  return out.str();
}

}  // namespace

TEST_CASE("terrain generation") {
  EnvironmentSpec spec;
  spec.kind = EnvironmentKind::kTerrain;
  spec.terrain_n = 17;

  SUBCASE("flat when amplitude is zero") {
    spec.terrain_amplitude = 0.0;
    const TriangleMesh mesh = generate_environment(spec, 5);
    CHECK(mesh.triangles.size() == 2u * 16 * 16);
    for (const Point3& v : mesh.vertices) CHECK(v.z == 0.0);
  }
  SUBCASE("seed determinism and variation") {
    spec.terrain_amplitude = 0.5;
    const TriangleMesh a = generate_environment(spec, 5);
    const TriangleMesh b = generate_environment(spec, 5);
    const TriangleMesh c = generate_environment(spec, 6);
    CHECK(a.vertices == b.vertices);
    CHECK(a.vertices != c.vertices);
    double peak = 0;
    for (const Point3& v : a.vertices) peak = std::max(peak, v.z);
    CHECK(peak > 0.05);
    CHECK(peak <= spec.terrain_amplitude);
  }
}

TEST_CASE("scatterplot generation") {
  EnvironmentSpec spec;  // defaults: 100 points, icosahedral glyphs
  const TriangleMesh mesh = generate_environment(spec, 9);
  CHECK(mesh.triangles.size() == 100u * 20);
  CHECK(mesh.vertices.size() == 100u * 12);

  const TriangleMesh again = generate_environment(spec, 9);
  CHECK(mesh.vertices == again.vertices);

  // Glyphs stay inside the cube.
  const Aabb bounds = mesh_bounds(mesh);
  CHECK(bounds.min.x >= -0.5 - 1e-12);
  CHECK(bounds.max.x <= 0.5 + 1e-12);
}

TEST_CASE("place_targets") {
  VoxelGrid grid({{0, 0, 0}, {1, 1, 1}}, {10, 10, 10});
  for (uint32_t i = 0; i < 10; ++i) {
    for (uint32_t j = 0; j < 10; ++j) grid.set_active({i, j, 5});
  }
  REQUIRE(grid.active_count() == 100);
  TriangleMesh mesh;
  mesh.vertices = {{0, 0, 0.55}, {1, 0, 0.55}, {0, 1, 0.55}};
  mesh.triangles = {{0, 1, 2}};

  SUBCASE("five percent rule") {
    const auto targets = place_targets(grid, 0.05, 3, mesh);
    CHECK(targets.size() == 5);
    std::set<uint64_t> distinct;
    for (const Target& t : targets) {
      CHECK(grid.is_active(t.voxel));
      distinct.insert(grid.linear(t.voxel));
    }
    CHECK(distinct.size() == targets.size());
  }
  SUBCASE("fraction one selects every active voxel") {
    CHECK(place_targets(grid, 1.0, 3, mesh).size() == 100);
  }
  SUBCASE("same seed, same targets; different seed, different targets") {
    const auto a = place_targets(grid, 0.2, 3, mesh);
    const auto b = place_targets(grid, 0.2, 3, mesh);
    REQUIRE(a.size() == b.size());
    for (size_t n = 0; n < a.size(); ++n) CHECK(a[n].voxel == b[n].voxel);
    const auto c = place_targets(grid, 0.2, 4, mesh);
    bool same = true;
    for (size_t n = 0; n < a.size(); ++n) same = same && a[n].voxel == c[n].voxel;
    CHECK_FALSE(same);
  }
  SUBCASE("targets project onto the mesh surface") {
    for (const Target& t : place_targets(grid, 0.1, 3, mesh)) {
      CHECK(t.center.z == doctest::Approx(0.55));
    }
  }
  SUBCASE("zero-target fraction rejected") {
    CHECK_THROWS_AS(place_targets(grid, 0.001, 3, mesh), ValidationError);
  }
}

TEST_CASE("check_discovery rules") {
  DiscoveryRule rule;  // 0.10 m, 30 degrees
  std::vector<Target> targets(1);
  targets[0].voxel = {0, 0, 0};
  targets[0].center = {1, 0, 0};

  SUBCASE("ray through the center discovers") {
    GazeSample s{0, 1.0, {{0, 0, 0}, {1, 0, 0}}};
    const auto found = check_discovery(s, targets, rule);
    REQUIRE(found.size() == 1);
    CHECK(targets[0].discovered_by == 0);
    CHECK(targets[0].discovery_time == 1.0);
  }
  SUBCASE("closest approach at 0.15 m stays hidden") {
    GazeSample s{0, 1.0, {{0, 0.15, 0}, {1, 0, 0}}};
    CHECK(check_discovery(s, targets, rule).empty());
    CHECK_FALSE(targets[0].discovered_by.has_value());
  }
  SUBCASE("close approach inside 0.10 m discovers") {
    GazeSample s{0, 1.0, {{0, 0.08, 0}, {1, 0, 0}}};
    CHECK(check_discovery(s, targets, rule).size() == 1);
  }
  SUBCASE("target behind the viewer stays hidden") {
    GazeSample s{0, 1.0, {{2, 0, 0}, {1, 0, 0}}};
    CHECK(check_discovery(s, targets, rule).empty());
  }
  SUBCASE("outside the facing cone stays hidden") {
    // Up close, a sidelong glance passes within 10 cm but 45 degrees off.
    GazeSample s{0, 1.0, {{0.88, 0, 0}, normalized({1, 1, 0})}};
    const Vec3 to_target = targets[0].center - s.ray.origin;
    const double along = dot(to_target, s.ray.direction);
    const double miss = std::sqrt(length2(to_target) - along * along);
    REQUIRE(miss <= rule.proximity);  // proximity alone would discover it
    const double angle =
        std::acos(dot(normalized(to_target), s.ray.direction)) * 180.0 / M_PI;
    REQUIRE(angle > rule.facing_cone_deg);
    CHECK(check_discovery(s, targets, rule).empty());
  }
  SUBCASE("first user in tick order wins ties") {
    GazeSample first{0, 1.0, {{0, 0, 0}, {1, 0, 0}}};
    GazeSample second{1, 1.0, {{0, 0.01, 0}, {1, 0, 0}}};
    CHECK(check_discovery(first, targets, rule).size() == 1);
    CHECK(check_discovery(second, targets, rule).empty());
    CHECK(targets[0].discovered_by == 0);
  }
}

TEST_CASE("config canonical text round trips") {
  SessionConfig cfg = quick_config(EnvironmentKind::kTerrain, ConditionKind::kNoCaav, 120);
  cfg.capture.influence_radius = 0.04;
  cfg.policy = {PolicyKind::kRandomScan, PolicyKind::kCoordinated};
  cfg.network.duplication_rate = 0.1;
  cfg.dims_auto = false;
  cfg.dims = {32, 32, 16};

  const SessionConfig back = parse_single_config_text(cfg.canonical_text());
  CHECK(back.canonical_text() == cfg.canonical_text());
  CHECK(back.digest() == cfg.digest());
}

TEST_CASE("config parsing errors") {
  SUBCASE("schema version") {
    std::istringstream in("heed-config v9\n");
    CHECK_THROWS_AS(parse_config(in), ValidationError);
  }
  SUBCASE("unknown key") {
    std::istringstream in("heed-config v1\nnot_a_key = 1\n");
    CHECK_THROWS_AS(parse_config(in), ValidationError);
  }
  SUBCASE("bad number") {
    std::istringstream in("heed-config v1\nduration_s = soon\n");
    CHECK_THROWS_AS(parse_config(in), ValidationError);
  }
  SUBCASE("comments and blank lines are fine") {
    std::istringstream in("heed-config v1\n# a comment\n\nseed = 9  # trailing\n");
    CHECK(parse_config(in).base.seed == 9);
  }
}

TEST_CASE("config matrix expansion") {
  std::istringstream in("heed-config v1\nenvironment = both\ncondition = both\n");
  const ConfigFile file = parse_config(in);
  const auto cells = file.expand();
  REQUIRE(cells.size() == 4);
  std::set<std::string> names;
  for (const SessionConfig& cell : cells) {
    names.insert(std::string(environment_name(cell.environment.kind)) + "/" +
                 condition_name(cell.condition));
  }
  CHECK(names.size() == 4);
}

TEST_CASE("session tick accounting at the default rate") {
  SessionConfig cfg = quick_config(EnvironmentKind::kScatterplot, ConditionKind::kNoCaav, 600);
  cfg.policy = {PolicyKind::kRandomScan, PolicyKind::kRandomScan};
  const SessionResult result = run_session(cfg);

  uint64_t gaze_per_user[2] = {0, 0};
  for (const TraceEvent& e : result.trace.events) {
    if (e.kind == EventKind::kGaze) ++gaze_per_user[e.user];
  }
  CHECK(gaze_per_user[0] == 6000);  // 600 s at 10 Hz
  CHECK(gaze_per_user[1] == 6000);
}

TEST_CASE("flush cadence follows the sync interval") {
  SessionConfig cfg = quick_config(EnvironmentKind::kScatterplot, ConditionKind::kNoCaav, 20);
  CHECK(cfg.sync_interval_ms >= 200);
  CHECK(cfg.sync_interval_ms <= 500);
  const SessionResult result = run_session(cfg);

  double prev = -1;
  for (const TraceEvent& e : result.trace.events) {
    if (e.kind != EventKind::kFlush || e.user != 0) continue;
    if (prev >= 0) {
      const double gap = e.time - prev;
      CHECK(gap >= cfg.sync_interval_ms / 1000.0 - 1e-9);
    }
    prev = e.time;
  }
  CHECK(prev > 0);  // flushes happened
}

TEST_CASE("identical config and seed give byte-identical traces") {
  for (ConditionKind cond : {ConditionKind::kCaav, ConditionKind::kNoCaav}) {
    SessionConfig cfg = quick_config(EnvironmentKind::kScatterplot, cond, 15);
    const std::string a = trace_text(run_session(cfg).trace);
    const std::string b = trace_text(run_session(cfg).trace);
    CHECK(a == b);

    cfg.seed += 1;
    const std::string c = trace_text(run_session(cfg).trace);
    CHECK(a != c);
  }
}

TEST_CASE("no_CAAV gates all team information") {
  SessionConfig cfg = quick_config(EnvironmentKind::kScatterplot, ConditionKind::kNoCaav, 40);
  const SessionResult result = run_session(cfg);

  uint64_t reads = 0;
  for (const TraceEvent& e : result.trace.events) {
    CHECK(e.kind != EventKind::kToggle);  // toggles are inert without the display
    if (e.kind == EventKind::kRead) {
      ++reads;
      CHECK_FALSE(e.flag);  // every read comes back empty
    }
  }
  CHECK(reads > 0);  // the policy kept asking
  CHECK(result.report.toggle_on_fraction[0] == 0.0);
  CHECK(result.report.toggle_on_fraction[1] == 0.0);
}

TEST_CASE("CAAV reads honor the toggle state") {
  SessionConfig cfg = quick_config(EnvironmentKind::kScatterplot, ConditionKind::kCaav, 120);
  const SessionResult result = run_session(cfg);

  bool toggle_on[2] = {false, false};
  uint64_t on_reads = 0, off_reads = 0;
  for (const TraceEvent& e : result.trace.events) {
    if (e.kind == EventKind::kToggle) {
      toggle_on[e.user] = e.flag;
    } else if (e.kind == EventKind::kRead) {
      CHECK(e.flag == toggle_on[e.user]);
      ++(toggle_on[e.user] ? on_reads : off_reads);
    }
  }
  CHECK(on_reads > 0);
  CHECK(off_reads > 0);  // off-periods really exercised the gate
  CHECK(result.report.toggle_on_fraction[0] > 0.5);
}

TEST_CASE("trace files round trip and replay equals the live report") {
  for (EnvironmentKind env : {EnvironmentKind::kScatterplot, EnvironmentKind::kTerrain}) {
    SessionConfig cfg = quick_config(env, ConditionKind::kCaav, 20);
    const SessionResult live = run_session(cfg);

    const std::string text = trace_text(live.trace);
    std::istringstream in(text);
    const Trace parsed = read_trace(in);
    CHECK(parsed.has_digest);
    CHECK(parsed.events.size() == live.trace.events.size());
    CHECK(trace_text(parsed) == text);

    const MetricsReport replayed = replay(parsed);
    CHECK(replayed == live.report);
  }
}

TEST_CASE("replay rejects inconsistent traces") {
  SessionConfig cfg = quick_config(EnvironmentKind::kScatterplot, ConditionKind::kCaav, 10);
  const SessionResult live = run_session(cfg);

  SUBCASE("tampered capture delta") {
    Trace doctored = live.trace;
    for (TraceEvent& e : doctored.events) {
      if (e.kind == EventKind::kCapture) {
        e.deltas[0].second += 0.25;
        break;
      }
    }
    CHECK_THROWS_AS(replay(doctored), ValidationError);
  }
  SUBCASE("config pointing at a different world") {
    Trace doctored = live.trace;
    SessionConfig other = cfg;
    other.seed += 1;
    doctored.config_text = other.canonical_text();
    doctored.config_digest = fnv1a64(doctored.config_text);
    CHECK_THROWS_AS(replay(doctored), ValidationError);
  }
}

TEST_CASE("trace file validation") {
  SessionConfig cfg = quick_config(EnvironmentKind::kScatterplot, ConditionKind::kNoCaav, 10);
  const SessionResult live = run_session(cfg);
  const std::string text = trace_text(live.trace);

  SUBCASE("corrupted digest is rejected") {
    std::string bad = text;
    bad[bad.size() - 2] = bad[bad.size() - 2] == '0' ? '1' : '0';
    std::istringstream in(bad);
    CHECK_THROWS_AS(read_trace(in), ValidationError);
  }
  SUBCASE("time regression is rejected") {
    // Swap the last two gaze lines, which carry different timestamps.
    std::vector<std::string> lines;
    std::istringstream split(text);
    std::string line;
    while (std::getline(split, line)) lines.push_back(line);
    size_t last_gaze = 0, prev_gaze = 0;
    for (size_t n = 0; n < lines.size(); ++n) {
      if (lines[n].rfind("gaze ", 0) == 0) {
        prev_gaze = last_gaze;
        last_gaze = n;
      }
    }
    REQUIRE(prev_gaze > 0);
    std::swap(lines[prev_gaze], lines[last_gaze]);
    std::string swapped;
    for (const std::string& l : lines) swapped += l + '\n';
    std::istringstream in(swapped);
    CHECK_THROWS_AS(read_trace(in), ValidationError);
  }
  SUBCASE("wrong schema version is rejected") {
    std::string bad = "heed-trace v2\n" + text.substr(text.find('\n') + 1);
    std::istringstream in(bad);
    CHECK_THROWS_AS(read_trace(in), ValidationError);
  }
}

TEST_CASE("truncated trace replays as a partial prefix") {
  SessionConfig cfg = quick_config(EnvironmentKind::kScatterplot, ConditionKind::kNoCaav, 12);
  const SessionResult live = run_session(cfg);
  const std::string text = trace_text(live.trace);

  // Cut 30% of the lines (and with them the digest line).
  std::vector<std::string> lines;
  std::istringstream split(text);
  std::string line;
  while (std::getline(split, line)) lines.push_back(line);
  std::string truncated;
  for (size_t n = 0; n + lines.size() / 3 < lines.size(); ++n) truncated += lines[n] + '\n';

  std::istringstream in(truncated);
  const Trace prefix = read_trace(in);
  CHECK_FALSE(prefix.has_digest);
  CHECK(prefix.events.size() < live.trace.events.size());

  const MetricsReport report = replay(prefix);
  CHECK(report.partial);

  // Prefix oracle: computing the report directly over the surviving events
  // (trace-header context, no regeneration) must agree field for field.
  const MetricsContext ctx =
      context_from_trace(prefix, cfg.explored_threshold, prefix.last_event_time());
  CHECK(report == compute_report(prefix, ctx));
}

TEST_CASE("scripted policy follows its waypoints") {
  SessionConfig cfg = quick_config(EnvironmentKind::kScatterplot, ConditionKind::kNoCaav, 10);
  cfg.policy = {PolicyKind::kScripted, PolicyKind::kRandomScan};
  cfg.waypoints[0] = {{{-1.2, 0, 0}, {0, 0, 0}, 4.0}, {{0, -1.2, 0.3}, {0, 0, 0}, 4.0}};
  const SessionResult result = run_session(cfg);

  // The scripted user holds still at waypoints, so consecutive gaze origins repeat.
  uint64_t holds = 0;
  std::optional<Point3> prev;
  for (const TraceEvent& e : result.trace.events) {
    if (e.kind != EventKind::kGaze || e.user != 0) continue;
    if (prev && *prev == e.ray.origin) ++holds;
    prev = e.ray.origin;
  }
  CHECK(holds > 20);
}

TEST_CASE("scripted policy requires waypoints") {
  SessionConfig cfg = quick_config(EnvironmentKind::kScatterplot, ConditionKind::kNoCaav, 10);
  cfg.policy = {PolicyKind::kScripted, PolicyKind::kRandomScan};
  CHECK_THROWS_AS(run_session(cfg), ValidationError);
}
