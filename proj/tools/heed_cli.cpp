// Command-line front end: voxelize meshes, run and replay sessions, compute
// and compare metrics, sweep seeds.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "heed/bvh.hpp"
#include "heed/metrics.hpp"
#include "heed/session.hpp"
#include "heed/team_view.hpp"
#include "heed/trace.hpp"
#include "heed/util.hpp"
#include "heed/voxel_grid.hpp"

namespace {

int log_level() {
  const char* env = std::getenv("HEED_LOG");
  if (!env) return 0;
  const std::string v = env;
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

void info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[heed] " << msg << '\n';
}

std::string cell_name(const heed::SessionConfig& cfg) {
  return std::string(heed::environment_name(cfg.environment.kind)) + "_" +
         heed::condition_name(cfg.condition);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw heed::ValidationError("cannot write file: " + path);
  out << content;
}

heed::GridDims parse_dims_flag(const std::string& value, const heed::Aabb& bounds) {
  if (value == "auto" || value.empty()) return heed::VoxelGrid::proportional_dims(bounds);
  heed::GridDims dims;
  char extra;
  std::string with_spaces = value;
  for (char& c : with_spaces) {
    if (c == ',') c = ' ';
  }
  std::istringstream ds(with_spaces);
  if (ds >> dims.nx) {
    if (ds >> dims.ny >> dims.nz) {
      if (ds >> extra) throw heed::ValidationError("--dims: too many values");
      return dims;
    }
    if (ds.eof()) return heed::VoxelGrid::proportional_dims(bounds, dims.nx);
  }
  throw heed::ValidationError("--dims: expected N or nx,ny,nz");
}

int cmd_voxelize(const std::string& mesh_path, const std::string& dims_flag,
                 const std::string& out_path, bool quiet) {
  const heed::TriangleMesh mesh = heed::load_obj_file(mesh_path);
  const heed::Bvh bvh = heed::build_bvh(mesh);
  const heed::Aabb bounds = heed::padded_grid_bounds(heed::mesh_bounds(mesh));
  const heed::GridDims dims = parse_dims_flag(dims_flag, bounds);
  info("voxelizing " + std::to_string(mesh.triangle_count()) + " triangles");
  const heed::VoxelGrid grid = heed::voxelize(mesh, bvh, dims);

  std::ostringstream text;
  heed::write_grid_text(text, grid);
  if (out_path.empty()) {
    std::cout << text.str();
  } else {
    write_text_file(out_path, text.str());
    if (!quiet) {
      std::cout << "active " << grid.active_count() << " of " << dims.volume() << " voxels -> "
                << out_path << '\n';
    }
  }
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::string& format, bool quiet) {
  const heed::ConfigFile file = heed::parse_config_file(config_path);
  const std::vector<heed::SessionConfig> cells = file.expand();

  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  std::string csv = heed::report_csv_header(2);
  csv = "cell," + csv + '\n';
  for (const heed::SessionConfig& cfg : cells) {
    info("running cell " + cell_name(cfg));
    const heed::SessionResult result = heed::run_session(cfg);
    const std::string name = cell_name(cfg);
    csv += name + ',' + heed::report_csv_row(result.report) + '\n';
    if (!out_dir.empty()) {
      heed::write_trace_file(out_dir + "/" + name + ".trace", result.trace);
      std::ostringstream kv;
      heed::write_report_kv(kv, result.report);
      write_text_file(out_dir + "/" + name + ".report.kv", kv.str());
    }
    if (!quiet && format == "kv") {
      std::cout << "# " << name << '\n';
      heed::write_report_kv(std::cout, result.report);
    }
  }
  if (!out_dir.empty()) write_text_file(out_dir + "/report.csv", csv);
  if (!quiet && format == "csv") std::cout << csv;
  return 0;
}

int report_mismatch(const heed::MetricsReport& got, const heed::MetricsReport& want) {
  std::ostringstream a, b;
  heed::write_report_kv(a, got);
  heed::write_report_kv(b, want);
  std::cerr << "replay report differs from stored report\n--- replayed\n"
            << a.str() << "--- stored\n"
            << b.str();
  return 2;
}

int cmd_replay(const std::string& trace_path, const std::string& expect_path,
               const std::string& format, bool quiet) {
  const heed::Trace trace = heed::read_trace_file(trace_path);
  const heed::MetricsReport report = heed::replay(trace);
  if (!quiet) {
    if (format == "csv") {
      std::cout << heed::report_csv_header(2) << '\n' << heed::report_csv_row(report) << '\n';
    } else {
      heed::write_report_kv(std::cout, report);
    }
  }

  std::string expect = expect_path;
  if (expect.empty()) {
    // run writes <cell>.trace next to <cell>.report.kv; compare when present.
    std::string sibling = trace_path;
    const std::string suffix = ".trace";
    if (sibling.size() > suffix.size() &&
        sibling.compare(sibling.size() - suffix.size(), suffix.size(), suffix) == 0) {
      sibling = sibling.substr(0, sibling.size() - suffix.size()) + ".report.kv";
      if (std::filesystem::exists(sibling)) expect = sibling;
    }
  }
  if (!expect.empty()) {
    const heed::MetricsReport stored = heed::read_report_kv_file(expect);
    if (!(report == stored)) return report_mismatch(report, stored);
    info("replay matches stored report");
  }
  return 0;
}

int cmd_metrics(const std::string& trace_path, double threshold, const std::string& format,
                bool quiet) {
  const heed::Trace trace = heed::read_trace_file(trace_path);
  double duration = trace.end_time > 0 ? trace.end_time : trace.last_event_time();
  try {
    const heed::SessionConfig cfg = heed::parse_single_config_text(trace.config_text);
    threshold = threshold >= 0 ? threshold : cfg.explored_threshold;
    duration = trace.has_digest ? cfg.duration : trace.last_event_time();
  } catch (const heed::ValidationError&) {
    if (threshold < 0) threshold = 0.05;
  }
  const heed::MetricsContext ctx = heed::context_from_trace(trace, threshold, duration);
  const heed::MetricsReport report = heed::compute_report(trace, ctx);
  if (!quiet) {
    if (format == "csv") {
      std::cout << heed::report_csv_header(2) << '\n' << heed::report_csv_row(report) << '\n';
    } else {
      heed::write_report_kv(std::cout, report);
    }
  }
  return 0;
}

int cmd_compare(const std::string& path_a, const std::string& path_b) {
  const heed::MetricsReport a = heed::read_report_kv_file(path_a);
  const heed::MetricsReport b = heed::read_report_kv_file(path_b);

  auto opt = [](const std::optional<double>& v) {
    return v ? heed::fmt_g17(*v) : std::string("na");
  };
  auto row = [](const std::string& name, const std::string& va, const std::string& vb,
                const std::string& delta) {
    std::cout << name << '\t' << va << '\t' << vb << '\t' << delta << '\n';
  };
  auto num_row = [&](const std::string& name, double va, double vb) {
    row(name, heed::fmt_g17(va), heed::fmt_g17(vb), heed::fmt_g17(vb - va));
  };
  auto opt_row = [&](const std::string& name, const std::optional<double>& va,
                     const std::optional<double>& vb) {
    row(name, opt(va), opt(vb), va && vb ? heed::fmt_g17(*vb - *va) : "na");
  };

  std::cout << "metric\tA\tB\tB-A\n";
  num_row("targets_found_pct", a.targets_found_pct, b.targets_found_pct);
  for (size_t u = 0; u < std::min(a.coverage_pct_user.size(), b.coverage_pct_user.size()); ++u) {
    num_row("coverage_pct_user" + std::to_string(u), a.coverage_pct_user[u],
            b.coverage_pct_user[u]);
  }
  num_row("coverage_pct_team", a.coverage_pct_team, b.coverage_pct_team);
  opt_row("coverage_efficiency", a.coverage_efficiency, b.coverage_efficiency);
  opt_row("target_gain", a.target_gain, b.target_gain);
  opt_row("coverage_gain", a.coverage_gain, b.coverage_gain);
  num_row("normalized_redundancy", a.normalized_redundancy, b.normalized_redundancy);
  num_row("total_observations", static_cast<double>(a.total_observations),
          static_cast<double>(b.total_observations));
  num_row("unique_observations", static_cast<double>(a.unique_observations),
          static_cast<double>(b.unique_observations));
  for (size_t u = 0; u < std::min(a.toggle_on_fraction.size(), b.toggle_on_fraction.size());
       ++u) {
    num_row("toggle_on_fraction_user" + std::to_string(u), a.toggle_on_fraction[u],
            b.toggle_on_fraction[u]);
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, int seeds, const std::string& out_path,
              bool quiet) {
  if (seeds <= 0) throw heed::ValidationError("--seeds must be >= 1");
  const heed::ConfigFile file = heed::parse_config_file(config_path);
  if (file.env_both || file.cond_both) {
    throw heed::ValidationError("sweep needs a single-cell config (no 'both')");
  }

  std::vector<std::string> rows(seeds);
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < seeds; ++s) {
    heed::SessionConfig cfg = file.base;
    uint64_t mix = cfg.seed ^ (0x9e3779b97f4a7c15ull * (static_cast<uint64_t>(s) + 1));
    cfg.seed = heed::splitmix64(mix);
    const heed::SessionResult result = heed::run_session(cfg);
    rows[s] = std::to_string(s) + ',' + std::to_string(cfg.seed) + ',' +
              heed::report_csv_row(result.report) + '\n';
  }

  std::string csv = "seed_index,seed," + heed::report_csv_header(2) + '\n';
  for (const std::string& r : rows) csv += r;
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    write_text_file(out_path, csv);
    if (!quiet) std::cout << seeds << " sessions -> " << out_path << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attention-aware collaboration engine"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags like --format work after the subcommand

  std::string mesh_path, dims_flag = "auto", out_path, config_path, trace_path, expect_path;
  std::string report_a, report_b;
  std::string format = "kv";
  bool quiet = false;
  int seeds = 10;
  double threshold = -1;

  app.add_flag("--quiet", quiet, "suppress stdout reporting");
  app.add_option("--format", format, "kv or csv")->check(CLI::IsMember({"kv", "csv"}));

  auto* voxelize = app.add_subcommand("voxelize", "voxelize an OBJ mesh and export the grid");
  voxelize->add_option("mesh", mesh_path, "OBJ file")->required();
  voxelize->add_option("--dims", dims_flag, "auto, N (longest axis) or nx,ny,nz");
  voxelize->add_option("--out", out_path, "output file (default stdout)");

  auto* run = app.add_subcommand("run", "run the sessions described by a config");
  run->add_option("config", config_path, "session config file")->required();
  run->add_option("--out", out_path, "output directory for traces and reports");

  auto* replay = app.add_subcommand("replay", "re-execute a trace and verify it");
  replay->add_option("trace", trace_path, "trace file")->required();
  replay->add_option("--expect", expect_path, "report file the replay must match");

  auto* metrics = app.add_subcommand("metrics", "compute the report for a recorded trace");
  metrics->add_option("trace", trace_path, "trace file")->required();
  metrics->add_option("--threshold", threshold, "explored threshold override");

  auto* compare = app.add_subcommand("compare", "per-metric deltas between two reports");
  compare->add_option("reportA", report_a, "first report (kv)")->required();
  compare->add_option("reportB", report_b, "second report (kv)")->required();

  auto* sweep = app.add_subcommand("sweep", "run one config across many seeds");
  sweep->add_option("config", config_path, "session config file")->required();
  sweep->add_option("--seeds", seeds, "number of seeds");
  sweep->add_option("--out", out_path, "aggregate CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (voxelize->parsed()) return cmd_voxelize(mesh_path, dims_flag, out_path, quiet);
    if (run->parsed()) return cmd_run(config_path, out_path, format, quiet);
    if (replay->parsed()) return cmd_replay(trace_path, expect_path, format, quiet);
    if (metrics->parsed()) return cmd_metrics(trace_path, threshold, format, quiet);
    if (compare->parsed()) return cmd_compare(report_a, report_b);
    if (sweep->parsed()) return cmd_sweep(config_path, seeds, out_path, quiet);
  } catch (const heed::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
