#include "heed/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "heed/util.hpp"

namespace heed {

std::optional<double> coverage_efficiency(double target_pct, double coverage_pct) {
  if (coverage_pct <= 0) return std::nullopt;
  return target_pct / coverage_pct;
}

double normalized_redundancy(const std::vector<uint64_t>& counts) {
  uint64_t total = 0;
  uint64_t distinct = 0;
  for (uint64_t c : counts) {
    total += c;
    if (c > 0) ++distinct;
  }
  if (total == 0) throw ValidationError("redundancy needs at least one observation");
  if (distinct == 1) return 1.0;  // all mass on one voxel

  // Uniform counts mean entropy equals its maximum by definition; return the
  // exact zero rather than the float residue of ln-summation.
  uint64_t first_nonzero = 0;
  bool uniform = true;
  for (uint64_t c : counts) {
    if (c == 0) continue;
    if (first_nonzero == 0) {
      first_nonzero = c;
    } else if (c != first_nonzero) {
      uniform = false;
      break;
    }
  }
  if (uniform) return 0.0;

  double entropy = 0;
  for (uint64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    entropy -= p * std::log(p);
  }
  const double entropy_max = std::log(static_cast<double>(distinct));
  double r = 1.0 - entropy / entropy_max;
  return std::clamp(r, 0.0, 1.0);
}

double normalized_redundancy_observations(
    const std::vector<std::pair<UserId, uint64_t>>& observations) {
  std::unordered_map<uint64_t, uint64_t> per_voxel;
  for (const auto& [user, voxel] : observations) ++per_voxel[voxel];
  std::vector<uint64_t> counts;
  counts.reserve(per_voxel.size());
  for (const auto& [voxel, c] : per_voxel) counts.push_back(c);
  return normalized_redundancy(counts);
}

namespace {

/// Cumulative per-user capture totals and team-wide observation counts.
struct TraceAccumulation {
  std::vector<std::unordered_map<uint64_t, double>> cum_per_user;
  std::unordered_map<uint64_t, uint64_t> observation_counts;
  uint64_t total_observations = 0;
  std::vector<uint32_t> targets_per_user;
  uint32_t team_targets = 0;

  TraceAccumulation(const Trace& trace, const MetricsContext& ctx)
      : cum_per_user(ctx.n_users), targets_per_user(ctx.n_users, 0) {
    for (const TraceEvent& e : trace.events) {
      if (e.kind == EventKind::kCapture) {
        if (e.user >= ctx.n_users) throw ValidationError("trace user out of range");
        for (const auto& [lin, delta] : e.deltas) {
          cum_per_user[e.user][lin] += delta;
          if (ctx.voxel_active(lin)) {
            ++observation_counts[lin];
            ++total_observations;
          }
        }
      } else if (e.kind == EventKind::kDiscover) {
        if (e.user >= ctx.n_users) throw ValidationError("trace user out of range");
        ++targets_per_user[e.user];
        ++team_targets;
      }
    }
  }

  double coverage_pct(const std::unordered_map<uint64_t, double>& cum,
                      const MetricsContext& ctx) const {
    if (ctx.active_count == 0) return 0.0;
    uint64_t explored = 0;
    for (const auto& [lin, value] : cum) {
      if (ctx.voxel_active(lin) && value >= ctx.explored_threshold) ++explored;
    }
    return 100.0 * static_cast<double>(explored) / static_cast<double>(ctx.active_count);
  }

  std::unordered_map<uint64_t, double> team_cum() const {
    std::unordered_map<uint64_t, double> team;
    for (const auto& cum : cum_per_user) {
      for (const auto& [lin, value] : cum) team[lin] += value;
    }
    return team;
  }
};

}  // namespace

GainResult gains(const Trace& trace, const MetricsContext& ctx) {
  TraceAccumulation acc(trace, ctx);
  GainResult out;

  const uint32_t best_targets =
      *std::max_element(acc.targets_per_user.begin(), acc.targets_per_user.end());
  if (best_targets > 0) {
    out.target_gain = static_cast<double>(acc.team_targets) / best_targets;
  }

  double best_coverage = 0;
  for (const auto& cum : acc.cum_per_user) {
    best_coverage = std::max(best_coverage, acc.coverage_pct(cum, ctx));
  }
  if (best_coverage > 0) {
    out.coverage_gain = acc.coverage_pct(acc.team_cum(), ctx) / best_coverage;
  }
  return out;
}

std::pair<uint64_t, uint64_t> observation_counts(const Trace& trace, const MetricsContext& ctx) {
  TraceAccumulation acc(trace, ctx);
  return {acc.total_observations, acc.observation_counts.size()};
}

MetricsReport compute_report(const Trace& trace, const MetricsContext& ctx) {
  if (ctx.n_users == 0) throw ValidationError("report needs at least one user");
  TraceAccumulation acc(trace, ctx);
  MetricsReport report;

  report.targets_found_pct =
      ctx.target_count > 0 ? 100.0 * acc.team_targets / ctx.target_count : 0.0;

  report.coverage_pct_user.reserve(ctx.n_users);
  for (const auto& cum : acc.cum_per_user) {
    report.coverage_pct_user.push_back(acc.coverage_pct(cum, ctx));
  }
  report.coverage_pct_team = acc.coverage_pct(acc.team_cum(), ctx);
  report.coverage_efficiency =
      coverage_efficiency(report.targets_found_pct, report.coverage_pct_team);

  const GainResult g = gains(trace, ctx);
  report.target_gain = g.target_gain;
  report.coverage_gain = g.coverage_gain;

  report.total_observations = acc.total_observations;
  report.unique_observations = acc.observation_counts.size();
  if (acc.total_observations > 0) {
    std::vector<uint64_t> counts;
    counts.reserve(acc.observation_counts.size());
    for (const auto& [lin, c] : acc.observation_counts) counts.push_back(c);
    report.normalized_redundancy = normalized_redundancy(counts);
  }

  // Toggle-on fraction: integrate on-intervals against the session duration.
  report.toggle_on_fraction.assign(ctx.n_users, 0.0);
  const double horizon = ctx.duration > 0 ? ctx.duration : trace.last_event_time();
  if (horizon > 0) {
    std::vector<double> on_since(ctx.n_users, -1.0);
    std::vector<double> on_total(ctx.n_users, 0.0);
    for (const TraceEvent& e : trace.events) {
      if (e.kind != EventKind::kToggle) continue;
      if (e.user >= ctx.n_users) throw ValidationError("trace user out of range");
      if (e.flag && on_since[e.user] < 0) {
        on_since[e.user] = e.time;
      } else if (!e.flag && on_since[e.user] >= 0) {
        on_total[e.user] += e.time - on_since[e.user];
        on_since[e.user] = -1.0;
      }
    }
    for (uint32_t u = 0; u < ctx.n_users; ++u) {
      if (on_since[u] >= 0) on_total[u] += horizon - on_since[u];
      report.toggle_on_fraction[u] = std::clamp(on_total[u] / horizon, 0.0, 1.0);
    }
  }

  report.partial = !trace.has_digest;
  return report;
}

MetricsContext context_from_trace(const Trace& trace, double explored_threshold,
                                  double duration) {
  MetricsContext ctx;
  ctx.active_count = trace.grid_active;
  ctx.target_count = trace.target_count;
  ctx.explored_threshold = explored_threshold;
  ctx.duration = duration;
  ctx.n_users = 2;
  return ctx;
}

namespace {

std::string opt_str(const std::optional<double>& v) { return v ? fmt_g17(*v) : "na"; }

std::optional<double> parse_opt(const std::string& s) {
  if (s == "na") return std::nullopt;
  return std::strtod(s.c_str(), nullptr);
}

}  // namespace

void write_report_kv(std::ostream& out, const MetricsReport& report) {
  out << "heed-report v1\n";
  out << "users = " << report.coverage_pct_user.size() << '\n';
  out << "targets_found_pct = " << fmt_g17(report.targets_found_pct) << '\n';
  for (size_t u = 0; u < report.coverage_pct_user.size(); ++u) {
    out << "coverage_pct_user" << u << " = " << fmt_g17(report.coverage_pct_user[u]) << '\n';
  }
  out << "coverage_pct_team = " << fmt_g17(report.coverage_pct_team) << '\n';
  out << "coverage_efficiency = " << opt_str(report.coverage_efficiency) << '\n';
  out << "target_gain = " << opt_str(report.target_gain) << '\n';
  out << "coverage_gain = " << opt_str(report.coverage_gain) << '\n';
  out << "normalized_redundancy = " << fmt_g17(report.normalized_redundancy) << '\n';
  out << "total_observations = " << report.total_observations << '\n';
  out << "unique_observations = " << report.unique_observations << '\n';
  for (size_t u = 0; u < report.toggle_on_fraction.size(); ++u) {
    out << "toggle_on_fraction_user" << u << " = " << fmt_g17(report.toggle_on_fraction[u])
        << '\n';
  }
  out << "partial = " << (report.partial ? 1 : 0) << '\n';
}

MetricsReport read_report_kv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "heed-report v1") {
    throw ValidationError("report schema-version mismatch");
  }
  std::map<std::string, std::string> kv;
  std::vector<std::string> order;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t eq = line.find(" = ");
    if (eq == std::string::npos) throw ValidationError("bad report line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto need = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ValidationError("report missing key: " + key);
    return it->second;
  };

  MetricsReport report;
  const size_t users = std::strtoull(need("users").c_str(), nullptr, 10);
  report.targets_found_pct = std::strtod(need("targets_found_pct").c_str(), nullptr);
  for (size_t u = 0; u < users; ++u) {
    report.coverage_pct_user.push_back(
        std::strtod(need("coverage_pct_user" + std::to_string(u)).c_str(), nullptr));
  }
  report.coverage_pct_team = std::strtod(need("coverage_pct_team").c_str(), nullptr);
  report.coverage_efficiency = parse_opt(need("coverage_efficiency"));
  report.target_gain = parse_opt(need("target_gain"));
  report.coverage_gain = parse_opt(need("coverage_gain"));
  report.normalized_redundancy = std::strtod(need("normalized_redundancy").c_str(), nullptr);
  report.total_observations = std::strtoull(need("total_observations").c_str(), nullptr, 10);
  report.unique_observations = std::strtoull(need("unique_observations").c_str(), nullptr, 10);
  for (size_t u = 0; u < users; ++u) {
    report.toggle_on_fraction.push_back(
        std::strtod(need("toggle_on_fraction_user" + std::to_string(u)).c_str(), nullptr));
  }
  report.partial = need("partial") == "1";
  return report;
}

MetricsReport read_report_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open report file: " + path);
  return read_report_kv(in);
}

std::string report_csv_header(uint32_t n_users) {
  std::string out = "targets_found_pct";
  for (uint32_t u = 0; u < n_users; ++u) out += ",coverage_pct_user" + std::to_string(u);
  out += ",coverage_pct_team,coverage_efficiency,target_gain,coverage_gain";
  out += ",normalized_redundancy,total_observations,unique_observations";
  for (uint32_t u = 0; u < n_users; ++u) out += ",toggle_on_fraction_user" + std::to_string(u);
  out += ",partial";
  return out;
}

std::string report_csv_row(const MetricsReport& report) {
  std::string out = fmt_g17(report.targets_found_pct);
  for (double c : report.coverage_pct_user) out += ',' + fmt_g17(c);
  out += ',' + fmt_g17(report.coverage_pct_team);
  out += ',' + opt_str(report.coverage_efficiency);
  out += ',' + opt_str(report.target_gain);
  out += ',' + opt_str(report.coverage_gain);
  out += ',' + fmt_g17(report.normalized_redundancy);
  out += ',' + std::to_string(report.total_observations);
  out += ',' + std::to_string(report.unique_observations);
  for (double f : report.toggle_on_fraction) out += ',' + fmt_g17(f);
  out += ',' + std::string(report.partial ? "1" : "0");
  return out;
}

}  // namespace heed
