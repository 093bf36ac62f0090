#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "heed/trace.hpp"

namespace heed {

/// Coordination metrics for one session. Percentages are in [0, 100].
struct MetricsReport {
  double targets_found_pct = 0;
  std::vector<double> coverage_pct_user;  // one entry per user
  double coverage_pct_team = 0;
  std::optional<double> coverage_efficiency;  // absent when team coverage is 0
  std::optional<double> target_gain;          // absent when no user found anything
  std::optional<double> coverage_gain;
  double normalized_redundancy = 0;  // [0,1]; 0 when there are no observations
  uint64_t total_observations = 0;
  uint64_t unique_observations = 0;
  std::vector<double> toggle_on_fraction;  // per user, fraction of session time
  bool partial = false;

  bool operator==(const MetricsReport&) const = default;
};

/// target percentage over coverage percentage; absent when coverage is 0.
std::optional<double> coverage_efficiency(double target_pct, double coverage_pct);

/// 1 minus the normalized Shannon entropy of per-voxel observation counts.
/// 0 = perfectly even spread, 1 = all observations on one voxel (the
/// single-voxel case is defined as 1). Throws ValidationError when empty.
double normalized_redundancy(const std::vector<uint64_t>& counts);

/// Redundancy over an observation multiset of (user, voxel) pairs.
double normalized_redundancy_observations(
    const std::vector<std::pair<UserId, uint64_t>>& observations);

struct GainResult {
  std::optional<double> target_gain;
  std::optional<double> coverage_gain;
};

/// Everything compute_report needs beyond the trace itself. The active mask
/// may stay empty for data-aware traces, where every captured voxel is
/// active by construction.
struct MetricsContext {
  uint64_t active_count = 0;
  std::vector<uint8_t> active_mask;  // indexed by linear voxel id; empty = all captured
  uint32_t target_count = 0;
  double explored_threshold = 0.05;
  double duration = 0;  // denominator for toggle fractions
  uint32_t n_users = 2;

  bool voxel_active(uint64_t lin) const {
    return active_mask.empty() || (lin < active_mask.size() && active_mask[lin] != 0);
  }
};

/// Team metric over the best individual: team targets found over the best
/// single user's count, and likewise for coverage. Denominator 0 -> absent.
GainResult gains(const Trace& trace, const MetricsContext& ctx);

/// total = capture deltas landing on active voxels; unique = distinct voxels
/// among them, team-wide.
std::pair<uint64_t, uint64_t> observation_counts(const Trace& trace, const MetricsContext& ctx);

/// Full report from a trace. Coverage counts a voxel as explored when its
/// cumulative (undecayed) captured attention reaches the threshold; the
/// decayed maps drive the live display, the log drives the session metrics.
MetricsReport compute_report(const Trace& trace, const MetricsContext& ctx);

/// Context reconstructed from the trace's own header (grid meta, targets).
MetricsContext context_from_trace(const Trace& trace, double explored_threshold,
                                  double duration);

void write_report_kv(std::ostream& out, const MetricsReport& report);
MetricsReport read_report_kv(std::istream& in);
MetricsReport read_report_kv_file(const std::string& path);

std::string report_csv_header(uint32_t n_users);
std::string report_csv_row(const MetricsReport& report);

}  // namespace heed
