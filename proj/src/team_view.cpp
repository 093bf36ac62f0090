#include "heed/team_view.hpp"

#include <algorithm>
#include <ostream>

#include "heed/util.hpp"

namespace heed {

void RevisConfig::validate() const {
  if (threshold < 0) throw ValidationError("threshold must be >= 0");
  if (v_max <= threshold) throw ValidationError("v_max must exceed threshold");
}

const char* voxel_class_name(VoxelClass c) {
  switch (c) {
    case VoxelClass::kUnexplored: return "unexplored";
    case VoxelClass::kSelfOnly: return "self_only";
    case VoxelClass::kPartnerOnly: return "partner_only";
    case VoxelClass::kBoth: return "both";
  }
  return "unexplored";
}

std::vector<double> aggregate(const std::vector<std::vector<double>>& fields,
                              AggregationMethod method) {
  if (fields.empty()) throw ValidationError("aggregate needs at least one field");
  const size_t n = fields[0].size();
  for (const auto& f : fields) {
    if (f.size() != n) throw ValidationError("aggregate fields cover different grids");
  }

  std::vector<double> out(n, 0.0);
  const int64_t total = static_cast<int64_t>(n);
#pragma omp parallel for schedule(static)
  for (int64_t v = 0; v < total; ++v) {
    switch (method) {
      case AggregationMethod::kSum: {
        double acc = 0;
        for (const auto& f : fields) acc += f[v];
        out[v] = acc;
        break;
      }
      case AggregationMethod::kMax: {
        double acc = fields[0][v];
        for (const auto& f : fields) acc = std::max(acc, f[v]);
        out[v] = acc;
        break;
      }
      case AggregationMethod::kDifference: {
        double lo = fields[0][v], hi = fields[0][v];
        for (const auto& f : fields) {
          lo = std::min(lo, f[v]);
          hi = std::max(hi, f[v]);
        }
        out[v] = hi - lo;
        break;
      }
      case AggregationMethod::kCount: {
        double count = 0;
        for (const auto& f : fields) count += f[v] > 0 ? 1.0 : 0.0;
        out[v] = count;
        break;
      }
    }
  }
  return out;
}

std::vector<VoxelClass> classify(const std::vector<double>& local,
                                 const std::vector<double>& partner, const RevisConfig& cfg) {
  cfg.validate();
  if (local.size() != partner.size()) throw ValidationError("classify fields differ in size");
  std::vector<VoxelClass> out(local.size(), VoxelClass::kUnexplored);
  for (size_t v = 0; v < local.size(); ++v) {
    const bool self = local[v] >= cfg.threshold;
    const bool other = partner[v] >= cfg.threshold;
    out[v] = self && other  ? VoxelClass::kBoth
             : self         ? VoxelClass::kSelfOnly
             : other        ? VoxelClass::kPartnerOnly
                            : VoxelClass::kUnexplored;
  }
  return out;
}

double opacity(double v, const RevisConfig& cfg) {
  cfg.validate();
  if (v < cfg.threshold) return 0.0;
  return std::min(1.0, (v - cfg.threshold) / (cfg.v_max - cfg.threshold));
}

double coverage_fraction(const std::vector<double>& field, const VoxelGrid& grid,
                         double threshold) {
  if (field.size() != grid.dims().volume()) throw ValidationError("field does not cover grid");
  if (grid.active_count() == 0) throw ValidationError("grid has no active voxels");
  uint64_t explored = 0;
  for (const VoxelIndex& v : grid.active_indices()) {
    if (field[grid.linear(v)] >= threshold) ++explored;
  }
  return static_cast<double>(explored) / static_cast<double>(grid.active_count());
}

std::vector<std::vector<double>> blend_weights(const std::vector<std::vector<double>>& fields,
                                               const RevisConfig& cfg) {
  cfg.validate();
  const std::vector<double> total = aggregate(fields, AggregationMethod::kSum);
  std::vector<std::vector<double>> weights(fields.size(),
                                           std::vector<double>(total.size(), 0.0));
  for (size_t u = 0; u < fields.size(); ++u) {
    for (size_t v = 0; v < total.size(); ++v) {
      if (fields[u][v] >= cfg.threshold && total[v] > 0) {
        weights[u][v] = fields[u][v] / total[v];
      }
    }
  }
  return weights;
}

void write_revis(std::ostream& out, const VoxelGrid& grid, const std::vector<double>& local,
                 const std::vector<double>& partner, const RevisConfig& cfg) {
  const std::vector<VoxelClass> classes = classify(local, partner, cfg);
  const std::vector<double> team = aggregate({local, partner}, AggregationMethod::kSum);
  out << "heed-revis v1\n";
  out << "i j k class opacity local partner\n";
  for (const VoxelIndex& v : grid.active_indices()) {
    const uint64_t lin = grid.linear(v);
    out << v.i << ' ' << v.j << ' ' << v.k << ' ' << voxel_class_name(classes[lin]) << ' '
        << fmt_g17(opacity(team[lin], cfg)) << ' ' << fmt_g17(local[lin]) << ' '
        << fmt_g17(partner[lin]) << '\n';
  }
}

}  // namespace heed
