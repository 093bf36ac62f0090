#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "heed/attention.hpp"
#include "heed/voxel_grid.hpp"

namespace heed {

struct BatchEntry {
  uint16_t i = 0, j = 0, k = 0;
  double delta = 0;         // > 0, attention units
  double capture_time = 0;  // session-relative seconds
};

/// One user's attention increments between two flushes. Sequence numbers are
/// per-origin and contiguous; an empty entry list is a heartbeat.
struct SyncBatch {
  UserId origin = 0;
  uint64_t seq = 0;
  std::vector<BatchEntry> entries;
};

/// Wire encoding, little-endian, length-prefixed:
///   u32 payload bytes | u32 origin | u64 seq | u32 entry_count |
///   entries: u16 i, u16 j, u16 k, f64 delta, f64 capture_time
std::vector<uint8_t> encode_batch(const SyncBatch& batch);

/// Throws ValidationError on truncated or malformed input.
SyncBatch decode_batch(const std::vector<uint8_t>& bytes);

/// Validates invariants (seq >= 1, deltas > 0); throws on violation.
void validate_batch(const SyncBatch& batch);

/// One participant's replica: the locally writable map plus one mirror per
/// user (self included). Mirrors change only through batch application, in
/// (origin, seq, entry index) order, so every replica that has seen the same
/// batches holds bitwise-identical mirror state. The own map is the
/// real-time view and runs ahead of the self-mirror by at most one flush
/// interval.
class Replica {
 public:
  Replica(UserId self, const VoxelGrid* grid, const CaptureConfig& cfg,
          const std::vector<UserId>& users);

  UserId id() const { return self_; }
  const AttentionMap& own_map() const { return own_; }
  const AttentionMap& mirror(UserId user) const;
  uint64_t applied_seq(UserId user) const;
  uint64_t next_seq() const { return next_seq_; }
  size_t pending_delta_count() const { return pending_.size(); }

  /// Captures one gaze sample into the own map and queues the deltas for the
  /// next flush. Returns the applied deltas.
  std::vector<VoxelDelta> capture_own(const GazeSample& sample);

  /// Queues a raw local delta (applies it to the own map too).
  void record_local(VoxelIndex v, double delta, double t);

  /// Drains pending deltas into a batch with the next sequence number, or
  /// returns nothing when idle. The batch is self-applied to the own mirror
  /// through the same path peers use.
  std::optional<SyncBatch> flush(double now);

  /// Applies a batch: duplicates are no-ops, gaps are buffered until the
  /// sequence becomes contiguous. Throws ValidationError on malformed input.
  void apply_batch(const SyncBatch& batch);

  /// Effective values of every user's mirror at time t (the synchronized
  /// view used for convergence checks).
  std::map<UserId, std::vector<double>> snapshot_synced(double t) const;

 private:
  void apply_entries(const SyncBatch& batch);
  void queue_pending(VoxelIndex v, double delta, double t);

  UserId self_;
  const VoxelGrid* grid_;
  CaptureConfig cfg_;
  AttentionMap own_;
  std::map<UserId, AttentionMap> mirrors_;
  std::map<UserId, uint64_t> applied_seq_;
  std::map<UserId, std::map<uint64_t, SyncBatch>> out_of_order_;
  // Pending deltas coalesce per voxel with the same decay-accumulate
  // arithmetic the maps use, keyed by voxel for a deterministic drain order.
  struct PendingAcc {
    double value = 0;
    double last_time = 0;
  };
  std::map<uint64_t, PendingAcc> pending_;
  uint64_t next_seq_ = 1;
};

/// Simulated transport: seeded latency range, optional per-sender ordering,
/// optional duplicate deliveries. Delivery is reliable (no loss).
struct NetworkModel {
  double latency_min_ms = 50;
  double latency_max_ms = 150;
  bool per_sender_in_order = false;
  double duplication_rate = 0.0;
};

struct ScheduledCapture {
  double time = 0;
  UserId user = 0;
  VoxelIndex voxel;
  double delta = 1.0;
};

struct Schedule {
  std::vector<ScheduledCapture> captures;  // any order; sorted internally
  double flush_interval_ms = 300;
  double settle_time = 0;  // extra quiet time before the final drain
};

struct NetEvent {
  enum Kind { kCapture, kFlush, kDeliver } kind;
  double time = 0;
  UserId origin = 0;
  UserId dest = 0;  // kDeliver only
  uint64_t seq = 0;
  bool duplicate = false;
  uint32_t entry_count = 0;
  double min_capture_time = 0;  // oldest capture carried by the batch
};

/// Drives captures, periodic flushes and seeded deliveries until quiescence;
/// every batch reaches every peer exactly once plus scheduled duplicates.
/// Deterministic for a fixed seed. Returns the full event log.
std::vector<NetEvent> simulate_network(std::vector<Replica>& replicas,
                                       const NetworkModel& network, const Schedule& schedule,
                                       uint64_t seed);

}  // namespace heed
