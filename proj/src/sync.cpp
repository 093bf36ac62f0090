#include "heed/sync.hpp"

#include <algorithm>
#include <cstring>
#include <queue>

#include "heed/util.hpp"

namespace heed {

namespace {

template <typename T>
void put_le(std::vector<uint8_t>& out, T value) {
  for (size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<uint8_t>(value >> (8 * b)));
}

void put_f64(std::vector<uint8_t>& out, double value) {
  uint64_t bits;
  std::memcpy(&bits, &value, sizeof bits);
  put_le(out, bits);
}

template <typename T>
T get_le(const std::vector<uint8_t>& in, size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ValidationError("batch truncated");
  T value = 0;
  for (size_t b = 0; b < sizeof(T); ++b) value |= static_cast<T>(in[pos + b]) << (8 * b);
  pos += sizeof(T);
  return value;
}

double get_f64(const std::vector<uint8_t>& in, size_t& pos) {
  const uint64_t bits = get_le<uint64_t>(in, pos);
  double value;
  std::memcpy(&value, &bits, sizeof value);
  return value;
}

}  // namespace

void validate_batch(const SyncBatch& batch) {
  if (batch.seq == 0) throw ValidationError("batch seq must be >= 1");
  for (const BatchEntry& e : batch.entries) {
    if (!(e.delta > 0)) throw ValidationError("batch delta must be > 0");
  }
}

std::vector<uint8_t> encode_batch(const SyncBatch& batch) {
  validate_batch(batch);
  std::vector<uint8_t> payload;
  payload.reserve(16 + batch.entries.size() * 22);
  put_le<uint32_t>(payload, batch.origin);
  put_le<uint64_t>(payload, batch.seq);
  put_le<uint32_t>(payload, static_cast<uint32_t>(batch.entries.size()));
  for (const BatchEntry& e : batch.entries) {
    put_le<uint16_t>(payload, e.i);
    put_le<uint16_t>(payload, e.j);
    put_le<uint16_t>(payload, e.k);
    put_f64(payload, e.delta);
    put_f64(payload, e.capture_time);
  }
  std::vector<uint8_t> out;
  out.reserve(4 + payload.size());
  put_le<uint32_t>(out, static_cast<uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

SyncBatch decode_batch(const std::vector<uint8_t>& bytes) {
  size_t pos = 0;
  const uint32_t payload_len = get_le<uint32_t>(bytes, pos);
  if (bytes.size() - pos != payload_len) throw ValidationError("batch length prefix mismatch");
  SyncBatch batch;
  batch.origin = get_le<uint32_t>(bytes, pos);
  batch.seq = get_le<uint64_t>(bytes, pos);
  const uint32_t count = get_le<uint32_t>(bytes, pos);
  batch.entries.reserve(count);
  for (uint32_t n = 0; n < count; ++n) {
    BatchEntry e;
    e.i = get_le<uint16_t>(bytes, pos);
    e.j = get_le<uint16_t>(bytes, pos);
    e.k = get_le<uint16_t>(bytes, pos);
    e.delta = get_f64(bytes, pos);
    e.capture_time = get_f64(bytes, pos);
    batch.entries.push_back(e);
  }
  if (pos != bytes.size()) throw ValidationError("trailing bytes after batch");
  validate_batch(batch);
  return batch;
}

Replica::Replica(UserId self, const VoxelGrid* grid, const CaptureConfig& cfg,
                 const std::vector<UserId>& users)
    : self_(self), grid_(grid), cfg_(cfg), own_(self, grid, cfg) {
  for (UserId u : users) {
    mirrors_.emplace(u, AttentionMap(u, grid, cfg));
    applied_seq_[u] = 0;
  }
  if (!mirrors_.count(self)) throw ValidationError("replica owner missing from user list");
}

const AttentionMap& Replica::mirror(UserId user) const {
  const auto it = mirrors_.find(user);
  if (it == mirrors_.end()) throw ValidationError("unknown user mirror");
  return it->second;
}

uint64_t Replica::applied_seq(UserId user) const {
  const auto it = applied_seq_.find(user);
  return it == applied_seq_.end() ? 0 : it->second;
}

void Replica::queue_pending(VoxelIndex v, double delta, double t) {
  auto [it, fresh] = pending_.try_emplace(grid_->linear(v));
  PendingAcc& acc = it->second;
  if (fresh) {
    acc.value = delta;
  } else {
    // Same decay-accumulate arithmetic as the maps, so a coalesced entry is
    // equivalent to the individual deltas at any later read time.
    double decayed = acc.value * decay_factor(t - acc.last_time, cfg_.half_life);
    if (decayed < cfg_.epsilon_floor) decayed = 0.0;
    acc.value = decayed + delta;
  }
  acc.last_time = t;
}

std::vector<VoxelDelta> Replica::capture_own(const GazeSample& sample) {
  if (sample.user != self_) throw ValidationError("sample user does not own this replica");
  const auto deltas = capture(own_, *grid_, sample, cfg_);
  for (const auto& [v, delta] : deltas) queue_pending(v, delta, sample.time);
  return deltas;
}

void Replica::record_local(VoxelIndex v, double delta, double t) {
  own_.apply_delta(v, delta, t);
  queue_pending(v, delta, t);
}

std::optional<SyncBatch> Replica::flush(double) {
  if (pending_.empty()) return std::nullopt;
  SyncBatch batch;
  batch.origin = self_;
  batch.seq = next_seq_++;
  batch.entries.reserve(pending_.size());
  for (const auto& [lin, acc] : pending_) {
    const VoxelIndex v = grid_->from_linear(lin);
    batch.entries.push_back({static_cast<uint16_t>(v.i), static_cast<uint16_t>(v.j),
                             static_cast<uint16_t>(v.k), acc.value, acc.last_time});
  }
  pending_.clear();
  apply_batch(batch);  // self-mirror follows the same path as every peer
  return batch;
}

void Replica::apply_entries(const SyncBatch& batch) {
  AttentionMap& target = mirrors_.at(batch.origin);
  for (const BatchEntry& e : batch.entries) {
    target.apply_delta({e.i, e.j, e.k}, e.delta, e.capture_time);
  }
  applied_seq_[batch.origin] = batch.seq;
}

void Replica::apply_batch(const SyncBatch& batch) {
  validate_batch(batch);
  if (!mirrors_.count(batch.origin)) throw ValidationError("batch from unknown user");
  uint64_t& applied = applied_seq_[batch.origin];
  if (batch.seq <= applied) return;  // duplicate
  if (batch.seq != applied + 1) {
    out_of_order_[batch.origin].emplace(batch.seq, batch);  // buffered until contiguous
    return;
  }
  apply_entries(batch);
  auto& buffer = out_of_order_[batch.origin];
  while (!buffer.empty() && buffer.begin()->first == applied + 1) {
    apply_entries(buffer.begin()->second);
    buffer.erase(buffer.begin());
  }
}

std::map<UserId, std::vector<double>> Replica::snapshot_synced(double t) const {
  std::map<UserId, std::vector<double>> out;
  for (const auto& [user, map] : mirrors_) out.emplace(user, map.snapshot(t));
  return out;
}

std::vector<NetEvent> simulate_network(std::vector<Replica>& replicas,
                                       const NetworkModel& network, const Schedule& schedule,
                                       uint64_t seed) {
  Rng rng = Rng::stream(seed, "network");
  std::vector<NetEvent> log;

  struct Delivery {
    double time;
    uint64_t order;  // global tiebreak for deterministic processing
    size_t dest;
    SyncBatch batch;
    bool duplicate;
    double min_capture;
  };
  auto later = [](const Delivery& a, const Delivery& b) {
    return a.time != b.time ? a.time > b.time : a.order > b.order;
  };
  std::priority_queue<Delivery, std::vector<Delivery>, decltype(later)> deliveries(later);
  uint64_t order_counter = 0;

  std::vector<ScheduledCapture> captures = schedule.captures;
  std::stable_sort(captures.begin(), captures.end(),
                   [](const ScheduledCapture& a, const ScheduledCapture& b) {
                     return a.time != b.time ? a.time < b.time : a.user < b.user;
                   });

  double horizon = schedule.settle_time;
  for (const auto& c : captures) horizon = std::max(horizon, c.time);
  const double interval = schedule.flush_interval_ms / 1000.0;
  std::map<UserId, double> min_capture_pending;
  // Per-destination FIFO floor when in-order delivery is requested.
  std::map<std::pair<size_t, size_t>, double> fifo_floor;

  auto send_batch = [&](size_t origin_idx, const SyncBatch& batch, double now,
                        double min_capture) {
    for (size_t dest = 0; dest < replicas.size(); ++dest) {
      if (dest == origin_idx) continue;
      int copies = 1;
      if (network.duplication_rate > 0 && rng.next_double() < network.duplication_rate) {
        copies = 2;
      }
      for (int c = 0; c < copies; ++c) {
        double latency = rng.uniform(network.latency_min_ms, network.latency_max_ms) / 1000.0;
        double at = now + latency;
        if (network.per_sender_in_order) {
          double& floor = fifo_floor[{origin_idx, dest}];
          at = std::max(at, floor);
          floor = at;
        }
        deliveries.push({at, order_counter++, dest, batch, c > 0, min_capture});
      }
    }
  };

  auto drain_until = [&](double t) {
    while (!deliveries.empty() && deliveries.top().time <= t) {
      Delivery d = deliveries.top();
      deliveries.pop();
      replicas[d.dest].apply_batch(d.batch);
      log.push_back({NetEvent::kDeliver, d.time, d.batch.origin, replicas[d.dest].id(),
                     d.batch.seq, d.duplicate, static_cast<uint32_t>(d.batch.entries.size()),
                     d.min_capture});
    }
  };

  size_t next_capture = 0;
  double now = 0;
  double next_flush = interval;
  while (next_capture < captures.size() || now < horizon + interval) {
    const double capture_t =
        next_capture < captures.size() ? captures[next_capture].time : 1e300;
    const double step_t = std::min(capture_t, next_flush);
    drain_until(step_t);
    now = step_t;

    if (capture_t <= next_flush && next_capture < captures.size()) {
      const auto& c = captures[next_capture++];
      size_t idx = 0;
      for (; idx < replicas.size(); ++idx) {
        if (replicas[idx].id() == c.user) break;
      }
      if (idx == replicas.size()) throw ValidationError("capture for unknown replica");
      replicas[idx].record_local(c.voxel, c.delta, c.time);
      auto [it, fresh] = min_capture_pending.try_emplace(c.user, c.time);
      if (!fresh) it->second = std::min(it->second, c.time);
      log.push_back({NetEvent::kCapture, c.time, c.user, c.user, 0, false, 1, c.time});
    } else {
      for (size_t idx = 0; idx < replicas.size(); ++idx) {
        const UserId user = replicas[idx].id();
        const auto mc = min_capture_pending.find(user);
        const double min_capture = mc == min_capture_pending.end() ? now : mc->second;
        if (auto batch = replicas[idx].flush(now)) {
          log.push_back({NetEvent::kFlush, now, user, user, batch->seq,
                         false, static_cast<uint32_t>(batch->entries.size()), min_capture});
          send_batch(idx, *batch, now, min_capture);
          min_capture_pending.erase(user);
        }
      }
      next_flush += interval;
      if (next_capture >= captures.size() && now >= horizon) break;
    }
  }

  drain_until(1e300);  // quiescence: everything outstanding lands
  return log;
}

}  // namespace heed
