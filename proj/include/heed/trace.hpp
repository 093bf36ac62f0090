#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "heed/attention.hpp"
#include "heed/voxel_grid.hpp"

namespace heed {

enum class EventKind : uint8_t {
  kGaze,      // pose sample emitted by a user
  kCapture,   // deltas the sample applied (linear voxel id, delta)
  kToggle,    // reveal toggle switched on/off
  kRead,      // classification read; flag records whether data came back
  kFlush,     // batch left the origin replica
  kDeliver,   // batch arrived at a peer replica
  kDiscover,  // target found
  kEnd,       // session end marker
};

struct TraceEvent {
  EventKind kind = EventKind::kEnd;
  double time = 0;
  UserId user = 0;

  Ray ray;                                           // kGaze
  std::vector<std::pair<uint64_t, double>> deltas;   // kCapture
  bool flag = false;                                 // kToggle on, kRead nonempty
  UserId peer = 0;                                   // kDeliver destination
  uint64_t seq = 0;                                  // kFlush, kDeliver
  bool duplicate = false;                            // kDeliver
  uint32_t entry_count = 0;                          // kFlush, kDeliver
  uint32_t target = 0;                               // kDiscover
};

/// Line-oriented event log of one session. The header embeds the canonical
/// config text so the file replays standalone; a trailing digest line makes
/// truncation and tampering detectable. Floats are printed with 17
/// significant digits and parse back bit-exactly.
struct Trace {
  uint32_t schema = 1;
  std::string config_text;      // canonical config, embedded verbatim
  uint64_t config_digest = 0;   // fnv1a64 of config_text
  GridDims grid_dims;
  uint64_t grid_active = 0;
  uint32_t target_count = 0;
  std::vector<TraceEvent> events;
  bool has_digest = false;      // false once a file was truncated
  double end_time = 0;

  /// Time of the last event (0 when empty).
  double last_event_time() const;
};

void write_trace(std::ostream& out, const Trace& trace);
void write_trace_file(const std::string& path, const Trace& trace);

/// Digest of the serialized trace (the value the trailing line carries).
uint64_t trace_digest(const Trace& trace);

/// Parses and validates: version line, event time monotonicity and, when the
/// digest line is present, content integrity. A missing digest line marks
/// the trace partial rather than failing. Throws ValidationError otherwise.
Trace read_trace(std::istream& in);
Trace read_trace_file(const std::string& path);

}  // namespace heed
