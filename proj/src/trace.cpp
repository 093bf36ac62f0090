#include "heed/trace.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "heed/util.hpp"

namespace heed {
namespace {

uint64_t parse_hex64(const std::string& tok) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(tok.c_str(), &end, 16);
  if (end == tok.c_str()) throw ValidationError("bad digest in trace: " + tok);
  return v;
}

}  // namespace
}  // namespace heed

namespace heed {

namespace {

const char* kind_tag(EventKind kind) {
  switch (kind) {
    case EventKind::kGaze: return "gaze";
    case EventKind::kCapture: return "cap";
    case EventKind::kToggle: return "tog";
    case EventKind::kRead: return "read";
    case EventKind::kFlush: return "flush";
    case EventKind::kDeliver: return "dlv";
    case EventKind::kDiscover: return "disc";
    case EventKind::kEnd: return "end";
  }
  return "?";
}

void append_event(std::string& out, const TraceEvent& e) {
  out += kind_tag(e.kind);
  out += ' ';
  out += fmt_g17(e.time);
  switch (e.kind) {
    case EventKind::kGaze:
      out += ' ' + std::to_string(e.user);
      for (double v : {e.ray.origin.x, e.ray.origin.y, e.ray.origin.z, e.ray.direction.x,
                       e.ray.direction.y, e.ray.direction.z}) {
        out += ' ' + fmt_g17(v);
      }
      break;
    case EventKind::kCapture:
      out += ' ' + std::to_string(e.user) + ' ' + std::to_string(e.deltas.size());
      for (const auto& [lin, delta] : e.deltas) {
        out += ' ' + std::to_string(lin) + ' ' + fmt_g17(delta);
      }
      break;
    case EventKind::kToggle:
    case EventKind::kRead:
      out += ' ' + std::to_string(e.user) + ' ' + std::string(e.flag ? "1" : "0");
      break;
    case EventKind::kFlush:
      out += ' ' + std::to_string(e.user) + ' ' + std::to_string(e.seq) + ' ' +
             std::to_string(e.entry_count);
      break;
    case EventKind::kDeliver:
      out += ' ' + std::to_string(e.user) + ' ' + std::to_string(e.peer) + ' ' +
             std::to_string(e.seq) + ' ' + std::string(e.duplicate ? "1" : "0") + ' ' +
             std::to_string(e.entry_count);
      break;
    case EventKind::kDiscover:
      out += ' ' + std::to_string(e.user) + ' ' + std::to_string(e.target);
      break;
    case EventKind::kEnd:
      break;
  }
  out += '\n';
}

std::string serialize_body(const Trace& trace) {
  std::string out;
  out += "heed-trace v" + std::to_string(trace.schema) + '\n';
  out += "config-digest ";
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(trace.config_digest));
  out += hex;
  out += '\n';
  out += "config-begin\n";
  out += trace.config_text;
  if (!trace.config_text.empty() && trace.config_text.back() != '\n') out += '\n';
  out += "config-end\n";
  out += "meta dims " + std::to_string(trace.grid_dims.nx) + ' ' +
         std::to_string(trace.grid_dims.ny) + ' ' + std::to_string(trace.grid_dims.nz) + '\n';
  out += "meta active " + std::to_string(trace.grid_active) + '\n';
  out += "meta targets " + std::to_string(trace.target_count) + '\n';
  for (const TraceEvent& e : trace.events) append_event(out, e);
  return out;
}

}  // namespace

double Trace::last_event_time() const { return events.empty() ? 0.0 : events.back().time; }

uint64_t trace_digest(const Trace& trace) { return fnv1a64(serialize_body(trace)); }

void write_trace(std::ostream& out, const Trace& trace) {
  const std::string body = serialize_body(trace);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(body)));
  out << body << "digest " << hex << '\n';
}

void write_trace_file(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write trace file: " + path);
  write_trace(out, trace);
}

namespace {

double parse_double(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw ValidationError("bad number in trace: " + tok);
  return v;
}

uint64_t parse_u64(const std::string& tok) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0') throw ValidationError("bad integer in trace: " + tok);
  return v;
}

}  // namespace

Trace read_trace(std::istream& in) {
  Trace trace;
  std::string body;
  std::string line;

  auto next_line = [&]() -> bool { return static_cast<bool>(std::getline(in, line)); };

  if (!next_line()) throw ValidationError("empty trace");
  if (line != "heed-trace v1") throw ValidationError("trace schema-version mismatch: " + line);
  body += line + '\n';

  if (!next_line() || line.rfind("config-digest ", 0) != 0) {
    throw ValidationError("trace missing config-digest");
  }
  trace.config_digest = parse_hex64(line.substr(14));
  body += line + '\n';

  if (!next_line() || line != "config-begin") throw ValidationError("trace missing config block");
  body += line + '\n';
  while (next_line() && line != "config-end") {
    trace.config_text += line + '\n';
    body += line + '\n';
  }
  if (line != "config-end") throw ValidationError("trace config block unterminated");
  body += line + '\n';
  if (fnv1a64(trace.config_text) != trace.config_digest) {
    throw ValidationError("trace config digest mismatch");
  }

  double prev_time = -std::numeric_limits<double>::infinity();
  bool saw_digest = false;
  uint64_t stated_digest = 0;

  while (next_line()) {
    if (line.rfind("digest ", 0) == 0) {
      stated_digest = parse_hex64(line.substr(7));
      saw_digest = true;
      break;
    }
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "meta") {
      std::string what;
      ls >> what;
      if (what == "dims") {
        ls >> trace.grid_dims.nx >> trace.grid_dims.ny >> trace.grid_dims.nz;
      } else if (what == "active") {
        ls >> trace.grid_active;
      } else if (what == "targets") {
        ls >> trace.target_count;
      } else {
        throw ValidationError("unknown trace meta: " + what);
      }
      body += line + '\n';
      continue;
    }

    TraceEvent e;
    std::string t_tok;
    if (!(ls >> t_tok)) throw ValidationError("truncated event line: " + line);
    e.time = parse_double(t_tok);
    if (e.time < prev_time) throw ValidationError("trace event time regression");
    prev_time = e.time;

    std::string tok;
    auto next_tok = [&]() {
      if (!(ls >> tok)) throw ValidationError("truncated event line: " + line);
      return tok;
    };

    if (tag == "gaze") {
      e.kind = EventKind::kGaze;
      e.user = static_cast<UserId>(parse_u64(next_tok()));
      e.ray.origin.x = parse_double(next_tok());
      e.ray.origin.y = parse_double(next_tok());
      e.ray.origin.z = parse_double(next_tok());
      e.ray.direction.x = parse_double(next_tok());
      e.ray.direction.y = parse_double(next_tok());
      e.ray.direction.z = parse_double(next_tok());
    } else if (tag == "cap") {
      e.kind = EventKind::kCapture;
      e.user = static_cast<UserId>(parse_u64(next_tok()));
      const uint64_t n = parse_u64(next_tok());
      for (uint64_t c = 0; c < n; ++c) {
        const uint64_t lin = parse_u64(next_tok());
        const double delta = parse_double(next_tok());
        e.deltas.emplace_back(lin, delta);
      }
    } else if (tag == "tog" || tag == "read") {
      e.kind = tag == "tog" ? EventKind::kToggle : EventKind::kRead;
      e.user = static_cast<UserId>(parse_u64(next_tok()));
      e.flag = parse_u64(next_tok()) != 0;
    } else if (tag == "flush") {
      e.kind = EventKind::kFlush;
      e.user = static_cast<UserId>(parse_u64(next_tok()));
      e.seq = parse_u64(next_tok());
      e.entry_count = static_cast<uint32_t>(parse_u64(next_tok()));
    } else if (tag == "dlv") {
      e.kind = EventKind::kDeliver;
      e.user = static_cast<UserId>(parse_u64(next_tok()));
      e.peer = static_cast<UserId>(parse_u64(next_tok()));
      e.seq = parse_u64(next_tok());
      e.duplicate = parse_u64(next_tok()) != 0;
      e.entry_count = static_cast<uint32_t>(parse_u64(next_tok()));
    } else if (tag == "disc") {
      e.kind = EventKind::kDiscover;
      e.user = static_cast<UserId>(parse_u64(next_tok()));
      e.target = static_cast<uint32_t>(parse_u64(next_tok()));
    } else if (tag == "end") {
      e.kind = EventKind::kEnd;
      trace.end_time = e.time;
    } else {
      throw ValidationError("unknown trace event: " + tag);
    }
    trace.events.push_back(std::move(e));
    body += line + '\n';
  }

  if (saw_digest) {
    if (fnv1a64(body) != stated_digest) throw ValidationError("trace digest mismatch");
    trace.has_digest = true;
  } else {
    trace.has_digest = false;  // truncated: prefix stays usable, flagged partial
  }
  return trace;
}

Trace read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open trace file: " + path);
  return read_trace(in);
}

}  // namespace heed
