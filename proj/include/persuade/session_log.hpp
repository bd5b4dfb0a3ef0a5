#pragma once

// Line-delimited session logs and deterministic replay.
//
// A log is one JSON record per line:
//   {"record":"session", "session_id", "kb_id", "config": {...}}
//   {"record":"event", "session_id", "seq", "actor", "kind", "payload", "state_after", "ts"}
//   {"record":"summary", ...}            (only once the session is done)

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "persuade/analysis.hpp"
#include "persuade/dialogue.hpp"

namespace persuade {

Json to_json(const DialogueConfig& config);
DialogueConfig config_from_json(const Json& j);

Json to_json(const std::string& session_id, const Event& event);
Event event_from_json(const Json& j);

Json prompt_to_json(const Prompt& prompt);

/// Per-session record shaped like a one-participant GroupSummary plus the
/// intentions. Throws SessionNotDone.
Json session_summary(const Session& session);

struct SessionLog {
  std::string session_id;
  std::string kb_id;
  DialogueConfig config;
  std::vector<Event> events;
  std::optional<Json> summary;
};

class MalformedLog : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json session_header(const Session& session, const std::string& kb_id);
void write_session_log(const Session& session, const std::string& kb_id, std::ostream& out);
/// Throws MalformedLog on bad records, mixed sessions, or seq gaps.
SessionLog read_session_log(std::istream& in);
SessionLog load_session_log(const std::string& path);

class ReplayDivergence : public std::runtime_error {
 public:
  /// seq < 0 means the recomputed summary differs from the stored one.
  ReplayDivergence(std::int64_t seq, const std::string& what);
  std::int64_t seq() const { return seq_; }

 private:
  std::int64_t seq_;
};

/// Feeds the logged user events through a fresh session and checks that
/// every bot event matches (timestamps excluded) and that the stored summary,
/// if any, equals the recomputed one. Returns the rebuilt session with the
/// logged timestamps.
Session replay(const DialogueEngine& engine, const SessionLog& log);

}  // namespace persuade
